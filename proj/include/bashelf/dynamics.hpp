#pragma once

// Internal-state evolution: optical pumping rate equations, coherent
// two-level rotations with quasi-static noise, and shelf decay.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "bashelf/error.hpp"
#include "bashelf/levels.hpp"
#include "bashelf/random.hpp"

namespace bashelf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Gaussian FWHM -> standard deviation.
inline constexpr double kFwhmPerSigma = 2.355;

struct PumpParams {
  double scatter_rate = 1.0e6;   // photons/s
  double pol_impurity = 0.0109253; // non-pi fraction, split evenly into sigma+/-
  double duration = 100e-6;      // s
};

struct AcLine {
  double frequency = 60.0;           // Hz
  double detuning_amplitude = 0.0;   // Hz
  double trigger_phase = 0.0;        // rad
};

struct DetectionParams {
  double bright_rate = 2100.0;  // counts/s
  double dark_rate = 381.445;   // counts/s
  double window = 10e-3;        // s
  double shelf_lifetime = 35.0; // s
  std::int64_t threshold = 10;  // dark iff count <= threshold
};

struct PhysicsParams {
  double omega_optical = 50e3;     // Hz (cycles)
  double omega_microwave = 15e3;   // Hz (cycles)
  double tau_gauss = 120e-6;       // s, 1/e time of the Rabi-frequency-spread envelope
  double laser_linewidth = 10e3;   // Hz, Gaussian FWHM
  double mag_detuning_rms = 0.0;   // Hz
  double hyperfine_t2 = kInf;      // s
  double magnetic_field = 8.9;     // gauss
  AcLine ac_line{};
  PumpParams pump{};
  DetectionParams detection{};
};

// Ground populations (index per ground_index) plus the shelf.
struct IonState {
  std::array<double, kGroundCount> ground{};
  double shelved = 0.0;

  static IonState uniform_ground() {
    IonState s;
    s.ground.fill(1.0 / static_cast<double>(kGroundCount));
    return s;
  }

  double total() const {
    double t = shelved;
    for (double p : ground) t += p;
    return t;
  }
};

namespace detail {

using Matrix8 = std::array<std::array<double, kGroundCount>, kGroundCount>;

// Rate matrix A with dp/dt = A p; every column sums to zero.
inline Matrix8 pump_rate_matrix(const PumpParams& pump, std::span<const Sublevel> ground,
                                const AtomicConstants& constants) {
  Matrix8 a{};
  constexpr int kUpperF = 2;
  const double leak = constants.p12_branch_to_d32;
  const std::array<std::pair<Polarization, double>, 3> beams{{
      {Polarization::Pi, 1.0 - pump.pol_impurity},
      {Polarization::SigmaPlus, 0.5 * pump.pol_impurity},
      {Polarization::SigmaMinus, 0.5 * pump.pol_impurity},
  }};
  for (std::size_t i = 0; i < ground.size(); ++i) {
    for (const auto& [q, weight] : beams) {
      const Sublevel upper{Term::P12, kUpperF, ground[i].mF + delta_m(q), 0.0};
      if (weight <= 0.0 || !transition_allowed(ground[i], upper, q)) continue;
      const double rate = pump.scatter_rate * weight;
      a[i][i] -= rate;

      std::vector<std::size_t> channels;
      for (std::size_t k = 0; k < ground.size(); ++k) {
        const int dm = upper.mF - ground[k].mF;
        if (dm < -1 || dm > 1) continue;
        const Polarization back = dm == 0 ? Polarization::Pi
                                          : (dm > 0 ? Polarization::SigmaPlus : Polarization::SigmaMinus);
        if (transition_allowed(ground[k], upper, back)) channels.push_back(k);
      }
      for (std::size_t k : channels)
        a[k][i] += rate * (1.0 - leak) / static_cast<double>(channels.size());
      for (std::size_t k = 0; k < ground.size(); ++k)
        a[k][i] += rate * leak / static_cast<double>(ground.size());
    }
  }
  return a;
}

inline std::array<double, kGroundCount> apply(const Matrix8& a,
                                              const std::array<double, kGroundCount>& p) {
  std::array<double, kGroundCount> out{};
  for (std::size_t r = 0; r < kGroundCount; ++r)
    for (std::size_t c = 0; c < kGroundCount; ++c) out[r] += a[r][c] * p[c];
  return out;
}

}  // namespace detail

// Integrates the classical pumping rate equations with fixed-step RK4,
// step <= 1 / (20 * scatter_rate).
inline IonState optical_pump(const IonState& initial, const PumpParams& params,
                             std::span<const Sublevel> ground, const AtomicConstants& constants = {}) {
  if (ground.size() != kGroundCount) throw DomainError("optical_pump: expects the 8 S1/2 sublevels");
  if (initial.shelved != 0.0) throw DomainError("optical_pump: initial state has shelved population");
  if (!(params.pol_impurity >= 0.0 && params.pol_impurity <= 1.0))
    throw DomainError("optical_pump: pol_impurity outside [0, 1]");
  if (!(params.duration >= 0.0)) throw DomainError("optical_pump: negative duration");
  for (double p : initial.ground)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("optical_pump: population outside [0, 1]");
  if (std::abs(initial.total() - 1.0) > 1e-12) throw DomainError("optical_pump: input not normalized");
  if (params.duration == 0.0) return initial;
  if (!(params.scatter_rate > 0.0)) throw DomainError("optical_pump: scatter_rate must be > 0");

  const auto a = detail::pump_rate_matrix(params, ground, constants);
  const double max_step = 1.0 / (20.0 * params.scatter_rate);
  const auto steps = static_cast<std::size_t>(std::ceil(params.duration / max_step));
  const double h = params.duration / static_cast<double>(steps);

  auto p = initial.ground;
  auto axpy = [](const std::array<double, kGroundCount>& x, double s,
                 const std::array<double, kGroundCount>& y) {
    std::array<double, kGroundCount> out{};
    for (std::size_t i = 0; i < kGroundCount; ++i) out[i] = x[i] + s * y[i];
    return out;
  };
  for (std::size_t n = 0; n < steps; ++n) {
    const auto k1 = detail::apply(a, p);
    const auto k2 = detail::apply(a, axpy(p, 0.5 * h, k1));
    const auto k3 = detail::apply(a, axpy(p, 0.5 * h, k2));
    const auto k4 = detail::apply(a, axpy(p, h, k3));
    for (std::size_t i = 0; i < kGroundCount; ++i)
      p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  IonState out;
  out.ground = p;
  return out;
}

// Generalized two-level Rabi solution; delta and omega in cycles/s.
inline double rabi_excite(double delta, double omega, double t) {
  const double w2 = omega * omega + delta * delta;
  const double s = std::sin(std::numbers::pi * std::sqrt(w2) * t);
  return omega * omega / w2 * s * s;
}

// Per-shot quasi-static noise draw for one coherent pulse.
struct NoiseSample {
  double detuning = 0.0;     // Hz, total
  double rabi_scale = 1.0;   // multiplies the nominal Rabi frequency
};

inline double ac_line_detuning(const AcLine& ac, double t_pulse_start) {
  return ac.detuning_amplitude *
         std::sin(2.0 * std::numbers::pi * ac.frequency * t_pulse_start + ac.trigger_phase);
}

// Rabi-frequency relative spread giving an exp(-(t/tau)^2) envelope on the
// ensemble-averaged oscillation at frequency omega.
inline double rabi_spread_sigma(double omega, double tau_gauss) {
  if (!std::isfinite(tau_gauss)) return 0.0;
  return 1.0 / (std::numbers::sqrt2 * std::numbers::pi * tau_gauss * omega);
}

// Always consumes three normal variates so that streams stay aligned when a
// noise magnitude is varied (common random numbers during calibration).
inline NoiseSample sample_optical_noise(double omega, const PhysicsParams& params,
                                        double t_pulse_start, Rng& rng) {
  const double z_mag = standard_normal(rng);
  const double z_laser = standard_normal(rng);
  const double z_rabi = standard_normal(rng);
  NoiseSample n;
  n.detuning = params.mag_detuning_rms * z_mag + params.laser_linewidth / kFwhmPerSigma * z_laser +
               ac_line_detuning(params.ac_line, t_pulse_start);
  n.rabi_scale = 1.0 + rabi_spread_sigma(omega, params.tau_gauss) * z_rabi;
  return n;
}

inline double rabi_excite_with(const NoiseSample& noise, double omega, double t, double extra_detuning = 0.0) {
  if (t == 0.0) return 0.0;
  return rabi_excite(noise.detuning + extra_detuning, std::abs(omega * noise.rabi_scale), t);
}

// Single-shot excitation probability on the 1.76 um transition under
// quasi-static noise sampled for this shot.
inline double rabi_evolve_noisy(double omega, double t, const PhysicsParams& params, Rng& rng,
                                double t_pulse_start = 0.0, double nominal_detuning = 0.0) {
  if (!(omega > 0.0)) throw DomainError("rabi_evolve_noisy: omega must be > 0");
  if (!(t >= 0.0)) throw DomainError("rabi_evolve_noisy: t must be >= 0");
  const NoiseSample noise = sample_optical_noise(omega, params, t_pulse_start, rng);
  return rabi_excite_with(noise, omega, t, nominal_detuning);
}

// Clock-transition rotation probability, with optional phenomenological T2
// relaxing the transfer probability toward 1/2.
inline double microwave_transfer(double omega, double t, double delta, double t2) {
  if (t == 0.0) return 0.0;
  const double p = rabi_excite(delta, omega, t);
  if (!std::isfinite(t2)) return p;
  return 0.5 - (0.5 - p) * std::exp(-t / t2);
}

struct ShelfDecayResult {
  bool still_shelved = false;
  std::optional<double> decay_time;
};

inline double shelf_decay_probability(double dt, double lifetime) {
  if (!std::isfinite(lifetime)) return 0.0;
  return -std::expm1(-dt / lifetime);
}

inline ShelfDecayResult shelf_decay(bool is_shelved, double dt, double lifetime, Rng& rng) {
  if (!(dt >= 0.0)) throw DomainError("shelf_decay: dt must be >= 0");
  if (!(lifetime > 0.0)) throw DomainError("shelf_decay: lifetime must be > 0");
  if (!is_shelved || dt == 0.0 || !std::isfinite(lifetime)) return {is_shelved, std::nullopt};
  if (uniform01(rng) >= shelf_decay_probability(dt, lifetime)) return {true, std::nullopt};
  return {false, truncated_exponential(lifetime, dt, rng)};
}

}  // namespace bashelf
