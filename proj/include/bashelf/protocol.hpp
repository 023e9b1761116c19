#pragma once

// Shot-by-shot execution of pulse sequences (pump, coherent pulses,
// detection) with AC-line trigger timing, and parameter sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <regex>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bashelf/dynamics.hpp"
#include "bashelf/error.hpp"
#include "bashelf/levels.hpp"
#include "bashelf/parallel.hpp"
#include "bashelf/random.hpp"
#include "bashelf/readout.hpp"

namespace bashelf {

struct PumpStep {
  PumpParams params;
};

struct IrPulse {
  double duration = 0.0;  // s
  double detuning = 0.0;  // Hz
};

struct MicrowavePulse {
  double duration = 0.0;  // s
  double detuning = 0.0;  // Hz
};

struct DetectStep {
  DetectionParams params;
};

struct WaitStep {
  double duration = 0.0;  // s
};

using PulseStep = std::variant<PumpStep, IrPulse, MicrowavePulse, DetectStep, WaitStep>;

inline double step_duration(const PulseStep& step) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PumpStep>) return s.params.duration;
        else if constexpr (std::is_same_v<T, DetectStep>) return s.params.window;
        else return s.duration;
      },
      step);
}

inline const char* step_name(const PulseStep& step) {
  constexpr const char* names[] = {"pump", "ir", "microwave", "detect", "wait"};
  return names[step.index()];
}

struct ImmediateTrigger {};
struct LineTrigger {
  double phase = 0.0;  // AC phase (rad) at the trigger epoch
};
using Trigger = std::variant<ImmediateTrigger, LineTrigger>;

struct PulseSequence {
  std::vector<PulseStep> steps;
  Trigger trigger = LineTrigger{};
  // Leading Pump steps run before the trigger epoch and do not move the AC phase.
  bool pump_before_trigger = true;

  void validate() const {
    std::size_t detects = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const double d = step_duration(steps[i]);
      if (!(d >= 0.0) || !std::isfinite(d))
        throw DomainError("PulseSequence: step " + std::to_string(i) + " has invalid duration");
      if (std::holds_alternative<DetectStep>(steps[i])) {
        ++detects;
        if (i + 1 != steps.size()) throw DomainError("PulseSequence: Detect must be the last step");
        validate_detection(std::get<DetectStep>(steps[i]).params);
      }
      if (const auto* p = std::get_if<PumpStep>(&steps[i])) {
        if (!(p->params.pol_impurity >= 0.0 && p->params.pol_impurity <= 1.0))
          throw DomainError("PulseSequence: pump pol_impurity outside [0, 1]");
        if (!(p->params.scatter_rate > 0.0)) throw DomainError("PulseSequence: pump scatter_rate must be > 0");
      }
    }
    if (detects > 1) throw DomainError("PulseSequence: at most one Detect step");
  }

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : steps) t += step_duration(s);
    return t;
  }

 private:
  static void validate_detection(const DetectionParams& p) { bashelf::validate(p); }
};

// Ion state along a single trajectory.
struct ShotState {
  bool shelved = false;
  std::size_t ground = kClockUpper;

  friend bool operator==(const ShotState&, const ShotState&) = default;
};

struct ShotRecord {
  ShotState final_state;
  std::int64_t photon_count = -1;  // -1 when the sequence has no Detect step
  Brightness classified = Brightness::Bright;
  std::uint64_t shot_index = 0;
  double elapsed = 0.0;  // s, wall clock at the end of the sequence

  friend bool operator==(const ShotRecord&, const ShotRecord&) = default;
};

// A sequence bound to physics parameters, with the pumped population
// distributions precomputed. Shots are independent and const-callable.
class ShotRunner {
 public:
  ShotRunner(PulseSequence seq, PhysicsParams params, std::vector<Sublevel> ground,
             AtomicConstants constants = {})
      : seq_(std::move(seq)), params_(std::move(params)), ground_(std::move(ground)),
        constants_(constants) {
    seq_.validate();
    if (ground_.size() != kGroundCount) throw DomainError("ShotRunner: expects the 8 S1/2 sublevels");
    if (!(params_.omega_optical > 0.0) || !(params_.omega_microwave > 0.0))
      throw DomainError("ShotRunner: Rabi frequencies must be > 0");
    for (const auto& step : seq_.steps) {
      if (const auto* p = std::get_if<PumpStep>(&step)) {
        const IonState pumped = optical_pump(IonState::uniform_ground(), p->params, ground_, constants_);
        std::array<double, kGroundCount> cdf{};
        double acc = 0.0;
        for (std::size_t i = 0; i < kGroundCount; ++i) cdf[i] = (acc += pumped.ground[i]);
        pump_cdfs_.push_back(cdf);
      }
    }
    trigger_offset_ = 0.0;
    if (seq_.pump_before_trigger) {
      for (const auto& step : seq_.steps) {
        if (!std::holds_alternative<PumpStep>(step)) break;
        trigger_offset_ += step_duration(step);
      }
    }
  }

  const PulseSequence& sequence() const { return seq_; }
  const PhysicsParams& params() const { return params_; }

  ShotRecord run(std::uint64_t master_seed, std::uint64_t point_index, std::uint64_t shot_index) const {
    Rng rng = shot_rng(master_seed, point_index, shot_index);
    ShotRecord rec;
    rec.shot_index = shot_index;

    AcLine ac = params_.ac_line;
    if (const auto* lt = std::get_if<LineTrigger>(&seq_.trigger)) ac.trigger_phase = lt->phase;
    else ac.trigger_phase = 2.0 * std::numbers::pi * uniform01(rng);

    ShotState state;
    std::optional<NoiseSample> quasi_static;
    double t = 0.0;
    std::size_t pump_no = 0;
    const double lifetime = params_.detection.shelf_lifetime;

    auto decay_while_shelved = [&](double dt) {
      if (!state.shelved) return;
      if (!shelf_decay(true, dt, lifetime, rng).still_shelved) {
        state.shelved = false;
        state.ground = static_cast<std::size_t>(uniform01(rng) * kGroundCount);
      }
    };

    for (const auto& step : seq_.steps) {
      const double d = step_duration(step);
      const double t_ac = t - trigger_offset_;
      if (std::holds_alternative<PumpStep>(step)) {
        // Cooling resets the ion to the ground manifold before pumping.
        const auto& cdf = pump_cdfs_[pump_no++];
        const double u = uniform01(rng) * cdf.back();
        state.shelved = false;
        state.ground = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        state.ground = std::min(state.ground, kGroundCount - 1);
      } else if (const auto* ir = std::get_if<IrPulse>(&step)) {
        if (state.shelved || state.ground == kClockUpper) {
          if (!quasi_static) quasi_static = sample_optical_noise(params_.omega_optical, params_, 0.0, rng);
          NoiseSample noise = *quasi_static;
          noise.detuning += ac_line_detuning(ac, t_ac);
          const double p = rabi_excite_with(noise, params_.omega_optical, ir->duration, ir->detuning);
          if (uniform01(rng) < p) {
            state.shelved = !state.shelved;
            state.ground = kClockUpper;
          }
        }
      } else if (const auto* mw = std::get_if<MicrowavePulse>(&step)) {
        if (!state.shelved && (state.ground == kClockLower || state.ground == kClockUpper)) {
          const double p = microwave_transfer(params_.omega_microwave, mw->duration, mw->detuning,
                                              params_.hyperfine_t2);
          if (uniform01(rng) < p) state.ground = state.ground == kClockLower ? kClockUpper : kClockLower;
        }
        decay_while_shelved(d);
      } else if (const auto* det = std::get_if<DetectStep>(&step)) {
        const auto sample = simulate_counts_detailed(state.shelved ? Brightness::Dark : Brightness::Bright,
                                                     det->params, rng);
        if (sample.decayed) {
          state.shelved = false;
          state.ground = static_cast<std::size_t>(uniform01(rng) * kGroundCount);
        }
        rec.photon_count = sample.count;
        rec.classified = classify(sample.count, det->params.threshold);
      } else {
        decay_while_shelved(d);
      }
      t += d;
    }
    if (rec.photon_count < 0) rec.classified = state.shelved ? Brightness::Dark : Brightness::Bright;
    rec.final_state = state;
    rec.elapsed = t;
    return rec;
  }

  // Runs shots [0, n) for one sweep point, split across `workers` threads.
  // Output is ordered by shot index and independent of the worker count.
  std::vector<ShotRecord> run_many(std::uint64_t master_seed, std::uint64_t point_index, std::size_t n,
                                   std::size_t workers = 1) const {
    std::vector<ShotRecord> out(n);
    parallel_for(n, workers, [&](std::size_t i) { out[i] = run(master_seed, point_index, i); });
    return out;
  }

 private:
  PulseSequence seq_;
  PhysicsParams params_;
  std::vector<Sublevel> ground_;
  AtomicConstants constants_;
  std::vector<std::array<double, kGroundCount>> pump_cdfs_;
  double trigger_offset_ = 0.0;
};

inline ShotRecord run_shot(const PulseSequence& seq, const PhysicsParams& params,
                           std::span<const Sublevel> ground, std::uint64_t shot_index,
                           std::uint64_t master_seed, std::uint64_t point_index = 0) {
  const ShotRunner runner(seq, params, std::vector<Sublevel>(ground.begin(), ground.end()));
  return runner.run(master_seed, point_index, shot_index);
}

enum class StepField { Duration, Detuning };

struct SweptParameter {
  std::size_t step = 0;
  StepField field = StepField::Duration;

  // Parses "steps[<k>].duration" or "steps[<k>].detuning".
  static SweptParameter parse(const std::string& path) {
    static const std::regex re(R"(steps\[(\d+)\]\.(duration|detuning))");
    std::smatch m;
    if (!std::regex_match(path, m, re))
      throw DomainError("swept parameter must look like steps[<k>].duration or steps[<k>].detuning, got '" +
                        path + "'");
    return {static_cast<std::size_t>(std::stoul(m[1].str())),
            m[2].str() == "duration" ? StepField::Duration : StepField::Detuning};
  }

  std::string to_string() const {
    return "steps[" + std::to_string(step) + "]." + (field == StepField::Duration ? "duration" : "detuning");
  }

  void apply(PulseSequence& seq, double value) const {
    if (step >= seq.steps.size()) throw DomainError("swept parameter: step index out of range");
    std::visit(
        [&](auto& s) {
          using T = std::decay_t<decltype(s)>;
          if (field == StepField::Duration) {
            if constexpr (std::is_same_v<T, PumpStep>) s.params.duration = value;
            else if constexpr (std::is_same_v<T, DetectStep>) s.params.window = value;
            else s.duration = value;
          } else {
            if constexpr (std::is_same_v<T, IrPulse> || std::is_same_v<T, MicrowavePulse>) s.detuning = value;
            else throw DomainError("swept parameter: only ir/microwave steps have a detuning");
          }
        },
        seq.steps[step]);
  }
};

struct SweepSpec {
  PulseSequence sequence;
  SweptParameter parameter;
  std::vector<double> values;
  std::size_t shots_per_point = 100;

  void validate() const {
    if (values.empty()) throw DomainError("SweepSpec: values must be non-empty");
    if (shots_per_point < 1) throw DomainError("SweepSpec: shots_per_point must be >= 1");
    PulseSequence probe = sequence;
    parameter.apply(probe, values.front());
    probe.validate();
  }
};

struct SweepPoint {
  double x = 0.0;
  double p_dark = 0.0;
  std::size_t shots = 0;
  double stderr_ = 0.0;

  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

inline std::vector<SweepPoint> run_sweep(const SweepSpec& spec, const PhysicsParams& params,
                                         std::span<const Sublevel> ground, std::uint64_t master_seed,
                                         std::size_t workers = 1) {
  spec.validate();
  const std::vector<Sublevel> levels(ground.begin(), ground.end());
  std::vector<SweepPoint> out;
  out.reserve(spec.values.size());
  for (std::size_t k = 0; k < spec.values.size(); ++k) {
    PulseSequence seq = spec.sequence;
    spec.parameter.apply(seq, spec.values[k]);
    const ShotRunner runner(std::move(seq), params, levels);
    const auto shots = runner.run_many(master_seed, k, spec.shots_per_point, workers);
    const auto dark = std::count_if(shots.begin(), shots.end(),
                                    [](const ShotRecord& r) { return r.classified == Brightness::Dark; });
    const double n = static_cast<double>(spec.shots_per_point);
    const double p = static_cast<double>(dark) / n;
    out.push_back({spec.values[k], p, spec.shots_per_point, std::sqrt(p * (1.0 - p) / n)});
  }
  return out;
}

// Sweep export: `x,p_dark,n_shots,stderr` header then one row per point.
inline void write_sweep_csv(std::ostream& os, std::span<const SweepPoint> points) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << "x,p_dark,n_shots,stderr\n" << std::setprecision(10);
  for (const auto& p : points) os << p.x << ',' << p.p_dark << ',' << p.shots << ',' << p.stderr_ << '\n';
  os.flags(flags);
  os.precision(prec);
}

}  // namespace bashelf
