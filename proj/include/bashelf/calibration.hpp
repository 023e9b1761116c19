#pragma once

// Monte-Carlo statistics behind the calibration knobs, and the knob table
// used by the `calibrate` command. Every statistic draws from fixed shot
// seeds, so it is a deterministic function of the knob value.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bashelf/analysis.hpp"
#include "bashelf/config.hpp"
#include "bashelf/dynamics.hpp"
#include "bashelf/levels.hpp"
#include "bashelf/parallel.hpp"
#include "bashelf/random.hpp"
#include "bashelf/readout.hpp"

namespace bashelf {

struct HistogramRun {
  Histogram bright;
  Histogram dark;
  ThresholdResult threshold;
};

// `shots` bright and `shots` shelved detections; bright shots use sweep
// point 0 of the seed tree, shelved shots point 1.
inline HistogramRun simulate_histograms(const DetectionParams& det, std::size_t shots, std::uint64_t seed,
                                        std::size_t workers = 1) {
  validate(det);
  if (shots < 1) throw DomainError("simulate_histograms: shots must be >= 1");
  std::vector<std::int64_t> bright(shots), dark(shots);
  parallel_for(shots, workers, [&](std::size_t i) {
    Rng rb = shot_rng(seed, 0, i);
    bright[i] = simulate_counts(Brightness::Bright, det, rb);
    Rng rd = shot_rng(seed, 1, i);
    dark[i] = simulate_counts(Brightness::Dark, det, rd);
  });
  HistogramRun run{build_histogram(bright), build_histogram(dark), {}};
  run.threshold = optimal_threshold(run.bright, run.dark);
  return run;
}

// Population of (F=2, mF=0) after pumping from a uniform ground mixture.
inline double pump_fidelity(const PhysicsParams& physics) {
  const auto ground = build_ground_manifold(physics.magnetic_field);
  return optical_pump(IonState::uniform_ground(), physics.pump, ground).ground[kClockUpper];
}

// Ensemble-averaged optical excitation probability at each pulse length,
// pulses starting at the trigger epoch. Point k draws its shots in sequence
// from stream (seed, k, 0).
inline std::vector<DataPoint> ensemble_rabi_curve(const PhysicsParams& physics, std::span<const double> times,
                                                  std::size_t shots, std::uint64_t seed, std::size_t workers = 1) {
  std::vector<DataPoint> out(times.size());
  parallel_for(times.size(), workers, [&](std::size_t k) {
    Rng rng = shot_rng(seed, k, 0);
    double sum = 0.0;
    for (std::size_t i = 0; i < shots; ++i) sum += rabi_evolve_noisy(physics.omega_optical, times[k], physics, rng);
    out[k] = {times[k], sum / static_cast<double>(shots), 0.0};
  });
  return out;
}

inline std::vector<double> default_optical_times() {
  std::vector<double> t(101);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 200e-6 * double(i) / 100.0;
  return t;
}

// Gaussian-envelope 1/e time of the fitted ensemble optical Rabi curve.
inline double fitted_optical_decay(const PhysicsParams& physics, std::uint64_t seed, std::size_t workers = 1,
                                   std::size_t shots = 4000) {
  const auto times = default_optical_times();
  const auto curve = ensemble_rabi_curve(physics, times, shots, seed, workers);
  return fit_rabi(curve).decay_time;
}

// Mean shelving probability of a nominal optical pi pulse that starts
// `t_start` after the line trigger.
inline double shelving_efficiency(const PhysicsParams& physics, double t_start, std::size_t shots,
                                  std::uint64_t seed) {
  const double t_pi = 0.5 / physics.omega_optical;
  Rng rng = shot_rng(seed, 0, 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < shots; ++i) sum += rabi_evolve_noisy(physics.omega_optical, t_pi, physics, rng, t_start);
  return sum / static_cast<double>(shots);
}

inline constexpr double kAcReferenceDelay = 800e-6;

inline double ac_efficiency_ratio(const PhysicsParams& physics, std::uint64_t seed, std::size_t shots = 20000) {
  return shelving_efficiency(physics, kAcReferenceDelay, shots, seed) /
         shelving_efficiency(physics, 0.0, shots, seed);
}

struct Knob {
  std::string name;
  std::string statistic_description;
  double default_target;
  std::pair<double, double> bounds;
  double tolerance;
  std::function<void(ExperimentConfig&, double)> set;
  std::function<double(const ExperimentConfig&, std::size_t workers)> statistic;
};

inline std::vector<Knob> calibration_knobs() {
  std::vector<Knob> knobs;
  knobs.push_back({"dark_rate", "optimal-threshold misclassifications over shots+shots detections", 13.0,
                   {0.0, 1050.0}, 0.5,
                   [](ExperimentConfig& c, double v) { c.physics.detection.dark_rate = v; },
                   [](const ExperimentConfig& c, std::size_t w) {
                     return double(simulate_histograms(c.physics.detection, c.shots, c.seed, w).threshold.errors());
                   }});
  knobs.push_back({"pol_impurity", "pumped (F=2, mF=0) population after physics.pump.duration", 0.93, {0.0, 1.0},
                   1e-4, [](ExperimentConfig& c, double v) { c.physics.pump.pol_impurity = v; },
                   [](const ExperimentConfig& c, std::size_t) { return pump_fidelity(c.physics); }});
  knobs.push_back({"ac_detuning_amplitude",
                   "pi-pulse shelving efficiency 800 us after the trigger relative to 0 us", 0.70, {0.0, 150e3},
                   1e-3, [](ExperimentConfig& c, double v) { c.physics.ac_line.detuning_amplitude = v; },
                   [](const ExperimentConfig& c, std::size_t) { return ac_efficiency_ratio(c.physics, c.seed); }});
  knobs.push_back({"mag_detuning_rms", "fitted envelope 1/e time of the 0-200 us ensemble optical Rabi curve",
                   120e-6, {0.0, 50e3}, 1e-6,
                   [](ExperimentConfig& c, double v) { c.physics.mag_detuning_rms = v; },
                   [](const ExperimentConfig& c, std::size_t w) { return fitted_optical_decay(c.physics, c.seed, w); }});
  knobs.push_back({"tau_gauss", "fitted envelope 1/e time of the 0-200 us ensemble optical Rabi curve", 120e-6,
                   {20e-6, 5e-3}, 1e-6, [](ExperimentConfig& c, double v) { c.physics.tau_gauss = v; },
                   [](const ExperimentConfig& c, std::size_t w) { return fitted_optical_decay(c.physics, c.seed, w); }});
  return knobs;
}

inline std::string knob_names() {
  std::string s;
  for (const auto& k : calibration_knobs()) s += (s.empty() ? "" : ", ") + k.name;
  return s;
}

inline const Knob& find_knob(const std::vector<Knob>& knobs, const std::string& name) {
  for (const auto& k : knobs)
    if (k.name == name) return k;
  throw ConfigError("unknown calibration knob '" + name + "'; valid knobs: " + knob_names());
}

}  // namespace bashelf
