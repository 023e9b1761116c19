#pragma once

// Batch commands behind the `bashelf` CLI. Each command writes its outputs
// under the configured output directory; every file starts with a comment
// line carrying the config hash and seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bashelf/analysis.hpp"
#include "bashelf/calibration.hpp"
#include "bashelf/config.hpp"
#include "bashelf/protocol.hpp"
#include "bashelf/readout.hpp"

namespace bashelf {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3, kExitBracketing = 4 };

struct RunOptions {
  std::size_t workers = 1;
};

// Hash of the effective config with output_dir excluded, so relocating the
// output does not change file contents.
inline std::uint64_t output_hash(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.output_dir.clear();
  return config_hash(c);
}

inline std::string header_line(const ExperimentConfig& cfg, const char* lead = "#") {
  std::ostringstream os;
  os << lead << " bashelf config_hash=" << std::hex << std::setw(16) << std::setfill('0') << output_hash(cfg)
     << std::dec << " seed=" << cfg.seed << '\n';
  return os.str();
}

inline std::filesystem::path write_output(const ExperimentConfig& cfg, const std::string& name,
                                          const std::string& body) {
  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
  return path;
}

struct HistogramOutcome {
  HistogramRun run;
  std::pair<double, double> fidelity_interval;
  std::vector<std::filesystem::path> files;
};

inline HistogramOutcome cmd_histogram(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  if (cfg.shots < 1) throw ConfigError("shots must be >= 1");
  HistogramOutcome res;
  res.run = simulate_histograms(cfg.physics.detection, cfg.shots, cfg.seed, opt.workers);
  const auto& th = res.run.threshold;
  res.fidelity_interval = wilson_interval(th.total_shots - th.errors(), th.total_shots, 1.96);

  auto hist_text = [&](const Histogram& h) {
    std::ostringstream os;
    os << header_line(cfg) << "# count,occurrences\n";
    h.write(os);
    return os.str();
  };
  std::ostringstream summary;
  summary << header_line(cfg) << std::setprecision(10)
          << "shots_per_case " << cfg.shots << '\n'
          << "bright_rate " << cfg.physics.detection.bright_rate << '\n'
          << "dark_rate " << cfg.physics.detection.dark_rate << '\n'
          << "window " << cfg.physics.detection.window << '\n'
          << "shelf_lifetime " << cfg.physics.detection.shelf_lifetime << '\n'
          << "threshold " << th.threshold << '\n'
          << "errors_bright " << th.errors_bright << '\n'
          << "errors_dark " << th.errors_dark << '\n'
          << "errors_total " << th.errors() << '\n'
          << "fidelity " << th.fidelity << '\n'
          << "fidelity_wilson95_low " << res.fidelity_interval.first << '\n'
          << "fidelity_wilson95_high " << res.fidelity_interval.second << '\n';
  res.files.push_back(write_output(cfg, "hist_bright.csv", hist_text(res.run.bright)));
  res.files.push_back(write_output(cfg, "hist_dark.csv", hist_text(res.run.dark)));
  res.files.push_back(write_output(cfg, "summary.txt", summary.str()));
  return res;
}

struct RabiScanOutcome {
  std::vector<SweepPoint> curve;
  std::optional<FitResult> fit;
  std::string fit_error;
  std::vector<std::filesystem::path> files;
};

inline std::vector<DataPoint> to_data_points(std::span<const SweepPoint> curve) {
  std::vector<DataPoint> pts;
  pts.reserve(curve.size());
  for (const auto& p : curve) pts.push_back({p.x, p.p_dark, p.stderr_});
  return pts;
}

inline RabiScanOutcome cmd_rabi_scan(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  if (!cfg.sweep) throw ConfigError("rabi-scan needs a \"sweep\" block in the config");
  RabiScanOutcome res;
  const auto ground = build_ground_manifold(cfg.physics.magnetic_field);
  res.curve = run_sweep(*cfg.sweep, cfg.physics, ground, cfg.seed, opt.workers);

  std::ostringstream curve;
  curve << header_line(cfg);
  write_sweep_csv(curve, res.curve);
  res.files.push_back(write_output(cfg, "curve.csv", curve.str()));

  std::ostringstream fit;
  fit << header_line(cfg) << "swept_parameter " << cfg.sweep->parameter.to_string() << '\n';
  try {
    res.fit = fit_rabi(to_data_points(res.curve));
    write_fit_report(fit, *res.fit);
  } catch (const DomainError& e) {
    res.fit_error = e.what();
    fit << "error " << e.what() << "\nconverged false\n";
  }
  res.files.push_back(write_output(cfg, "fit.txt", fit.str()));
  return res;
}

struct CalibrateOutcome {
  CalibrationResult result;
  ExperimentConfig calibrated;
  std::filesystem::path file;
};

inline CalibrateOutcome cmd_calibrate(const ExperimentConfig& cfg, const std::string& knob_name,
                                      std::optional<double> target, const RunOptions& opt = {}) {
  const auto knobs = calibration_knobs();
  const Knob& knob = find_knob(knobs, knob_name);
  const double goal = target.value_or(knob.default_target);

  auto statistic = [&](double v) {
    ExperimentConfig c = cfg;
    knob.set(c, v);
    return knob.statistic(c, opt.workers);
  };
  CalibrateOutcome res;
  res.result = calibrate_scalar(statistic, knob.name, goal, knob.bounds, knob.tolerance);
  res.calibrated = cfg;
  knob.set(res.calibrated, res.result.value);
  if (knob.name == "dark_rate") {
    const auto run = simulate_histograms(res.calibrated.physics.detection, cfg.shots, cfg.seed, opt.workers);
    res.calibrated.physics.detection.threshold = run.threshold.threshold;
    for (auto& step : res.calibrated.sequence.steps)
      if (auto* d = std::get_if<DetectStep>(&step)) {
        d->params.dark_rate = res.calibrated.physics.detection.dark_rate;
        d->params.threshold = run.threshold.threshold;
      }
    if (res.calibrated.sweep) res.calibrated.sweep->sequence = res.calibrated.sequence;
  }
  if (knob.name == "pol_impurity") {
    for (auto& step : res.calibrated.sequence.steps)
      if (auto* p = std::get_if<PumpStep>(&step)) p->params.pol_impurity = res.result.value;
    if (res.calibrated.sweep) res.calibrated.sweep->sequence = res.calibrated.sequence;
  }

  std::ostringstream os;
  os << std::setprecision(10) << header_line(cfg, "//") << "// calibrated " << knob.name << " = "
     << res.result.value << " (" << knob.statistic_description << ": target " << goal << ", achieved "
     << res.result.achieved << ", " << res.result.iterations << " bisection steps, "
     << (res.result.converged ? "within" : "NOT within") << " tolerance " << knob.tolerance << ")\n"
     << to_json(res.calibrated).dump(2) << '\n';
  res.file = write_output(cfg, "config.json", os.str());
  return res;
}

}  // namespace bashelf
