// bashelf: batch front end for the 137Ba+ shelving-readout simulator.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "bashelf/bashelf.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> shots;
  std::size_t workers = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON, // comments allowed)")->required();
  cmd->add_option("--seed", f.seed, "Master seed override");
  cmd->add_option("--out", f.out, "Output directory override");
  cmd->add_option("--shots", f.shots, "Shots override (histogram cases and sweep points)");
  cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
}

bashelf::ExperimentConfig load(const CommonFlags& f) {
  auto cfg = bashelf::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.output_dir = *f.out;
  if (f.shots) {
    if (*f.shots < 1) throw bashelf::ConfigError("--shots must be >= 1");
    cfg.shots = *f.shots;
    if (cfg.sweep) cfg.sweep->shots_per_point = *f.shots;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"137Ba+ optical/hyperfine qubit shelving-readout simulator"};
  app.require_subcommand(1);

  CommonFlags hist_f, scan_f, cal_f, val_f;
  auto* hist = app.add_subcommand("histogram", "Bright/dark count histograms, optimal threshold and fidelity");
  add_common(hist, hist_f);
  auto* scan = app.add_subcommand("rabi-scan", "Run the configured sweep and fit a damped Rabi curve");
  add_common(scan, scan_f);
  auto* cal = app.add_subcommand("calibrate", "Bisect one noise knob onto a target statistic");
  add_common(cal, cal_f);
  std::string knob;
  std::optional<double> target;
  cal->add_option("--knob", knob, "One of: " + bashelf::knob_names())->required();
  cal->add_option("--target", target, "Target statistic (defaults per knob)");
  auto* val = app.add_subcommand("validate-config", "Parse and validate a config");
  add_common(val, val_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bashelf::kExitConfig;
  }

  try {
    bashelf::RunOptions opt;
    if (*hist) {
      const auto cfg = load(hist_f);
      opt.workers = hist_f.workers;
      const auto r = bashelf::cmd_histogram(cfg, opt);
      std::cout << "threshold " << r.run.threshold.threshold << "  errors " << r.run.threshold.errors() << "/"
                << r.run.threshold.total_shots << "  fidelity " << r.run.threshold.fidelity << '\n';
      for (const auto& p : r.files) std::cout << "wrote " << p.string() << '\n';
    } else if (*scan) {
      const auto cfg = load(scan_f);
      opt.workers = scan_f.workers;
      const auto r = bashelf::cmd_rabi_scan(cfg, opt);
      if (r.fit) {
        std::cout << "frequency " << r.fit->frequency << " Hz  decay_time " << r.fit->decay_time << " s  converged "
                  << (r.fit->converged ? "true" : "false") << '\n';
      } else {
        std::cerr << "fit failed: " << r.fit_error << '\n';
      }
      for (const auto& p : r.files) std::cout << "wrote " << p.string() << '\n';
    } else if (*cal) {
      const auto cfg = load(cal_f);
      opt.workers = cal_f.workers;
      const auto r = bashelf::cmd_calibrate(cfg, knob, target, opt);
      std::cout << r.result.knob << " = " << r.result.value << "  achieved " << r.result.achieved << " (target "
                << r.result.target << ")" << (r.result.converged ? "" : "  [tolerance not reached]") << '\n'
                << "wrote " << r.file.string() << '\n';
    } else if (*val) {
      const auto cfg = load(val_f);
      const auto ground = bashelf::build_ground_manifold(cfg.physics.magnetic_field);
      bashelf::ShotRunner runner(cfg.sequence, cfg.physics, ground);
      std::cout << "ok: " << cfg.sequence.steps.size() << " steps, total duration " << cfg.sequence.total_duration()
                << " s" << (cfg.sweep ? ", sweep of " + std::to_string(cfg.sweep->values.size()) + " points" : "")
                << '\n';
    }
  } catch (const bashelf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return bashelf::kExitConfig;
  } catch (const bashelf::BracketingError& e) {
    std::cerr << "calibration error: " << e.what() << '\n';
    return bashelf::kExitBracketing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bashelf::kExitRuntime;
  }
  return bashelf::kExitOk;
}
