#pragma once

// Experiment configuration documents: JSON (with `//` comments) holding
// physics and detection parameters, a pulse sequence, an optional sweep,
// the seed and the output directory. Unknown keys are rejected.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bashelf/dynamics.hpp"
#include "bashelf/error.hpp"
#include "bashelf/protocol.hpp"
#include "bashelf/readout.hpp"

namespace bashelf {

using Json = nlohmann::json;

struct ExperimentConfig {
  PhysicsParams physics;
  PulseSequence sequence;
  std::optional<SweepSpec> sweep;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t shots = 5000;  // histogram shots per case
};

namespace config_detail {

inline void check_keys(const Json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) {
      std::string msg = std::string(where) + ": unknown key '" + key + "' (allowed:";
      for (auto a : allowed) msg += " " + std::string(a);
      throw ConfigError(msg + ")");
    }
  }
}

inline double number(const Json& v, std::string_view where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  throw ConfigError(std::string(where) + ": expected a number or \"inf\"");
}

inline void read(const Json& obj, const char* key, double& out, std::string_view where) {
  if (obj.contains(key)) out = number(obj.at(key), std::string(where) + "." + key);
}

inline void read_int(const Json& obj, const char* key, std::int64_t& out, std::string_view where) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(std::string(where) + "." + key + ": expected an integer");
  out = v.get<std::int64_t>();
}

inline Json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? Json("inf") : throw ConfigError("negative infinity is not representable");
  return v;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline PumpParams parse_pump(const Json& j, PumpParams p, std::string_view where,
                             std::initializer_list<std::string_view> extra = {}) {
  std::vector<std::string_view> allowed{"scatter_rate", "pol_impurity", "duration"};
  allowed.insert(allowed.end(), extra.begin(), extra.end());
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
  read(j, "scatter_rate", p.scatter_rate, where);
  read(j, "pol_impurity", p.pol_impurity, where);
  read(j, "duration", p.duration, where);
  return p;
}

inline DetectionParams parse_detection(const Json& j, DetectionParams d, std::string_view where,
                                       bool allow_kind = false) {
  if (allow_kind)
    check_keys(j, where, {"kind", "bright_rate", "dark_rate", "window", "shelf_lifetime", "threshold"});
  else
    check_keys(j, where, {"bright_rate", "dark_rate", "window", "shelf_lifetime", "threshold"});
  read(j, "bright_rate", d.bright_rate, where);
  read(j, "dark_rate", d.dark_rate, where);
  read(j, "window", d.window, where);
  read(j, "shelf_lifetime", d.shelf_lifetime, where);
  read_int(j, "threshold", d.threshold, where);
  return d;
}

inline Json pump_json(const PumpParams& p) {
  return {{"scatter_rate", number_json(p.scatter_rate)},
          {"pol_impurity", number_json(p.pol_impurity)},
          {"duration", number_json(p.duration)}};
}

inline Json detection_json(const DetectionParams& d) {
  return {{"bright_rate", number_json(d.bright_rate)},
          {"dark_rate", number_json(d.dark_rate)},
          {"window", number_json(d.window)},
          {"shelf_lifetime", number_json(d.shelf_lifetime)},
          {"threshold", d.threshold}};
}

}  // namespace config_detail

inline void validate(const PhysicsParams& p) {
  using config_detail::require;
  require(p.omega_optical > 0.0 && std::isfinite(p.omega_optical), "physics.omega_optical must be > 0");
  require(p.omega_microwave > 0.0 && std::isfinite(p.omega_microwave), "physics.omega_microwave must be > 0");
  require(p.tau_gauss > 0.0, "physics.tau_gauss must be > 0 (or \"inf\")");
  require(p.laser_linewidth >= 0.0 && std::isfinite(p.laser_linewidth), "physics.laser_linewidth must be >= 0");
  require(p.mag_detuning_rms >= 0.0 && std::isfinite(p.mag_detuning_rms), "physics.mag_detuning_rms must be >= 0");
  require(p.hyperfine_t2 > 0.0, "physics.hyperfine_t2 must be > 0 (or \"inf\")");
  require(p.magnetic_field >= 0.0 && std::isfinite(p.magnetic_field), "physics.magnetic_field must be >= 0");
  require(p.ac_line.frequency > 0.0 && std::isfinite(p.ac_line.frequency), "physics.ac_line.frequency must be > 0");
  require(std::isfinite(p.ac_line.detuning_amplitude), "physics.ac_line.detuning_amplitude must be finite");
  require(std::isfinite(p.ac_line.trigger_phase), "physics.ac_line.trigger_phase must be finite");
  require(p.pump.scatter_rate > 0.0 && std::isfinite(p.pump.scatter_rate), "physics.pump.scatter_rate must be > 0");
  require(p.pump.pol_impurity >= 0.0 && p.pump.pol_impurity <= 1.0, "physics.pump.pol_impurity must be in [0, 1]");
  require(p.pump.duration >= 0.0 && std::isfinite(p.pump.duration), "physics.pump.duration must be >= 0");
  try {
    validate(p.detection);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("detection: ") + e.what());
  }
}

inline PulseSequence parse_sequence(const Json& j, const PhysicsParams& physics) {
  using namespace config_detail;
  check_keys(j, "sequence", {"trigger", "pump_before_trigger", "steps"});
  PulseSequence seq;
  const std::string trig = j.value("trigger", std::string("line"));
  if (trig == "line") seq.trigger = LineTrigger{physics.ac_line.trigger_phase};
  else if (trig == "immediate") seq.trigger = ImmediateTrigger{};
  else throw ConfigError("sequence.trigger: expected \"line\" or \"immediate\", got \"" + trig + "\"");
  if (j.contains("pump_before_trigger")) {
    if (!j.at("pump_before_trigger").is_boolean()) throw ConfigError("sequence.pump_before_trigger: expected a boolean");
    seq.pump_before_trigger = j.at("pump_before_trigger").get<bool>();
  }
  if (!j.contains("steps") || !j.at("steps").is_array()) throw ConfigError("sequence.steps: expected an array");
  std::size_t k = 0;
  for (const auto& s : j.at("steps")) {
    const std::string where = "sequence.steps[" + std::to_string(k++) + "]";
    if (!s.is_object() || !s.contains("kind") || !s.at("kind").is_string())
      throw ConfigError(where + ": expected an object with a string \"kind\"");
    const auto kind = s.at("kind").get<std::string>();
    if (kind == "pump") {
      seq.steps.emplace_back(PumpStep{parse_pump(s, physics.pump, where, {"kind"})});
    } else if (kind == "ir" || kind == "microwave") {
      check_keys(s, where, {"kind", "duration", "detuning"});
      if (!s.contains("duration")) throw ConfigError(where + ": missing \"duration\"");
      double duration = 0.0, detuning = 0.0;
      read(s, "duration", duration, where);
      read(s, "detuning", detuning, where);
      if (kind == "ir") seq.steps.emplace_back(IrPulse{duration, detuning});
      else seq.steps.emplace_back(MicrowavePulse{duration, detuning});
    } else if (kind == "wait") {
      check_keys(s, where, {"kind", "duration"});
      double duration = 0.0;
      read(s, "duration", duration, where);
      seq.steps.emplace_back(WaitStep{duration});
    } else if (kind == "detect") {
      seq.steps.emplace_back(DetectStep{parse_detection(s, physics.detection, where, true)});
    } else {
      throw ConfigError(where + ": unknown step kind \"" + kind + "\" (pump, ir, microwave, wait, detect)");
    }
  }
  try {
    seq.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("sequence: ") + e.what());
  }
  return seq;
}

inline ExperimentConfig parse_config(const Json& root) {
  using namespace config_detail;
  check_keys(root, "config", {"seed", "output_dir", "shots", "physics", "detection", "sequence", "sweep"});
  ExperimentConfig cfg;
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = root.at("seed").get<std::uint64_t>();
  }
  if (root.contains("output_dir")) {
    if (!root.at("output_dir").is_string()) throw ConfigError("output_dir: expected a string");
    cfg.output_dir = root.at("output_dir").get<std::string>();
  }
  if (root.contains("shots")) {
    if (!root.at("shots").is_number_integer() || root.at("shots").get<std::int64_t>() < 1)
      throw ConfigError("shots: expected an integer >= 1");
    cfg.shots = root.at("shots").get<std::size_t>();
  }

  auto& ph = cfg.physics;
  if (root.contains("physics")) {
    const auto& j = root.at("physics");
    check_keys(j, "physics", {"omega_optical", "omega_microwave", "tau_gauss", "laser_linewidth",
                              "mag_detuning_rms", "hyperfine_t2", "magnetic_field", "ac_line", "pump"});
    read(j, "omega_optical", ph.omega_optical, "physics");
    read(j, "omega_microwave", ph.omega_microwave, "physics");
    read(j, "tau_gauss", ph.tau_gauss, "physics");
    read(j, "laser_linewidth", ph.laser_linewidth, "physics");
    read(j, "mag_detuning_rms", ph.mag_detuning_rms, "physics");
    read(j, "hyperfine_t2", ph.hyperfine_t2, "physics");
    read(j, "magnetic_field", ph.magnetic_field, "physics");
    if (j.contains("ac_line")) {
      const auto& a = j.at("ac_line");
      check_keys(a, "physics.ac_line", {"frequency", "detuning_amplitude", "trigger_phase"});
      read(a, "frequency", ph.ac_line.frequency, "physics.ac_line");
      read(a, "detuning_amplitude", ph.ac_line.detuning_amplitude, "physics.ac_line");
      read(a, "trigger_phase", ph.ac_line.trigger_phase, "physics.ac_line");
    }
    if (j.contains("pump")) {
      check_keys(j.at("pump"), "physics.pump", {"scatter_rate", "pol_impurity", "duration"});
      ph.pump = parse_pump(j.at("pump"), ph.pump, "physics.pump");
    }
  }
  if (root.contains("detection")) ph.detection = parse_detection(root.at("detection"), ph.detection, "detection");
  validate(ph);

  if (!root.contains("sequence")) throw ConfigError("config: missing \"sequence\"");
  cfg.sequence = parse_sequence(root.at("sequence"), ph);

  if (root.contains("sweep")) {
    const auto& j = root.at("sweep");
    check_keys(j, "sweep", {"parameter", "values", "range", "shots_per_point"});
    SweepSpec sw;
    sw.sequence = cfg.sequence;
    if (!j.contains("parameter") || !j.at("parameter").is_string())
      throw ConfigError("sweep.parameter: expected a string like \"steps[1].duration\"");
    try {
      sw.parameter = SweptParameter::parse(j.at("parameter").get<std::string>());
    } catch (const DomainError& e) {
      throw ConfigError(std::string("sweep.parameter: ") + e.what());
    }
    if (j.contains("values") == j.contains("range"))
      throw ConfigError("sweep: give exactly one of \"values\" or \"range\"");
    if (j.contains("values")) {
      if (!j.at("values").is_array()) throw ConfigError("sweep.values: expected an array");
      for (const auto& v : j.at("values")) sw.values.push_back(number(v, "sweep.values"));
    } else {
      const auto& r = j.at("range");
      check_keys(r, "sweep.range", {"start", "stop", "count"});
      double start = 0.0, stop = 0.0;
      std::int64_t count = 0;
      read(r, "start", start, "sweep.range");
      read(r, "stop", stop, "sweep.range");
      read_int(r, "count", count, "sweep.range");
      if (count < 0) throw ConfigError("sweep.range.count: must be >= 0");
      for (std::int64_t i = 0; i < count; ++i)
        sw.values.push_back(count == 1 ? start : start + (stop - start) * double(i) / double(count - 1));
    }
    if (j.contains("shots_per_point")) {
      if (!j.at("shots_per_point").is_number_integer() || j.at("shots_per_point").get<std::int64_t>() < 1)
        throw ConfigError("sweep.shots_per_point: expected an integer >= 1");
      sw.shots_per_point = j.at("shots_per_point").get<std::size_t>();
    }
    try {
      sw.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("sweep: ") + e.what());
    }
    cfg.sweep = std::move(sw);
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_config(root);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline Json to_json(const ExperimentConfig& cfg) {
  using namespace config_detail;
  const auto& ph = cfg.physics;
  Json physics = {{"omega_optical", number_json(ph.omega_optical)},
                  {"omega_microwave", number_json(ph.omega_microwave)},
                  {"tau_gauss", number_json(ph.tau_gauss)},
                  {"laser_linewidth", number_json(ph.laser_linewidth)},
                  {"mag_detuning_rms", number_json(ph.mag_detuning_rms)},
                  {"hyperfine_t2", number_json(ph.hyperfine_t2)},
                  {"magnetic_field", number_json(ph.magnetic_field)},
                  {"ac_line",
                   {{"frequency", number_json(ph.ac_line.frequency)},
                    {"detuning_amplitude", number_json(ph.ac_line.detuning_amplitude)},
                    {"trigger_phase", number_json(ph.ac_line.trigger_phase)}}},
                  {"pump", pump_json(ph.pump)}};

  Json steps = Json::array();
  for (const auto& step : cfg.sequence.steps) {
    Json s;
    if (const auto* p = std::get_if<PumpStep>(&step)) {
      s = pump_json(p->params);
    } else if (const auto* ir = std::get_if<IrPulse>(&step)) {
      s = {{"duration", number_json(ir->duration)}, {"detuning", number_json(ir->detuning)}};
    } else if (const auto* mw = std::get_if<MicrowavePulse>(&step)) {
      s = {{"duration", number_json(mw->duration)}, {"detuning", number_json(mw->detuning)}};
    } else if (const auto* d = std::get_if<DetectStep>(&step)) {
      s = detection_json(d->params);
    } else {
      s = {{"duration", number_json(std::get<WaitStep>(step).duration)}};
    }
    s["kind"] = step_name(step);
    steps.push_back(std::move(s));
  }
  Json sequence = {{"trigger", std::holds_alternative<LineTrigger>(cfg.sequence.trigger) ? "line" : "immediate"},
                   {"pump_before_trigger", cfg.sequence.pump_before_trigger},
                   {"steps", steps}};

  Json root = {{"seed", cfg.seed},
               {"output_dir", cfg.output_dir},
               {"shots", cfg.shots},
               {"physics", physics},
               {"detection", detection_json(ph.detection)},
               {"sequence", sequence}};
  if (cfg.sweep) {
    Json values = Json::array();
    for (double v : cfg.sweep->values) values.push_back(number_json(v));
    root["sweep"] = {{"parameter", cfg.sweep->parameter.to_string()},
                     {"values", values},
                     {"shots_per_point", cfg.sweep->shots_per_point}};
  }
  return root;
}

// FNV-1a over the canonical (sorted-key, compact) serialization.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bashelf
