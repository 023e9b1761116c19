#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bashelf/commands.hpp"

namespace bashelf {
namespace {

namespace fs = std::filesystem;

const std::string kRecipes = BASHELF_RECIPE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CommandTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("bashelf_") + info->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  ExperimentConfig recipe(const std::string& name, const std::string& sub = "a") const {
    auto cfg = load_config(kRecipes + "/" + name);
    cfg.output_dir = (dir_ / sub).string();
    return cfg;
  }

  fs::path dir_;
};

TEST_F(CommandTest, HistogramDefaultFidelity) {
  const auto out = cmd_histogram(recipe("readout.json"));
  EXPECT_GE(out.run.threshold.fidelity, 0.998);
  EXPECT_EQ(out.run.threshold.total_shots, 10000);
  EXPECT_LE(out.fidelity_interval.first, out.run.threshold.fidelity);
  EXPECT_GE(out.fidelity_interval.second, out.run.threshold.fidelity);
  ASSERT_EQ(out.files.size(), 3u);
  const std::string summary = slurp(out.files[2]);
  EXPECT_NE(summary.find("fidelity_wilson95_low"), std::string::npos);
  EXPECT_NE(summary.find("threshold " + std::to_string(out.run.threshold.threshold) + "\n"), std::string::npos);
}

TEST_F(CommandTest, HistogramDisjointIsPerfect) {
  auto cfg = recipe("readout.json");
  cfg.physics.detection.dark_rate = 0.0;
  cfg.physics.detection.shelf_lifetime = kInf;
  EXPECT_EQ(cmd_histogram(cfg).run.threshold.fidelity, 1.0);
}

TEST_F(CommandTest, HistogramZeroShotsRejected) {
  auto cfg = recipe("readout.json");
  cfg.shots = 0;
  EXPECT_THROW(cmd_histogram(cfg), ConfigError);
}

TEST_F(CommandTest, OutputsAreReproducibleAndHeaded) {
  auto a = recipe("readout.json", "a");
  auto b = recipe("readout.json", "b");
  a.shots = b.shots = 2000;
  const auto ra = cmd_histogram(a, {1});
  const auto rb = cmd_histogram(b, {3});
  ASSERT_EQ(ra.files.size(), rb.files.size());
  for (std::size_t i = 0; i < ra.files.size(); ++i) {
    const auto text = slurp(ra.files[i]);
    EXPECT_EQ(text, slurp(rb.files[i])) << ra.files[i];
    EXPECT_EQ(text.rfind(header_line(a), 0), 0u);
  }
  EXPECT_EQ(header_line(a), header_line(b));
  b.seed += 1;
  EXPECT_NE(header_line(a), header_line(b));
}

TEST_F(CommandTest, RabiScanOptical) {
  const auto out = cmd_rabi_scan(recipe("optical_rabi.json"));
  ASSERT_TRUE(out.fit);
  EXPECT_GE(out.fit->frequency, 47.5e3);
  EXPECT_LE(out.fit->frequency, 52.5e3);
  EXPECT_GE(out.fit->decay_time, 100e-6);
  EXPECT_LE(out.fit->decay_time, 140e-6);
  const auto curve = slurp(out.files[0]);
  EXPECT_NE(curve.find("x,p_dark,n_shots,stderr\n"), std::string::npos);
  const auto fit = slurp(out.files[1]);
  EXPECT_NE(fit.find("swept_parameter steps[1].duration"), std::string::npos);
}

TEST_F(CommandTest, RabiScanMicrowave) {
  auto cfg = recipe("microwave_rabi.json");
  cfg.sweep->shots_per_point = 100;
  const auto out = cmd_rabi_scan(cfg);
  ASSERT_TRUE(out.fit);
  EXPECT_GE(out.fit->frequency, 14.25e3);
  EXPECT_LE(out.fit->frequency, 15.75e3);
}

TEST_F(CommandTest, RabiScanNeedsSweep) {
  EXPECT_THROW(cmd_rabi_scan(recipe("readout.json")), ConfigError);
}

TEST_F(CommandTest, CalibrateUnknownKnob) {
  try {
    cmd_calibrate(recipe("readout.json"), "laser_power", std::nullopt);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("dark_rate"), std::string::npos);
  }
}

TEST_F(CommandTest, CalibrateWritesReloadableConfig) {
  const auto out = cmd_calibrate(recipe("optical_rabi.json"), "pol_impurity", std::nullopt);
  EXPECT_TRUE(out.result.converged);
  EXPECT_NEAR(out.result.achieved, 0.93, 1e-4);
  const std::string text = slurp(out.file);
  EXPECT_EQ(text.rfind("// bashelf config_hash=", 0), 0u);
  EXPECT_NE(text.find("// calibrated pol_impurity = "), std::string::npos);
  const auto reloaded = load_config(out.file);
  EXPECT_DOUBLE_EQ(reloaded.physics.pump.pol_impurity, out.result.value);
  EXPECT_DOUBLE_EQ(std::get<PumpStep>(reloaded.sequence.steps[0]).params.pol_impurity, out.result.value);
  EXPECT_NEAR(pump_fidelity(reloaded.physics), 0.93, 1e-4);
}

TEST_F(CommandTest, CalibrateUnbracketedTarget) {
  EXPECT_THROW(cmd_calibrate(recipe("optical_rabi.json"), "pol_impurity", 1.5), BracketingError);
}

TEST_F(CommandTest, CalibrateDarkRateUpdatesThreshold) {
  auto cfg = recipe("readout.json");
  cfg.shots = 1000;
  const auto out = cmd_calibrate(cfg, "dark_rate", 3.0);
  const auto run = simulate_histograms(out.calibrated.physics.detection, cfg.shots, cfg.seed);
  EXPECT_LT(std::abs(double(run.threshold.errors()) - 3.0), 0.5);
  EXPECT_EQ(out.calibrated.physics.detection.threshold, run.threshold.threshold);
  EXPECT_EQ(std::get<DetectStep>(out.calibrated.sequence.steps.back()).params.threshold, run.threshold.threshold);
}

}  // namespace
}  // namespace bashelf
