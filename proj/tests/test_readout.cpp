#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "bashelf/readout.hpp"

namespace bashelf {
namespace {

TEST(SimulateCounts, BrightMeanIsRateTimesWindow) {
  DetectionParams p;
  p.dark_rate = 0.0;
  Rng rng(42);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = double(simulate_counts(Brightness::Bright, p, rng));
    sum += c;
    sum2 += c * c;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 21.0, 3.0 * std::sqrt(21.0 / n));
  EXPECT_NEAR(sum2 / n - mean * mean, 21.0, 0.5);
}

TEST(SimulateCounts, ShelvedWithoutBackgroundIsSilent) {
  DetectionParams p;
  p.dark_rate = 0.0;
  p.shelf_lifetime = kInf;
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) EXPECT_EQ(simulate_counts(Brightness::Dark, p, rng), 0);
}

TEST(SimulateCounts, DecayAddsBrightCountsForRemainingWindow) {
  DetectionParams p;
  p.dark_rate = 0.0;
  p.shelf_lifetime = 1e-3;  // almost every shot decays
  Rng rng(9);
  int decayed = 0;
  double excess = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const auto s = simulate_counts_detailed(Brightness::Dark, p, rng);
    if (!s.decayed) {
      EXPECT_EQ(s.count, 0);
      continue;
    }
    ++decayed;
    EXPECT_GE(s.decay_time, 0.0);
    EXPECT_LE(s.decay_time, p.window);
    excess += double(s.count) - p.bright_rate * (p.window - s.decay_time);
  }
  EXPECT_NEAR(double(decayed) / n, 1.0 - std::exp(-10.0), 0.001);
  EXPECT_NEAR(excess / decayed, 0.0, 0.1);
}

TEST(SimulateCounts, MidWindowDecayFraction) {
  const DetectionParams p;
  Rng rng(2857);
  const int n = 1000000;
  int decayed = 0;
  for (int i = 0; i < n; ++i) decayed += simulate_counts_detailed(Brightness::Dark, p, rng).decayed;
  const double expected = 2.8567347327474666e-4;
  EXPECT_NEAR(double(decayed) / n, expected, 4.0 * std::sqrt(expected / n));
}

TEST(SimulateCounts, InvalidParams) {
  DetectionParams p;
  p.dark_rate = 3000.0;
  EXPECT_THROW(validate(p), DomainError);
  p = {};
  p.window = 0.0;
  EXPECT_THROW(validate(p), DomainError);
  p = {};
  p.dark_rate = -1.0;
  EXPECT_THROW(validate(p), DomainError);
}

TEST(SimulateCounts, SeededDeterminism) {
  DetectionParams p;
  Rng a = shot_rng(5, 0, 17), b = shot_rng(5, 0, 17);
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(simulate_counts(Brightness::Dark, p, a), simulate_counts(Brightness::Dark, p, b));
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify(0, 6), Brightness::Dark);
  EXPECT_EQ(classify(6, 5), Brightness::Bright);
  EXPECT_EQ(classify(5, 5), Brightness::Dark);
  EXPECT_EQ(classify(0, -1), Brightness::Bright);
}

TEST(Histogram, Construction) {
  const std::vector<std::int64_t> counts{3, 0, 3, 7, 3};
  const Histogram h = build_histogram(counts);
  EXPECT_EQ(h.total_shots(), 5);
  EXPECT_EQ(h.occurrences(3), 3);
  EXPECT_EQ(h.occurrences(1), 0);
  EXPECT_EQ(h.max_count(), 7);
  EXPECT_EQ(h.at_or_below(2), 1);
  EXPECT_EQ(h.at_or_below(3), 4);
  std::ostringstream os;
  h.write(os);
  EXPECT_EQ(os.str(), "0,1\n3,3\n7,1\n");
  EXPECT_EQ(Histogram().max_count(), -1);
}

TEST(OptimalThreshold, DisjointSupports) {
  Histogram bright, dark;
  bright.add(20, 50);
  bright.add(25, 50);
  dark.add(0, 80);
  dark.add(1, 20);
  const auto r = optimal_threshold(bright, dark);
  EXPECT_EQ(r.threshold, 1);  // smallest error-free threshold
  EXPECT_EQ(r.errors(), 0);
  EXPECT_EQ(r.fidelity, 1.0);

  Histogram only_zero;
  only_zero.add(0, 10);
  EXPECT_EQ(optimal_threshold(bright, only_zero).threshold, 0);
}

TEST(OptimalThreshold, OverlapExample) {
  // 5000 + 5000 shots; 8 bright shots below every dark count and 5 dark
  // shots above every bright count, so no threshold avoids either.
  Histogram bright, dark;
  bright.add(0, 8);
  bright.add(21, 4992);
  dark.add(1, 4995);
  dark.add(25, 5);
  const auto r = optimal_threshold(bright, dark);
  EXPECT_EQ(r.errors_bright, 8);
  EXPECT_EQ(r.errors_dark, 5);
  EXPECT_EQ(r.threshold, 1);
  EXPECT_DOUBLE_EQ(r.fidelity, 0.9987);
  EXPECT_EQ(r.total_shots, 10000);
}

TEST(OptimalThreshold, EmptyHistogramThrows) {
  Histogram h;
  h.add(1);
  EXPECT_THROW(optimal_threshold(Histogram(), h), DomainError);
}

TEST(OptimalThreshold, MatchesBruteForce) {
  Rng rng(314);
  for (int trial = 0; trial < 100; ++trial) {
    Histogram bright, dark;
    const int nb = 1 + int(uniform01(rng) * 300), nd = 1 + int(uniform01(rng) * 300);
    const double mb = 1.0 + 30.0 * uniform01(rng), md = 10.0 * uniform01(rng);
    for (int i = 0; i < nb; ++i) bright.add(poisson(mb, rng));
    for (int i = 0; i < nd; ++i) dark.add(poisson(md, rng));
    const auto r = optimal_threshold(bright, dark);

    std::int64_t best = -2, best_err = 1 << 30;
    const std::int64_t top = std::max(bright.max_count(), dark.max_count());
    for (std::int64_t t = -1; t <= top + 2; ++t) {
      std::int64_t err = 0;
      for (const auto& [c, k] : bright.bins()) err += classify(c, t) == Brightness::Dark ? k : 0;
      for (const auto& [c, k] : dark.bins()) err += classify(c, t) == Brightness::Bright ? k : 0;
      if (err < best_err) best_err = err, best = t;
    }
    EXPECT_EQ(r.threshold, best);
    EXPECT_EQ(r.errors(), best_err);
  }
}

TEST(AnalyticBrightError, MonotoneInWindowAndThreshold) {
  double prev = 1.0;
  for (double w = 1e-3; w <= 20e-3; w += 1e-3) {
    const double e = analytic_bright_error(2100.0, w, 6);
    EXPECT_LT(e, prev);
    prev = e;
  }
  EXPECT_LT(analytic_bright_error(2100.0, 10e-3, 5), analytic_bright_error(2100.0, 10e-3, 6));
  EXPECT_EQ(analytic_bright_error(2100.0, 10e-3, -1), 0.0);
  EXPECT_NEAR(analytic_bright_error(2100.0, 10e-3, 0), std::exp(-21.0), 1e-20);
}

}  // namespace
}  // namespace bashelf
