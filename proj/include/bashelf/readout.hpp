#pragma once

// Fluorescence detection: photon-count generation for bright and shelved
// ions, count histograms, and threshold discrimination.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "bashelf/dynamics.hpp"
#include "bashelf/error.hpp"
#include "bashelf/random.hpp"

namespace bashelf {

enum class Brightness { Bright, Dark };

inline const char* to_string(Brightness b) { return b == Brightness::Bright ? "bright" : "dark"; }

inline void validate(const DetectionParams& p) {
  if (!(p.dark_rate >= 0.0)) throw DomainError("DetectionParams: dark_rate must be >= 0");
  if (!(p.bright_rate > p.dark_rate)) throw DomainError("DetectionParams: bright_rate must exceed dark_rate");
  if (!(p.window > 0.0)) throw DomainError("DetectionParams: window must be > 0");
  if (!(p.shelf_lifetime > 0.0)) throw DomainError("DetectionParams: shelf_lifetime must be > 0");
}

struct CountSample {
  std::int64_t count = 0;
  bool decayed = false;      // shelved ion returned to the cooling cycle mid-window
  double decay_time = 0.0;   // s from window start, valid when decayed
};

inline CountSample simulate_counts_detailed(Brightness state, const DetectionParams& params, Rng& rng) {
  const double background = params.dark_rate * params.window;
  if (state == Brightness::Bright)
    return {poisson(params.bright_rate * params.window + background, rng), false, 0.0};

  const auto decay = shelf_decay(true, params.window, params.shelf_lifetime, rng);
  if (decay.still_shelved) return {poisson(background, rng), false, 0.0};
  const double t_d = *decay.decay_time;
  return {poisson(background + params.bright_rate * (params.window - t_d), rng), true, t_d};
}

inline std::int64_t simulate_counts(Brightness state, const DetectionParams& params, Rng& rng) {
  return simulate_counts_detailed(state, params, rng).count;
}

inline Brightness classify(std::int64_t count, std::int64_t threshold) {
  return count <= threshold ? Brightness::Dark : Brightness::Bright;
}

class Histogram {
 public:
  Histogram() = default;

  explicit Histogram(std::span<const std::int64_t> counts) {
    for (auto c : counts) add(c);
  }

  void add(std::int64_t count, std::int64_t occurrences = 1) {
    bins_[count] += occurrences;
    total_ += occurrences;
  }

  const std::map<std::int64_t, std::int64_t>& bins() const { return bins_; }
  std::int64_t total_shots() const { return total_; }
  bool empty() const { return total_ == 0; }

  std::int64_t occurrences(std::int64_t count) const {
    auto it = bins_.find(count);
    return it == bins_.end() ? 0 : it->second;
  }

  std::int64_t max_count() const { return bins_.empty() ? -1 : bins_.rbegin()->first; }

  // Number of shots with count <= threshold.
  std::int64_t at_or_below(std::int64_t threshold) const {
    std::int64_t n = 0;
    for (const auto& [c, k] : bins_) {
      if (c > threshold) break;
      n += k;
    }
    return n;
  }

  // Two-column text export, one line per bin, ascending counts.
  void write(std::ostream& os) const {
    for (const auto& [c, k] : bins_) os << c << ',' << k << '\n';
  }

  friend bool operator==(const Histogram&, const Histogram&) = default;

 private:
  std::map<std::int64_t, std::int64_t> bins_;
  std::int64_t total_ = 0;
};

inline Histogram build_histogram(std::span<const std::int64_t> counts) { return Histogram(counts); }

struct ThresholdResult {
  std::int64_t threshold = 0;
  double fidelity = 0.0;
  std::int64_t errors_bright = 0;  // bright shots classified dark
  std::int64_t errors_dark = 0;    // dark shots classified bright
  std::int64_t total_shots = 0;

  std::int64_t errors() const { return errors_bright + errors_dark; }
};

// Exhaustive scan over thresholds -1 .. max observed count; ties go to the
// smaller threshold.
inline ThresholdResult optimal_threshold(const Histogram& bright, const Histogram& dark) {
  if (bright.empty() || dark.empty()) throw DomainError("optimal_threshold: empty histogram");
  const std::int64_t top = std::max(bright.max_count(), dark.max_count());
  const std::int64_t total = bright.total_shots() + dark.total_shots();

  ThresholdResult best;
  best.total_shots = total;
  std::int64_t best_errors = total + 1;
  auto bit = bright.bins().begin();
  auto dit = dark.bins().begin();
  std::int64_t bright_below = 0;
  std::int64_t dark_below = 0;
  for (std::int64_t t = -1; t <= top; ++t) {
    for (; bit != bright.bins().end() && bit->first <= t; ++bit) bright_below += bit->second;
    for (; dit != dark.bins().end() && dit->first <= t; ++dit) dark_below += dit->second;
    const std::int64_t eb = bright_below;
    const std::int64_t ed = dark.total_shots() - dark_below;
    if (eb + ed < best_errors) {
      best_errors = eb + ed;
      best.threshold = t;
      best.errors_bright = eb;
      best.errors_dark = ed;
    }
  }
  best.fidelity = 1.0 - static_cast<double>(best_errors) / static_cast<double>(total);
  return best;
}

// Analytic misclassification probability at a fixed threshold, with
// dark_rate = 0 and an infinitely long-lived shelf: only bright shots can
// fail, when Poisson(bright_rate * window) <= threshold.
inline double analytic_bright_error(double bright_rate, double window, std::int64_t threshold) {
  if (threshold < 0) return 0.0;
  const double mean = bright_rate * window;
  double term = std::exp(-mean);
  double cdf = term;
  for (std::int64_t k = 1; k <= threshold; ++k) {
    term *= mean / static_cast<double>(k);
    cdf += term;
  }
  return std::min(cdf, 1.0);
}

}  // namespace bashelf
