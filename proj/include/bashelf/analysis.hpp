#pragma once

// Parameter extraction: damped-Rabi least squares, binomial intervals, and
// one-dimensional calibration by bisection.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bashelf/error.hpp"

namespace bashelf {

struct DataPoint {
  double t = 0.0;
  double p = 0.0;
  double stderr_ = 0.0;  // <= 0 means unknown
};

// p(t) = offset - amplitude * cos(2 pi f t + phase) * exp(-(t / tau)^2)
//
// "decay_time" is the 1/e time of the Gaussian envelope. The envelope is
// parameterized internally by the rate g = 1/tau so that tau = infinity is
// the regular point g = 0.
struct RabiModel {
  enum Index { kOffset = 0, kAmplitude, kFrequency, kRate, kPhase, kCount };
  using Params = std::array<double, kCount>;

  static double value(double t, const Params& q) {
    const double arg = 2.0 * std::numbers::pi * q[kFrequency] * t + q[kPhase];
    const double env = std::exp(-(q[kRate] * t) * (q[kRate] * t));
    return q[kOffset] - q[kAmplitude] * std::cos(arg) * env;
  }

  static Params gradient(double t, const Params& q) {
    const double arg = 2.0 * std::numbers::pi * q[kFrequency] * t + q[kPhase];
    const double env = std::exp(-(q[kRate] * t) * (q[kRate] * t));
    const double c = std::cos(arg);
    const double s = std::sin(arg);
    const double a = q[kAmplitude];
    return {1.0,
            -c * env,
            a * s * env * 2.0 * std::numbers::pi * t,
            2.0 * a * q[kRate] * t * t * c * env,
            a * s * env};
  }
};

struct FitResult {
  double frequency = 0.0;   // Hz
  double decay_time = 0.0;  // s, +inf for an undamped fit
  double amplitude = 0.0;
  double offset = 0.0;
  double phase = 0.0;       // rad, wrapped to (-pi, pi]
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;

  // One-sigma estimates from the Gauss-Newton covariance diagonal.
  double frequency_err = 0.0;
  double decay_time_err = 0.0;
  double amplitude_err = 0.0;
  double offset_err = 0.0;
  double phase_err = 0.0;

  RabiModel::Params params() const {
    const double rate = std::isfinite(decay_time) ? 1.0 / decay_time : 0.0;
    return {offset, amplitude, frequency, rate, phase};
  }
};

struct FitOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-8;
};

namespace detail {

// Frequency of the largest nonzero-frequency peak of the mean-subtracted
// data's discrete spectrum (direct sum, so spacing need not be uniform).
inline double spectral_peak(std::span<const DataPoint> pts, double mean, double span) {
  const double n = static_cast<double>(pts.size());
  const double df = 1.0 / (4.0 * span);
  const double f_max = 0.5 * (n - 1.0) / span;
  double best_f = 1.0 / span;
  double best_power = -1.0;
  for (double f = df; f <= f_max; f += df) {
    std::complex<double> acc{0.0, 0.0};
    for (const auto& pt : pts)
      acc += (pt.p - mean) * std::polar(1.0, -2.0 * std::numbers::pi * f * (pt.t - pts.front().t));
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  return best_f;
}

// Envelope of the analytic signal via a discrete Hilbert transform (samples
// treated as equally spaced), then log-envelope regression against t^2.
inline double envelope_rate(std::span<const DataPoint> pts, double mean) {
  const std::size_t n = pts.size();
  std::vector<std::complex<double>> spec(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j)
      acc += (pts[j].p - mean) * std::polar(1.0, -2.0 * std::numbers::pi * double(k * j % n) / double(n));
    spec[k] = acc;
  }
  // Analytic signal: keep DC and Nyquist, double positive, zero negative.
  for (std::size_t k = 1; k < n; ++k) {
    if (2 * k < n) spec[k] *= 2.0;
    else if (2 * k > n) spec[k] = 0.0;
  }
  std::vector<double> env(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k)
      acc += spec[k] * std::polar(1.0, 2.0 * std::numbers::pi * double(k * j % n) / double(n));
    env[j] = std::abs(acc) / double(n);
  }
  // Edges of a finite Hilbert transform are unreliable; regress on the middle.
  const std::size_t lo = n / 8;
  const std::size_t hi = n - n / 8;
  const double peak = *std::max_element(env.begin(), env.end());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t j = lo; j < hi; ++j) {
    if (!(env[j] > 1e-3 * peak)) continue;
    const double x = (pts[j].t - pts.front().t) * (pts[j].t - pts.front().t);
    const double y = std::log(env[j]);
    sx += x; sy += y; sxx += x * x; sxy += x * y; m += 1.0;
  }
  if (m < 3.0) return 0.0;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return slope < 0.0 ? std::sqrt(-slope) : 0.0;
}

}  // namespace detail

// Weighted least-squares fit of a Gaussian-damped sinusoid with a damped
// Gauss-Newton (Levenberg-Marquardt) iteration.
inline FitResult fit_rabi(std::span<const DataPoint> points, const FitOptions& options = {}) {
  constexpr int kP = RabiModel::kCount;
  if (points.size() < static_cast<std::size_t>(kP))
    throw DomainError("fit_rabi: need at least 5 points, got " + std::to_string(points.size()));

  std::vector<DataPoint> pts(points.begin(), points.end());
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  const double t0 = pts.front().t;
  const double span = pts.back().t - t0;
  if (!(span > 0.0)) throw DomainError("fit_rabi: points must span a nonzero time interval");

  // Weights: 1/stderr^2; nonpositive stderr entries take the smallest
  // positive stderr, and an all-unknown set is fit unweighted.
  double min_err = std::numeric_limits<double>::infinity();
  for (const auto& p : pts)
    if (p.stderr_ > 0.0) min_err = std::min(min_err, p.stderr_);
  std::vector<double> w(pts.size(), 1.0);
  if (std::isfinite(min_err))
    for (std::size_t i = 0; i < pts.size(); ++i) w[i] = 1.0 / std::max(pts[i].stderr_, min_err);

  // Work in time units of the data span; keeps the normal matrix well scaled.
  std::vector<double> ts(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) ts[i] = pts[i].t / span;

  double mean = 0.0, lo = pts.front().p, hi = pts.front().p;
  for (const auto& p : pts) {
    mean += p.p;
    lo = std::min(lo, p.p);
    hi = std::max(hi, p.p);
  }
  mean /= static_cast<double>(pts.size());

  RabiModel::Params q{};
  q[RabiModel::kOffset] = mean;
  q[RabiModel::kAmplitude] = 0.5 * (hi - lo);
  q[RabiModel::kFrequency] = detail::spectral_peak(pts, mean, span) * span;
  q[RabiModel::kRate] = std::max(detail::envelope_rate(pts, mean) * span, 0.3);
  q[RabiModel::kPhase] = 0.0;

  const auto n = static_cast<Eigen::Index>(pts.size());
  auto residuals = [&](const RabiModel::Params& par) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r[i] = w[i] * (pts[i].p - RabiModel::value(ts[i], par));
    return r;
  };
  auto jacobian = [&](const RabiModel::Params& par) {
    Eigen::MatrixXd j(n, kP);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto g = RabiModel::gradient(ts[i], par);
      for (int c = 0; c < kP; ++c) j(i, c) = w[i] * g[c];
    }
    return j;
  };

  FitResult out;
  Eigen::VectorXd r = residuals(q);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  const double tol = options.relative_tolerance;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd j = jacobian(q);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd grad = j.transpose() * r;
    const double diag_floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300);

    bool accepted = false;
    bool small_step = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      for (int c = 0; c < kP; ++c) a(c, c) += lambda * std::max(jtj(c, c), diag_floor);
      const Eigen::VectorXd step = a.ldlt().solve(grad);
      small_step = true;
      for (int c = 0; c < kP; ++c)
        if (std::abs(step[c]) > tol * (std::abs(q[c]) + tol)) small_step = false;
      RabiModel::Params trial = q;
      for (int c = 0; c < kP; ++c) trial[c] += step[c];
      const Eigen::VectorXd r_trial = residuals(trial);
      const double c_trial = r_trial.squaredNorm();
      if (std::isfinite(c_trial) && c_trial <= cost) {
        q = trial;
        r = r_trial;
        cost = c_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      if (small_step) break;
      lambda *= 10.0;
    }
    if (small_step) {
      out.converged = true;
      ++it;
      break;
    }
    if (!accepted) break;
  }
  out.iterations = it;

  // Canonical form: amplitude >= 0, rate >= 0, phase in (-pi, pi].
  if (q[RabiModel::kAmplitude] < 0.0) {
    q[RabiModel::kAmplitude] = -q[RabiModel::kAmplitude];
    q[RabiModel::kPhase] += std::numbers::pi;
  }
  q[RabiModel::kRate] = std::abs(q[RabiModel::kRate]);
  if (q[RabiModel::kFrequency] < 0.0) {
    q[RabiModel::kFrequency] = -q[RabiModel::kFrequency];
    q[RabiModel::kPhase] = -q[RabiModel::kPhase];
  }
  q[RabiModel::kPhase] = std::remainder(q[RabiModel::kPhase], 2.0 * std::numbers::pi);
  if (q[RabiModel::kPhase] <= -std::numbers::pi) q[RabiModel::kPhase] += 2.0 * std::numbers::pi;

  out.offset = q[RabiModel::kOffset];
  out.amplitude = q[RabiModel::kAmplitude];
  out.frequency = q[RabiModel::kFrequency] / span;
  out.phase = q[RabiModel::kPhase];
  const double rate = q[RabiModel::kRate] / span;
  out.decay_time = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();

  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = pts[i].p - RabiModel::value(ts[i], q);
    ss += d * d;
  }
  out.residual_rms = std::sqrt(ss / static_cast<double>(n));

  const Eigen::MatrixXd j = jacobian(q);
  const Eigen::MatrixXd jtj = j.transpose() * j;
  const double dof = std::max<double>(static_cast<double>(n - kP), 1.0);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible()) {
    const Eigen::MatrixXd cov = lu.inverse() * (r.squaredNorm() / dof);
    auto sd = [&](int c) { return std::sqrt(std::max(cov(c, c), 0.0)); };
    out.offset_err = sd(RabiModel::kOffset);
    out.amplitude_err = sd(RabiModel::kAmplitude);
    out.frequency_err = sd(RabiModel::kFrequency) / span;
    out.phase_err = sd(RabiModel::kPhase);
    out.decay_time_err = rate > 0.0 ? sd(RabiModel::kRate) / span / (rate * rate)
                                    : std::numeric_limits<double>::infinity();
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.offset_err = out.amplitude_err = out.frequency_err = out.phase_err = out.decay_time_err = nan;
  }
  if (!(out.frequency > 0.0 && out.decay_time > 0.0)) out.converged = false;
  return out;
}

// Key-value report; one `name value uncertainty` line per fitted parameter.
inline void write_fit_report(std::ostream& os, const FitResult& f) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os.precision(10);
  os << "frequency " << f.frequency << ' ' << f.frequency_err << '\n'
     << "decay_time " << f.decay_time << ' ' << f.decay_time_err << '\n'
     << "amplitude " << f.amplitude << ' ' << f.amplitude_err << '\n'
     << "offset " << f.offset << ' ' << f.offset_err << '\n'
     << "phase " << f.phase << ' ' << f.phase_err << '\n'
     << "residual_rms " << f.residual_rms << '\n'
     << "iterations " << f.iterations << '\n'
     << "converged " << (f.converged ? "true" : "false") << '\n';
  os.flags(flags);
  os.precision(prec);
}

// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials < 1) throw DomainError("wilson_interval: trials must be >= 1");
  if (successes < 0 || successes > trials) throw DomainError("wilson_interval: successes outside [0, trials]");
  if (!(z >= 0.0)) throw DomainError("wilson_interval: z must be >= 0");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  double low = std::clamp(center - half, 0.0, p);
  double high = std::clamp(center + half, p, 1.0);
  if (successes == 0) low = 0.0;
  if (successes == trials) high = 1.0;
  return {low, high};
}

struct CalibrationResult {
  std::string knob;
  double value = 0.0;
  double achieved = 0.0;
  double target = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Bisection on a statistic assumed monotone in the knob over [low, high].
inline CalibrationResult calibrate_scalar(const std::function<double(double)>& statistic, std::string knob,
                                          double target, std::pair<double, double> bounds, double tolerance,
                                          int max_iterations = 60) {
  auto [lo, hi] = bounds;
  if (!(lo < hi)) throw DomainError("calibrate_scalar: bounds must satisfy low < high");
  if (!(tolerance > 0.0)) throw DomainError("calibrate_scalar: tolerance must be > 0");
  CalibrationResult res{std::move(knob), lo, 0.0, target, 0, false};

  double f_lo = statistic(lo);
  double f_hi = statistic(hi);
  if (std::abs(f_lo - target) < tolerance) {
    res.value = lo;
    res.achieved = f_lo;
    res.converged = true;
    return res;
  }
  if (std::abs(f_hi - target) < tolerance) {
    res.value = hi;
    res.achieved = f_hi;
    res.converged = true;
    return res;
  }
  if ((f_lo - target) * (f_hi - target) > 0.0)
    throw BracketingError("calibrate_scalar: target " + std::to_string(target) + " for '" + res.knob +
                          "' not bracketed: statistic(" + std::to_string(lo) + ") = " + std::to_string(f_lo) +
                          ", statistic(" + std::to_string(hi) + ") = " + std::to_string(f_hi));
  const bool rising = f_hi > f_lo;
  double mid = lo, f_mid = f_lo;
  for (int i = 0; i < max_iterations; ++i) {
    mid = 0.5 * (lo + hi);
    f_mid = statistic(mid);
    res.iterations = i + 1;
    if (std::abs(f_mid - target) < tolerance) {
      res.converged = true;
      break;
    }
    if ((f_mid < target) == rising) lo = mid;
    else hi = mid;
  }
  res.value = mid;
  res.achieved = f_mid;
  return res;
}

}  // namespace bashelf
