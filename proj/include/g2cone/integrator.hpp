#pragma once

// Adaptive Dormand-Prince 5(4) integrator with FSAL, exact landing on a
// uniform sample grid, and a per-step hook that may project or stop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Core>

namespace g2cone {

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0: pick automatically
  double min_step = 1e-14;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 20'000'000;
};

enum class StepStatus { reached_end, stopped, step_failure };

template <int N>
struct IntegrationOutcome {
  StepStatus status = StepStatus::reached_end;
  double t = 0.0;
  Eigen::Matrix<double, N, 1> y;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  /// Sum over accepted steps of the embedded local error estimate (max norm).
  double error_estimate = 0.0;
};

namespace detail {

// Dormand & Prince (1980) tableau.
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                        b6 = 11.0 / 84.0;
// b - b*, the difference to the embedded fourth-order weights.
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

}  // namespace detail

/// Integrates dy/dt = f(t, y) from t0 to t1 (either direction).
///
/// `on_step(t, y)` runs after every accepted step and may modify y (e.g. a
/// projection); returning false stops the integration. `on_sample(t, y)` is
/// called at t0, at every point t0 + k * sample_step, and at the final time.
/// A non-positive sample_step makes every accepted step a sample.
template <int N, class Rhs, class StepHook, class SampleHook>
IntegrationOutcome<N> integrate_dopri(Rhs&& f, double t0, const Eigen::Matrix<double, N, 1>& y0, double t1,
                                      double sample_step, StepHook&& on_step, SampleHook&& on_sample,
                                      const IntegratorOptions& opts = {}) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using namespace detail;

  IntegrationOutcome<N> out;
  out.t = t0;
  out.y = y0;
  on_sample(t0, out.y);
  if (t1 == t0) return out;

  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const bool grid = sample_step > 0.0;
  std::size_t next_index = 1;
  auto next_sample = [&]() {
    if (!grid) return t1;
    const double ts = t0 + dir * static_cast<double>(next_index) * sample_step;
    return dir * (ts - t1) >= 0.0 ? t1 : ts;
  };

  const auto scale = [&](const Vec& a, const Vec& b) {
    return (opts.atol + opts.rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
  };

  double t = t0;
  Vec y = y0;
  // Compensated summation of the increments keeps rounding from accumulating
  // over long runs (first integrals are very sensitive to it).
  Vec carry = Vec::Zero(y0.size());
  Vec k1 = f(t, y);

  double h = opts.initial_step;
  if (h <= 0.0) {
    // Hairer-Norsett-Wanner starting step heuristic.
    const Vec sc = scale(y, y);
    const double d0 = y.cwiseQuotient(sc).cwiseAbs().maxCoeff();
    const double d1 = k1.cwiseQuotient(sc).cwiseAbs().maxCoeff();
    double h0 = (d0 < 1e-5 || d1 < 1e-5 || !std::isfinite(d1)) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const Vec y1 = y + dir * h0 * k1;
    const Vec k2 = f(t + dir * h0, y1);
    const double d2 = (k2 - k1).cwiseQuotient(sc).cwiseAbs().maxCoeff() / h0;
    const double dm = std::max(d1, d2);
    const double h1 = (dm <= 1e-15 || !std::isfinite(dm)) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, opts.max_step, span});

  std::size_t steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > opts.max_steps) {
      out.status = StepStatus::step_failure;
      break;
    }
    const double target = next_sample();
    const double remaining = std::abs(target - t);
    bool lands = false;
    double step = h;
    if (step >= remaining * (1.0 - 1e-12)) {
      step = remaining;
      lands = true;
    }
    if (step < opts.min_step && !lands) {
      out.status = StepStatus::step_failure;
      break;
    }
    const double hs = dir * step;

    const Vec k2 = f(t + c2 * hs, Vec(y + hs * (a21 * k1)));
    const Vec k3 = f(t + c3 * hs, Vec(y + hs * (a31 * k1 + a32 * k2)));
    const Vec k4 = f(t + c4 * hs, Vec(y + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
    const Vec k5 = f(t + c5 * hs, Vec(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const Vec k6 = f(t + hs, Vec(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const Vec incr = hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec y_new = y + incr;
    const Vec k7 = f(t + hs, y_new);
    const Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double err_norm = err.cwiseQuotient(scale(y, y_new)).cwiseAbs().maxCoeff();
    if (!std::isfinite(err_norm) || !y_new.allFinite()) {
      ++out.rejected;
      h = 0.25 * step;
      if (h < opts.min_step) {
        out.status = StepStatus::step_failure;
        break;
      }
      continue;
    }
    if (err_norm > 1.0) {
      ++out.rejected;
      h = step * std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      if (h < opts.min_step) {
        out.status = StepStatus::step_failure;
        break;
      }
      continue;
    }

    ++out.accepted;
    out.error_estimate += err.cwiseAbs().maxCoeff();
    t = lands ? target : t + hs;
    const Vec corrected = incr - carry;
    const Vec sum = y + corrected;
    carry = (sum - y) - corrected;
    y = sum;
    const double grow = err_norm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err_norm, -0.2));
    // Do not let a short landing step shrink the next one.
    h = std::min(std::max(h, step) * grow, opts.max_step);

    const Vec before = y;
    const bool keep_going = on_step(t, y);
    if (y != before) carry.setZero();
    k1 = f(t, y);
    out.t = t;
    out.y = y;
    if (!keep_going) {
      on_sample(t, y);
      out.status = StepStatus::stopped;
      return out;
    }
    if (!grid) {
      on_sample(t, y);
    } else if (lands) {
      on_sample(t, y);
      ++next_index;
    }
  }
  out.t = t;
  out.y = y;
  return out;
}

}  // namespace g2cone
