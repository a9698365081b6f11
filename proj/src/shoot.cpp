#include "g2cone/shoot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>

#include "g2cone/integrator.hpp"

namespace g2cone {

namespace {

using Poly = Eigen::VectorXd;

// Product of two coefficient vectors truncated to degree n.
Poly mul(const Poly& a, const Poly& b, int n) {
  Poly c = Poly::Zero(n + 1);
  for (int i = 0; i <= n && i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; i + j <= n && j < b.size(); ++j) c[i + j] += a[i] * b[j];
  }
  return c;
}

Poly deriv(const Poly& a, int n) {
  Poly d = Poly::Zero(n + 1);
  for (int i = 1; i < a.size() && i - 1 <= n; ++i) d[i - 1] = i * a[i];
  return d;
}

// Polynomial forms of the shape system with denominators cleared. Entries
// 0 and 2 vanish through t^(k-1), entries 1 and 3 through t^k, once the
// coefficients up to order k are correct.
Eigen::Vector4d cleared_residual(const Eigen::Matrix<double, 4, Eigen::Dynamic>& c, int k) {
  const int n = k + 1;
  const Poly a1 = c.row(0).transpose(), a2 = c.row(1).transpose();
  const Poly b1 = c.row(2).transpose(), b2 = c.row(3).transpose();
  const Poly a1s = mul(a1, a1, n), a2s = mul(a2, a2, n), b1s = mul(b1, b1, n), b2s = mul(b2, b2, n);

  const Poly e1 = 2.0 * mul(mul(a2s, b2s, n), deriv(a1, n), n) - mul(a1s, b2s - a2s, n);
  const Poly e2 = 2.0 * mul(mul(mul(b1, b2, n), a2, n), deriv(a2, n), n) -
                  (mul(a2, b2s - a2s + b1s, n) - mul(mul(a1, b1, n), b2, n));
  const Poly e3 = mul(mul(a2, b2, n), deriv(b1, n), n) - (a2s + b2s - b1s);
  const Poly e4 = 2.0 * mul(mul(mul(a2, b1, n), b2, n), deriv(b2, n), n) -
                  (mul(b2, a2s - b2s + b1s, n) + mul(mul(a1, a2, n), b1, n));
  return {e1[k - 1], e2[k], e3[k - 1], e4[k]};
}

double poly_value(const Eigen::Matrix<double, 4, Eigen::Dynamic>& c, int row, double t) {
  double v = 0.0;
  for (int k = static_cast<int>(c.cols()) - 1; k >= 0; --k) v = v * t + c(row, k);
  return v;
}

bool any_below(const Vector4<double>& r, double floor) { return (r.array() < floor).any(); }

TrajectorySample sphere_sample(double u, double t, const Vector4<double>& s, double ln_f) {
  TrajectorySample out;
  out.parameter = u;
  out.t = t;
  out.u = u;
  out.f = std::exp(ln_f);
  out.sphere = SphereState(s);
  out.shape = ShapeState(Vector4<double>(out.f * s));
  out.monitors = monitors(out.sphere, out.f);
  return out;
}

Termination termination_for(StepStatus status, bool positivity_hit, bool target_hit) {
  if (positivity_hit) return Termination::positivity_violation;
  if (target_hit) return Termination::converged_to_target;
  if (status == StepStatus::step_failure) return Termination::step_failure;
  return Termination::reached_horizon;
}

// u-phase: state (S, ln f, t), dS/du = W, d ln f/du = beta, dt/du = f.
void run_sphere_phase(Trajectory& traj, double u0, const Vector4<double>& s0, double ln_f0, double t0,
                      const SphereIntegrationOptions& opts) {
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  Vec6 y0;
  y0 << s0, ln_f0, t0;
  if (!(opts.u_max > u0)) {
    traj.samples.push_back(sphere_sample(u0, t0, s0, ln_f0));
    traj.termination = Termination::reached_horizon;
    return;
  }

  auto rhs6 = [](double, const Vec6& y) {
    const Vector4<double> s = y.head<4>();
    const Vector4<double> v = field(s);
    const double beta = v.dot(s);
    Vec6 d;
    d << v - beta * s, beta, std::exp(y[4]);
    return d;
  };

  bool positivity_hit = false;
  bool target_hit = false;
  auto on_step = [&](double, Vec6& y) {
    const double n = y.head<4>().norm();
    traj.max_projection_drift = std::max(traj.max_projection_drift, std::abs(1.0 - n));
    y.head<4>() /= n;
    if (any_below(Vector4<double>(std::exp(y[4]) * y.head<4>()), opts.positivity_floor)) {
      positivity_hit = true;
      return false;
    }
    if (opts.stop_target && (y.head<4>() - opts.stop_target->coeffs).norm() <= opts.stop_tol) {
      target_hit = true;
      return false;
    }
    return true;
  };
  const bool skip_first = !traj.samples.empty();
  bool first = true;
  auto on_sample = [&](double u, const Vec6& y) {
    if (first && skip_first) {
      first = false;
      return;
    }
    first = false;
    traj.samples.push_back(sphere_sample(u, y[5], y.head<4>(), y[4]));
  };

  IntegratorOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  const auto res = integrate_dopri<6>(rhs6, u0, y0, opts.u_max, opts.sample_step, on_step, on_sample, io);
  traj.error_estimate += res.error_estimate;
  traj.termination = termination_for(res.status, positivity_hit, target_hit);
}

}  // namespace

double SeriesStart::delta_max() const {
  double top = 0.0;
  for (int i = 0; i < 4; ++i) top = std::max(top, std::abs(coeffs(i, order)));
  if (top == 0.0) return 1e-2;
  return std::min(1e-2, std::pow(1e-10 / top, 1.0 / order));
}

SeriesStart series_start(double mu, int order) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("series_start: mu must lie in (0,1)");
  if (order < 3 || order > 8) throw std::invalid_argument("series_start: order must lie in 3..8");

  SeriesStart s;
  s.mu = mu;
  s.lambda = std::sqrt((1.0 - mu * mu) / 2.0);
  s.order = order;
  s.coeffs = Eigen::Matrix<double, 4, Eigen::Dynamic>::Zero(4, order + 1);
  s.coeffs.col(0) << mu, s.lambda, 0.0, s.lambda;

  // First order is bilinear (B1' multiplies A2'), so it is fixed in closed
  // form; from order 2 on each order is affine in its four unknowns and is
  // solved by probing with unit vectors.
  const double a = mu / (4.0 * s.lambda);
  s.coeffs.col(1) << 0.0, -a, 2.0, a;
  for (int k = 2; k <= order; ++k) {
    auto c = s.coeffs.leftCols(k + 1).eval();
    c.col(k).setZero();
    const Eigen::Vector4d r0 = cleared_residual(c, k);
    Eigen::Matrix4d m;
    for (int j = 0; j < 4; ++j) {
      c.col(k) = Eigen::Vector4d::Unit(j);
      m.col(j) = cleared_residual(c, k) - r0;
    }
    const Eigen::FullPivLU<Eigen::Matrix4d> lu(m);
    if (!lu.isInvertible()) throw std::runtime_error("series_start: singular recursion");
    s.coeffs.col(k) = lu.solve(-r0);
  }
  return s;
}

ShapeState eval_series(const SeriesStart& s, double t) {
  if (!(t >= 0.0 && t <= s.delta_max()))
    throw std::out_of_range("eval_series: t outside [0, delta_max]");
  return {poly_value(s.coeffs, 0, t), poly_value(s.coeffs, 1, t), poly_value(s.coeffs, 2, t),
          poly_value(s.coeffs, 3, t)};
}

DerivVector eval_series_derivative(const SeriesStart& s, double t) {
  Eigen::Matrix<double, 4, Eigen::Dynamic> d = Eigen::Matrix<double, 4, Eigen::Dynamic>::Zero(4, s.order);
  for (int k = 1; k <= s.order; ++k) d.col(k - 1) = k * s.coeffs.col(k);
  return {poly_value(d, 0, t), poly_value(d, 1, t), poly_value(d, 2, t), poly_value(d, 3, t)};
}

std::string to_string(ParameterKind kind) {
  switch (kind) {
    case ParameterKind::t: return "t";
    case ParameterKind::u: return "u";
    case ParameterKind::v: return "v";
  }
  return "?";
}

std::string to_string(Termination termination) {
  switch (termination) {
    case Termination::reached_horizon: return "reached-horizon";
    case Termination::converged_to_target: return "converged-to-target";
    case Termination::positivity_violation: return "positivity-violation";
    case Termination::step_failure: return "step-failure";
  }
  return "?";
}

TrajectorySample make_sample(double parameter, double t, double u, const ShapeState& shape) {
  TrajectorySample out;
  out.parameter = parameter;
  out.t = t;
  out.u = u;
  out.shape = shape;
  const auto p = to_sphere(shape);
  out.sphere = p.direction;
  out.f = p.scale;
  out.monitors = monitors(p.direction, p.scale);
  return out;
}

Trajectory integrate_shape(const ShapeState& start, double t0, double t1, const ShapeIntegrationOptions& opts) {
  if (!(start.coeffs.array() > 0.0).all()) throw std::invalid_argument("integrate_shape: start must be strictly positive");
  if (!(t1 > t0)) throw std::invalid_argument("integrate_shape: t1 must exceed t0");

  using Vec5 = Eigen::Matrix<double, 5, 1>;
  Vec5 y0;
  y0 << start.coeffs, opts.initial_u;

  Trajectory traj;
  traj.kind = ParameterKind::t;
  bool positivity_hit = false;

  auto rhs5 = [](double, const Vec5& y) {
    const Vector4<double> r = y.head<4>();
    Vec5 d;
    d << field(r), 1.0 / r.norm();
    return d;
  };
  auto on_step = [&](double, Vec5& y) {
    if (any_below(y.head<4>(), opts.positivity_floor)) {
      positivity_hit = true;
      return false;
    }
    return true;
  };
  auto on_sample = [&](double t, const Vec5& y) {
    traj.samples.push_back(make_sample(t, t, y[4], ShapeState(Vector4<double>(y.head<4>()))));
  };

  IntegratorOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  const auto res = integrate_dopri<5>(rhs5, t0, y0, t1, opts.sample_step, on_step, on_sample, io);
  traj.error_estimate = res.error_estimate;
  traj.termination = termination_for(res.status, positivity_hit, false);
  return traj;
}

Trajectory family_shape_trajectory(double mu, const FamilyOptions& opts) {
  const SeriesStart s = series_start(mu, opts.order);
  const double delta = s.delta_max();

  // u(delta) = integral of 1/|R| over [0, delta], 5-point Gauss-Legendre.
  static constexpr double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                      0.9061798459386640};
  static constexpr double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                        0.4786286704993665, 0.2369268850561891};
  double u0 = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double t = 0.5 * delta * (nodes[i] + 1.0);
    u0 += weights[i] / eval_series(s, t).coeffs.norm();
  }
  u0 *= 0.5 * delta;

  ShapeIntegrationOptions io = opts.integration;
  io.initial_u = u0;
  return integrate_shape(eval_series(s, delta), delta, opts.t_max, io);
}

Vector3<double> launch_direction(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("launch_direction: mu must lie in (0,1)");
  return Vector3<double>(2.0, mu / std::sqrt(2.0 - 2.0 * mu * mu), 0.0).normalized();
}

Trajectory launch_sphere(double mu, double eps, const SphereIntegrationOptions& opts) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("launch_sphere: mu must lie in (0,1)");
  if (!(eps > 0.0 && eps <= 1e-4)) throw std::invalid_argument("launch_sphere: eps must lie in (0, 1e-4]");
  const Vector3<double> base(0.0, 0.0, mu);
  const ChartPoint p0(Vector3<double>(base + eps * launch_direction(mu)));
  if (!(chart_radicand(p0) >= kChartMinRadicand))
    throw std::invalid_argument("launch_sphere: launch point outside the chart validity region");

  Trajectory traj;
  traj.kind = ParameterKind::u;

  // v-phase: state (x, y, z, u, ln f, t) under the desingularized field.
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  Vec6 y0;
  y0 << p0.coeffs, 0.0, 0.0, 0.0;
  auto rhs6 = [](double, const Vec6& y) {
    const ChartPoint p(Vector3<double>(y.head<3>()));
    const Vector4<double> s = chart_to_sphere(p).coeffs;
    Vec6 d;
    d << modified_field(p), p.x(), scaled_field(s).dot(s), p.x() * std::exp(y[4]);
    return d;
  };

  bool switched = false;
  auto on_step = [&](double, Vec6& y) {
    const ChartPoint p(Vector3<double>(y.head<3>()));
    if ((p.coeffs - base).norm() > kChartRadius || chart_radicand(p) < kChartMinRadicand) {
      return false;
    }
    if (y[0] >= opts.switch_x) {
      switched = true;
      return false;
    }
    return true;
  };
  auto on_sample = [&](double, const Vec6& y) {
    const ChartPoint p(Vector3<double>(y.head<3>()));
    if (chart_radicand(p) < 0.0) return;
    traj.samples.push_back(sphere_sample(y[3], y[5], chart_to_sphere(p).coeffs, y[4]));
  };

  IntegratorOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  // x grows like e^(2v); the v-horizon only guards against stalling.
  const auto res = integrate_dopri<6>(rhs6, 0.0, y0, 50.0, 0.0, on_step, on_sample, io);
  traj.error_estimate = res.error_estimate;
  if (!switched) {
    // Left the chart, stalled, or the step size collapsed before the switch.
    traj.termination = Termination::step_failure;
    return traj;
  }

  const Vec6& y = res.y;
  const Vector4<double> s = chart_to_sphere(ChartPoint(Vector3<double>(y.head<3>()))).coeffs;
  run_sphere_phase(traj, y[3], s, y[4], y[5], opts);
  return traj;
}

Trajectory continue_on_sphere(const TrajectorySample& from, const SphereIntegrationOptions& opts) {
  Trajectory traj;
  traj.kind = ParameterKind::u;
  const Vector4<double> s = from.sphere.coeffs.normalized();
  if (!(from.f > 0.0)) throw std::invalid_argument("continue_on_sphere: scale must be positive");
  run_sphere_phase(traj, from.u, s, std::log(from.f), from.t, opts);
  return traj;
}

ConvergenceResult detect_convergence(const Trajectory& traj, const SphereState& target, double tol) {
  ConvergenceResult out;
  const auto& smp = traj.samples;
  std::size_t first_ok = smp.size();
  for (std::size_t i = smp.size(); i-- > 0;) {
    if ((smp[i].sphere.coeffs - target.coeffs).norm() > tol) break;
    first_ok = i;
  }
  if (first_ok < smp.size()) {
    out.converged = true;
    out.index = first_ok;
    out.parameter = smp[first_ok].parameter;
  }
  return out;
}

SphereState limit_point() { return {0.0, std::sqrt(0.3), std::sqrt(0.4), std::sqrt(0.3)}; }

ALCFit alc_fit(const Trajectory& traj, double window_fraction) {
  if (traj.kind != ParameterKind::t) throw std::invalid_argument("alc_fit: trajectory must be parameterized by t");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw std::invalid_argument("alc_fit: window fraction must lie in (0,1]");
  if (traj.samples.size() < 2) throw std::invalid_argument("alc_fit: too few samples");
  const double t_first = traj.samples.front().t, t_last = traj.samples.back().t;
  if (t_last - t_first < 30.0) throw std::invalid_argument("alc_fit: horizon shorter than 30");

  ALCFit fit;
  fit.t_hi = t_last;
  fit.t_lo = t_last - window_fraction * (t_last - t_first);
  if (fit.t_hi - fit.t_lo < 10.0) throw std::invalid_argument("alc_fit: window shorter than 10");

  std::vector<const TrajectorySample*> win;
  for (const auto& s : traj.samples)
    if (s.t >= fit.t_lo) win.push_back(&s);
  if (win.size() < 2) throw std::invalid_argument("alc_fit: too few samples in window");

  double tm = 0.0;
  for (const auto* s : win) tm += s->t;
  tm /= static_cast<double>(win.size());
  double stt = 0.0;
  for (const auto* s : win) stt += (s->t - tm) * (s->t - tm);

  for (int i = 0; i < 4; ++i) {
    double ym = 0.0;
    for (const auto* s : win) ym += s->shape.coeffs[i];
    ym /= static_cast<double>(win.size());
    double sty = 0.0;
    for (const auto* s : win) sty += (s->t - tm) * (s->shape.coeffs[i] - ym);
    fit.slope[i] = sty / stt;
    fit.intercept[i] = ym - fit.slope[i] * tm;
    for (const auto* s : win) {
      const double pred = fit.intercept[i] + fit.slope[i] * s->t;
      const double actual = s->shape.coeffs[i];
      const double dev = actual == pred ? 0.0 : std::abs(1.0 - actual / pred);
      fit.max_rel_deviation = std::max(fit.max_rel_deviation, dev);
    }
  }
  return fit;
}

std::optional<SphereState> sphere_at_alpha3(const Trajectory& traj, double level) {
  const auto& smp = traj.samples;
  for (std::size_t i = 0; i + 1 < smp.size(); ++i) {
    const double a = smp[i].sphere.alpha3(), b = smp[i + 1].sphere.alpha3();
    if (!((a - level) * (b - level) <= 0.0) || a == b) continue;
    const double u0 = smp[i].u, h = smp[i + 1].u - u0;
    const Vector4<double> p0 = smp[i].sphere.coeffs, p1 = smp[i + 1].sphere.coeffs;
    const Vector4<double> m0 = h * tangential_field(p0), m1 = h * tangential_field(p1);
    const auto hermite = [&](double s) -> Vector4<double> {
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
    };
    double lo = 0.0, hi = 1.0;
    const bool rising = b > a;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      const bool below = hermite(mid)[2] < level;
      if (below == rising) lo = mid;
      else hi = mid;
    }
    return SphereState(Vector4<double>(hermite(0.5 * (lo + hi)).normalized()));
  }
  return std::nullopt;
}

}  // namespace g2cone
