#include "g2cone/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "g2cone/flow.hpp"

namespace g2cone {

namespace {

constexpr double kInvSqrt3 = 0.57735026918962576451;

// Kronrod abscissae on [0, 1] in decreasing order; odd positions (1, 3, 5, 7)
// are the 7-point Gauss nodes.
constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.0};
constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GKEstimate {
  double kronrod;
  double error;
};

GKEstimate gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = wgk[7] * fc, g = wg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double s = f(c - h * xgk[i]) + f(c + h * xgk[i]);
    k += wgk[i] * s;
    if (i % 2 == 1) g += wg[i / 2] * s;
  }
  return {k * h, std::abs((k - g) * h)};
}

void require_domain(ClosedFormKind kind, double r, bool allow_edge) {
  const double edge = domain_edge(kind);
  const bool ok = allow_edge ? r >= edge : r > edge;
  if (!std::isfinite(r) || !ok) throw std::domain_error("closed form: r outside the domain of " + to_string(kind));
}

}  // namespace

std::string to_string(ClosedFormKind kind) {
  switch (kind) {
    case ClosedFormKind::bgg: return "bgg";
    case ClosedFormKind::bs: return "bs";
    case ClosedFormKind::singular: return "singular";
  }
  return "?";
}

ClosedFormKind closed_form_kind(const std::string& name) {
  if (name == "bgg") return ClosedFormKind::bgg;
  if (name == "bs") return ClosedFormKind::bs;
  if (name == "singular") return ClosedFormKind::singular;
  throw std::invalid_argument("unknown closed form: " + name);
}

double domain_edge(ClosedFormKind kind) {
  switch (kind) {
    case ClosedFormKind::bgg: return 2.25;
    case ClosedFormKind::bs: return 1.0;
    case ClosedFormKind::singular: return 0.0;
  }
  return 0.0;
}

ShapeState closed_form(ClosedFormKind kind, double r) {
  require_domain(kind, r, kind == ClosedFormKind::bgg);
  switch (kind) {
    case ClosedFormKind::bgg: {
      const double a1 = std::sqrt((r - 2.25) * (r + 2.25) / ((r - 0.75) * (r + 0.75)));
      const double a2 = kInvSqrt3 * std::sqrt((r + 0.75) * (r - 2.25));
      const double b2 = kInvSqrt3 * std::sqrt((r - 0.75) * (r + 2.25));
      return {a1, a2, 2.0 * r / 3.0, b2};
    }
    case ClosedFormKind::bs:
    case ClosedFormKind::singular: {
      const double sign = kind == ClosedFormKind::bs ? -1.0 : 1.0;
      const double a = (r / 3.0) * std::sqrt(1.0 + sign / (r * r * r));
      const double b = r * kInvSqrt3;
      return {a, a, b, b};
    }
  }
  return {};
}

double radial_speed(ClosedFormKind kind, double r) {
  require_domain(kind, r, kind == ClosedFormKind::bgg);
  switch (kind) {
    case ClosedFormKind::bgg: return closed_form(kind, r).A1();
    case ClosedFormKind::bs: return std::sqrt(1.0 - 1.0 / (r * r * r));
    case ClosedFormKind::singular: return std::sqrt(1.0 + 1.0 / (r * r * r));
  }
  return 0.0;
}

double integrate_gk(const std::function<double(double)>& f, double a, double b, double rel_tol, double abs_tol) {
  if (a == b) return 0.0;
  if (a > b) return -integrate_gk(f, b, a, rel_tol, abs_tol);
  const double width = b - a;
  std::vector<std::pair<double, double>> stack{{a, b}};
  double total = 0.0;
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    const GKEstimate e = gk15(f, lo, hi);
    const double allowed = std::max(abs_tol * (hi - lo) / width, rel_tol * std::abs(e.kronrod));
    if (e.error <= allowed || (hi - lo) < 1e-14 * width) {
      total += e.kronrod;
      continue;
    }
    const double mid = 0.5 * (lo + hi);
    stack.emplace_back(mid, hi);
    stack.emplace_back(lo, mid);
  }
  return total;
}

double r_to_t(ClosedFormKind kind, double r) {
  require_domain(kind, r, kind == ClosedFormKind::bgg);
  switch (kind) {
    case ClosedFormKind::bgg: {
      // r = 9/4 + s^2 removes the inverse square-root at the edge.
      const auto g = [](double s) {
        const double x = 2.25 + s * s;
        return 2.0 * std::sqrt((x - 0.75) * (x + 0.75) / (x + 2.25));
      };
      return integrate_gk(g, 0.0, std::sqrt(r - 2.25));
    }
    case ClosedFormKind::bs: {
      const auto g = [](double s) {
        const double x = 1.0 + s * s;
        return 2.0 * std::sqrt(x * x * x / (x * x + x + 1.0));
      };
      return integrate_gk(g, 0.0, std::sqrt(r - 1.0));
    }
    case ClosedFormKind::singular:
      return integrate_gk([](double x) { return 1.0 / std::sqrt(1.0 + 1.0 / (x * x * x)); }, 1.0, r);
  }
  return 0.0;
}

SolutionReport verify_solution(ClosedFormKind kind, const std::vector<double>& r_samples) {
  SolutionReport rep;
  rep.kind = kind;
  rep.samples = r_samples.size();
  if (r_samples.empty()) return rep;
  rep.F_min = std::numeric_limits<double>::infinity();
  rep.F_max = -std::numeric_limits<double>::infinity();
  double f_sum = 0.0;
  for (const double r : r_samples) {
    require_domain(kind, r, false);
    const double h = 1e-6 * r;
    const Vector4<double> drdr = (closed_form(kind, r + h).coeffs - closed_form(kind, r - h).coeffs) / (2.0 * h);
    const Vector4<double> lhs = drdr * radial_speed(kind, r);
    const ShapeState s = closed_form(kind, r);
    const Vector4<double> rhs_v = rhs(s).coeffs;
    const double mismatch = (lhs - rhs_v).cwiseAbs().maxCoeff() / rhs_v.cwiseAbs().maxCoeff();
    if (mismatch > rep.max_mismatch || !std::isfinite(mismatch)) {
      rep.max_mismatch = std::isfinite(mismatch) ? mismatch : std::numeric_limits<double>::infinity();
      rep.worst_r = r;
    }
    const double F = first_integral(s);
    rep.F_min = std::min(rep.F_min, F);
    rep.F_max = std::max(rep.F_max, F);
    f_sum += F;
  }
  rep.F_mean = f_sum / static_cast<double>(r_samples.size());
  return rep;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) out[0] = lo;
  for (std::size_t i = 0; i < n && n > 1; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

Trajectory closed_form_trajectory(ClosedFormKind kind, const std::vector<double>& r_samples) {
  if (!std::is_sorted(r_samples.begin(), r_samples.end()))
    throw std::invalid_argument("closed_form_trajectory: r samples must be increasing");
  Trajectory traj;
  traj.kind = ParameterKind::t;
  // u is measured from the first sample.
  double u = 0.0;
  for (std::size_t i = 0; i < r_samples.size(); ++i) {
    const double r = r_samples[i];
    if (i > 0) {
      u += integrate_gk(
          [kind](double x) { return 1.0 / (radial_speed(kind, x) * closed_form(kind, x).coeffs.norm()); },
          r_samples[i - 1], r);
    }
    const double t = r_to_t(kind, r);
    traj.samples.push_back(make_sample(t, t, u, closed_form(kind, r)));
  }
  return traj;
}

EigenResult eig_small(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0 || m.rows() > 4)
    throw std::invalid_argument("eig_small: expected a square matrix of size 1..4");
  if (!m.allFinite()) throw std::invalid_argument("eig_small: non-finite entries");

  const Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("eig_small: eigen solver did not converge");
  const Eigen::VectorXcd vals = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();

  const auto n = static_cast<int>(m.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (vals[a].real() != vals[b].real()) return vals[a].real() > vals[b].real();
    return vals[a].imag() > vals[b].imag();
  });

  EigenResult out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  const Eigen::MatrixXcd mc = m.cast<std::complex<double>>();
  for (int i = 0; i < n; ++i) {
    out.values[i] = vals[order[i]];
    out.vectors.col(i) = vecs.col(order[i]).normalized();
    const double res = (mc * out.vectors.col(i) - out.values[i] * out.vectors.col(i)).norm();
    out.max_residual = std::max(out.max_residual, res);
  }
  const double scale = std::max(m.norm(), std::numeric_limits<double>::min());
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.vectors);
  const auto& sv = svd.singularValues();
  const double cond = sv[n - 1] > 0.0 ? sv[0] / sv[n - 1] : std::numeric_limits<double>::infinity();
  out.defective = out.max_residual > 1e-8 * scale || cond > 1e8;
  return out;
}

Eigen::Matrix<double, 4, 3> tangent_basis(const Vector4<double>& s) {
  const Eigen::HouseholderQR<Eigen::Matrix<double, 4, 1>> qr(s.normalized());
  const Eigen::Matrix4d q = qr.householderQ() * Eigen::Matrix4d::Identity();
  return q.rightCols<3>();
}

Eigen::Matrix3d linearize_tangential(const SphereState& s, double h) {
  const auto g = [](const Vector4<double>& x) { return tangential_field(Vector4<double>(x.normalized())); };
  Eigen::Matrix4d j;
  for (int k = 0; k < 4; ++k) {
    const Vector4<double> e = h * Vector4<double>::Unit(k);
    j.col(k) = (g(s.coeffs + e) - g(s.coeffs - e)) / (2.0 * h);
  }
  const Eigen::Matrix<double, 4, 3> q = tangent_basis(s.coeffs);
  return q.transpose() * j * q;
}

Eigen::Matrix3d linearize_chart(const ChartPoint& p, double h) {
  Eigen::Matrix3d j;
  for (int k = 0; k < 3; ++k) {
    const Vector3<double> e = h * Vector3<double>::Unit(k);
    j.col(k) = (modified_field(ChartPoint(Vector3<double>(p.coeffs + e))) -
                modified_field(ChartPoint(Vector3<double>(p.coeffs - e)))) /
               (2.0 * h);
  }
  return j;
}

Eigen::Matrix3d linearize(const SphereState& s, LinearizationKind kind) {
  if (kind == LinearizationKind::tangential) {
    if (!(tangential_field(s).norm() <= 1e-8)) throw std::invalid_argument("linearize: not a stationary point");
    return linearize_tangential(s);
  }
  const ChartPoint p = sphere_to_chart(s);
  if (!(modified_field(p).norm() <= 1e-8)) throw std::invalid_argument("linearize: not a stationary chart point");
  return linearize_chart(p);
}

SphereState stationary_s1() {
  const double k = 1.0 / (2.0 * std::sqrt(2.0));
  return {k, k, std::sqrt(3.0) * k, std::sqrt(3.0) * k};
}

std::vector<SphereState> symmetry_orbit(const SphereState& s) {
  std::vector<SphereState> orbit{s};
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    for (int k = 1; k <= 5; ++k) {
      const SphereState img = apply_symmetry(orbit[i], k);
      const bool seen = std::any_of(orbit.begin(), orbit.end(), [&](const SphereState& o) {
        return (o.coeffs - img.coeffs).cwiseAbs().maxCoeff() <= 1e-12;
      });
      if (!seen) orbit.push_back(img);
    }
  }
  return orbit;
}

std::vector<StationaryReport> stationary_points(bool with_eigendata, bool with_orbits) {
  std::vector<StationaryReport> out(2);
  out[0].name = "S1";
  out[0].point = stationary_s1();
  out[1].name = "S_inf";
  out[1].point = limit_point();
  for (auto& rep : out) {
    rep.residual = tangential_field(rep.point).norm();
    if (with_eigendata) {
      const EigenResult e = eig_small(linearize(rep.point, LinearizationKind::tangential));
      rep.eigenvalues = e.values;
      rep.eigenvectors = tangent_basis(rep.point.coeffs).cast<std::complex<double>>() * e.vectors;
      for (int i = 0; i < e.values.size(); ++i) {
        const double re = e.values[i].real();
        if (std::abs(re) <= 1e-8) ++rep.zero;
        else if (re < 0.0) ++rep.negative;
        else ++rep.positive;
      }
    }
    if (with_orbits) {
      rep.orbit = symmetry_orbit(rep.point);
      rep.orbit_size = rep.orbit.size();
    }
  }
  return out;
}

}  // namespace g2cone
