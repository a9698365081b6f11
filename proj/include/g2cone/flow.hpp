#pragma once

// The torsion-free shape system dR/dt = V(R), its first integral, the
// radial/tangential split R = f S on S^3, the desingularizing chart near the
// singular arc, the discrete symmetries and the monitor functionals.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "g2cone/types.hpp"

namespace g2cone {

/// Chart radius around the singular arc and the smallest accepted radicand
/// 2 - 2x^2 - y^2 - 2z^2 inside it.
inline constexpr double kChartRadius = 0.35;
inline constexpr double kChartMinRadicand = 0.05;

/// V(R) without domain checks; non-finite where a denominator vanishes.
template <typename Scalar>
Vector4<Scalar> field(const Vector4<Scalar>& r) {
  const Scalar a1 = r[0], a2 = r[1], b1 = r[2], b2 = r[3];
  const Scalar half(0.5);
  return {half * (a1 * a1 / (a2 * a2) - a1 * a1 / (b2 * b2)),
          half * ((b2 * b2 - a2 * a2 + b1 * b1) / (b1 * b2) - a1 / a2),
          (a2 * a2 + b2 * b2 - b1 * b1) / (a2 * b2),
          half * ((a2 * a2 - b2 * b2 + b1 * b1) / (a2 * b1) + a1 / b2)};
}

template <typename Scalar>
DerivVectorT<Scalar> rhs(const ShapeStateT<Scalar>& s) {
  if (s.A2() == Scalar(0) || s.B1() == Scalar(0) || s.B2() == Scalar(0))
    throw std::domain_error("rhs: A2, B1 and B2 must be nonzero");
  return DerivVectorT<Scalar>(field(s.coeffs));
}

/// F = 2 A1 A2 B2 - B1 (B2^2 - A2^2), conserved along the flow.
template <typename Scalar>
Scalar first_integral(const Vector4<Scalar>& r) {
  return Scalar(2) * r[0] * r[1] * r[3] - r[2] * (r[3] * r[3] - r[1] * r[1]);
}

template <typename Scalar>
Scalar first_integral(const ShapeStateT<Scalar>& s) {
  return first_integral(s.coeffs);
}

template <typename Scalar>
struct SphereProjectionT {
  SphereStateT<Scalar> direction;
  Scalar scale;
};
using SphereProjection = SphereProjectionT<double>;

template <typename Scalar>
SphereProjectionT<Scalar> to_sphere(const ShapeStateT<Scalar>& s) {
  const Scalar f = s.coeffs.norm();
  if (f == Scalar(0)) throw std::domain_error("to_sphere: zero shape vector");
  return {SphereStateT<Scalar>(Vector4<Scalar>(s.coeffs / f)), f};
}

template <typename Scalar>
ShapeStateT<Scalar> from_sphere(const SphereStateT<Scalar>& S, Scalar f) {
  if (!(f > Scalar(0))) throw std::domain_error("from_sphere: scale must be positive");
  return ShapeStateT<Scalar>(Vector4<Scalar>(f * S.coeffs));
}

namespace detail {

template <typename Scalar>
void require_sphere_domain(const Vector4<Scalar>& s, const char* where) {
  if (s[1] == Scalar(0) || s[2] == Scalar(0) || s[3] == Scalar(0))
    throw std::domain_error(std::string(where) + ": alpha2, alpha3 and alpha4 must be nonzero");
}

}  // namespace detail

/// W(S) = V(S) - <V(S), S> S.
template <typename Scalar>
Vector4<Scalar> tangential_field(const Vector4<Scalar>& s) {
  detail::require_sphere_domain(s, "tangential_field");
  const Vector4<Scalar> v = field(s);
  return v - v.dot(s) * s;
}

template <typename Scalar>
Vector4<Scalar> tangential_field(const SphereStateT<Scalar>& S) {
  return tangential_field(S.coeffs);
}

/// beta = <V(S), S> = (1/f) df/du.
template <typename Scalar>
Scalar radial_log_derivative(const Vector4<Scalar>& s) {
  detail::require_sphere_domain(s, "radial_log_derivative");
  return field(s).dot(s);
}

template <typename Scalar>
Scalar radial_log_derivative(const SphereStateT<Scalar>& S) {
  return radial_log_derivative(S.coeffs);
}

/// alpha3 * V(S) with the 1/alpha3 poles cancelled analytically, so it stays
/// finite on the arc alpha3 = 0.
template <typename Scalar>
Vector4<Scalar> scaled_field(const Vector4<Scalar>& s) {
  const Scalar a1 = s[0], a2 = s[1], x = s[2], a4 = s[3];
  const Scalar half(0.5);
  return {x * half * (a1 * a1 / (a2 * a2) - a1 * a1 / (a4 * a4)),
          half * ((a4 * a4 - a2 * a2 + x * x) / a4 - x * a1 / a2),
          x * (a2 * a2 + a4 * a4 - x * x) / (a2 * a4),
          half * ((a2 * a2 - a4 * a4 + x * x) / a2 + x * a1 / a4)};
}

template <typename Scalar>
Scalar chart_radicand(const ChartPointT<Scalar>& p) {
  return Scalar(2) - Scalar(2) * p.x() * p.x() - p.y() * p.y() - Scalar(2) * p.z() * p.z();
}

template <typename Scalar>
SphereStateT<Scalar> chart_to_sphere(const ChartPointT<Scalar>& p) {
  const Scalar rad = chart_radicand(p);
  if (rad < Scalar(0)) throw std::domain_error("chart_to_sphere: negative radicand");
  const Scalar root = std::sqrt(rad);
  return SphereStateT<Scalar>(p.z(), (root - p.y()) / Scalar(2), p.x(), (root + p.y()) / Scalar(2));
}

template <typename Scalar>
ChartPointT<Scalar> sphere_to_chart(const SphereStateT<Scalar>& S) {
  if (!(S.alpha2() + S.alpha4() > Scalar(0))) throw std::domain_error("sphere_to_chart: point outside the chart");
  return ChartPointT<Scalar>(S.alpha3(), S.alpha4() - S.alpha2(), S.alpha1());
}

/// x * (dx/du, dy/du, dz/du): the flow on S^3 in chart coordinates, rescaled
/// by du = x dv so it extends smoothly across x = 0. Since y = alpha4 - alpha2
/// its rate is W4 - W2.
template <typename Scalar>
Vector3<Scalar> modified_field(const ChartPointT<Scalar>& p) {
  if (chart_radicand(p) < Scalar(0)) throw std::domain_error("modified_field: invalid chart point");
  const Vector4<Scalar> s = chart_to_sphere(p).coeffs;
  const Vector4<Scalar> xv = scaled_field(s);
  const Vector4<Scalar> xw = xv - xv.dot(s) * s;
  return {xw[2], xw[3] - xw[1], xw[0]};
}

/// The five maps generating the discrete symmetry group; maps 2 and 3 also
/// reverse the flow parameter (u -> -u).
template <typename Scalar>
Vector4<Scalar> apply_symmetry(const Vector4<Scalar>& a, int k) {
  switch (k) {
    case 1: return {-a[0], a[3], a[2], a[1]};
    case 2: return {-a[0], a[1], a[2], -a[3]};
    case 3: return {-a[0], -a[1], a[2], a[3]};
    case 4: return {a[0], a[1], -a[2], -a[3]};
    case 5: return {a[0], -a[1], -a[2], a[3]};
    default: throw std::out_of_range("apply_symmetry: index must be in 1..5");
  }
}

template <typename Scalar>
SphereStateT<Scalar> apply_symmetry(const SphereStateT<Scalar>& S, int k) {
  return SphereStateT<Scalar>(apply_symmetry(S.coeffs, k));
}

inline bool symmetry_reverses_parameter(int k) {
  if (k < 1 || k > 5) throw std::out_of_range("symmetry_reverses_parameter: index must be in 1..5");
  return k == 2 || k == 3;
}

/// Monitor functionals; an entry is empty where its formula is undefined.
template <typename Scalar>
struct MonitorVectorT {
  std::optional<Scalar> F, F1, F2, F3, F4, F5, G1, G2, beta;
};
using MonitorVector = MonitorVectorT<double>;

template <typename Scalar>
MonitorVectorT<Scalar> monitors(const SphereStateT<Scalar>& S, Scalar f) {
  const Scalar a1 = S.alpha1(), a2 = S.alpha2(), a3 = S.alpha3(), a4 = S.alpha4();
  const auto finite = [](Scalar v) -> std::optional<Scalar> {
    if (std::isfinite(v)) return v;
    return std::nullopt;
  };
  MonitorVectorT<Scalar> m;
  const Scalar d = first_integral(S.coeffs);
  m.F = finite(f * f * f * d);
  if (d != Scalar(0)) m.F1 = finite(a1 * a2 * a4 / d);
  const Scalar den2 = a4 * a2 * a1;
  if (den2 != Scalar(0)) {
    const Scalar arg = a3 * (a4 * a4 - a2 * a2) / den2;
    if (arg > Scalar(0)) m.F2 = finite(std::log(arg));
  }
  if (a4 != Scalar(0)) {
    if (a2 / a4 > Scalar(0)) m.F3 = finite(std::log(a2 / a4));
    m.F4 = finite(a3 / a4);
  }
  m.F5 = a4 * a4 - a3 * a3;
  m.G1 = a2 * a4 - a1 * a3;
  m.G2 = a1 * a4 - a2 * a3;
  if (a2 != Scalar(0) && a3 != Scalar(0) && a4 != Scalar(0)) m.beta = finite(radial_log_derivative(S.coeffs));
  return m;
}

}  // namespace g2cone
