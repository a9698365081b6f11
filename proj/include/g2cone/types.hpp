#pragma once

#include <Eigen/Core>

namespace g2cone {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;

/// Metric length scales (A1, A2, B1, B2) of the cohomogeneity-one ansatz,
/// restricted to A3 = A2 and B3 = B2.
template <typename Scalar>
struct ShapeStateT {
  Vector4<Scalar> coeffs = Vector4<Scalar>::Zero();

  ShapeStateT() = default;
  explicit ShapeStateT(const Vector4<Scalar>& v) : coeffs(v) {}
  ShapeStateT(Scalar a1, Scalar a2, Scalar b1, Scalar b2) : coeffs(a1, a2, b1, b2) {}

  Scalar A1() const { return coeffs[0]; }
  Scalar A2() const { return coeffs[1]; }
  Scalar B1() const { return coeffs[2]; }
  Scalar B2() const { return coeffs[3]; }
};

/// d/dt of a ShapeStateT.
template <typename Scalar>
struct DerivVectorT {
  Vector4<Scalar> coeffs = Vector4<Scalar>::Zero();

  DerivVectorT() = default;
  explicit DerivVectorT(const Vector4<Scalar>& v) : coeffs(v) {}
  DerivVectorT(Scalar da1, Scalar da2, Scalar db1, Scalar db2) : coeffs(da1, da2, db1, db2) {}

  Scalar dA1() const { return coeffs[0]; }
  Scalar dA2() const { return coeffs[1]; }
  Scalar dB1() const { return coeffs[2]; }
  Scalar dB2() const { return coeffs[3]; }
};

/// Unit shape direction S = R / |R| on S^3.
template <typename Scalar>
struct SphereStateT {
  Vector4<Scalar> coeffs = Vector4<Scalar>::Zero();

  SphereStateT() = default;
  explicit SphereStateT(const Vector4<Scalar>& v) : coeffs(v) {}
  SphereStateT(Scalar a1, Scalar a2, Scalar a3, Scalar a4) : coeffs(a1, a2, a3, a4) {}

  Scalar alpha1() const { return coeffs[0]; }
  Scalar alpha2() const { return coeffs[1]; }
  Scalar alpha3() const { return coeffs[2]; }
  Scalar alpha4() const { return coeffs[3]; }
};

/// Local coordinates near the singular arc: x = alpha3, y = alpha4 - alpha2,
/// z = alpha1.
template <typename Scalar>
struct ChartPointT {
  Vector3<Scalar> coeffs = Vector3<Scalar>::Zero();

  ChartPointT() = default;
  explicit ChartPointT(const Vector3<Scalar>& v) : coeffs(v) {}
  ChartPointT(Scalar x, Scalar y, Scalar z) : coeffs(x, y, z) {}

  Scalar x() const { return coeffs[0]; }
  Scalar y() const { return coeffs[1]; }
  Scalar z() const { return coeffs[2]; }
};

using ShapeState = ShapeStateT<double>;
using DerivVector = DerivVectorT<double>;
using SphereState = SphereStateT<double>;
using ChartPoint = ChartPointT<double>;

}  // namespace g2cone
