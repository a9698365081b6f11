#pragma once

// Stationary points of the sphere flow and their linearizations, small dense
// eigenproblems, and the explicit solutions used as oracles.

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "g2cone/shoot.hpp"
#include "g2cone/types.hpp"

namespace g2cone {

// ---------------------------------------------------------------- closed forms

enum class ClosedFormKind { bgg, bs, singular };

std::string to_string(ClosedFormKind kind);
/// Inverse of to_string; throws std::invalid_argument on unknown names.
ClosedFormKind closed_form_kind(const std::string& name);

/// Smallest admissible r (inclusive for bgg, exclusive otherwise).
double domain_edge(ClosedFormKind kind);

ShapeState closed_form(ClosedFormKind kind, double r);

/// dr/dt along the curve: A1(r) for bgg, sqrt(1 -+ r^-3) for bs and singular.
double radial_speed(ClosedFormKind kind, double r);

/// t(r); origin at r = 9/4 (bgg) or r = 1 (bs, singular).
double r_to_t(ClosedFormKind kind, double r);

/// Adaptive Gauss-Kronrod (7, 15) quadrature on [a, b].
double integrate_gk(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-12,
                    double abs_tol = 1e-15);

struct SolutionReport {
  ClosedFormKind kind = ClosedFormKind::bgg;
  std::size_t samples = 0;
  /// max over samples of |dR/dt - V(R)|_inf / |V(R)|_inf, dR/dt by central
  /// differences in r.
  double max_mismatch = 0.0;
  double worst_r = 0.0;
  double F_min = 0.0;
  double F_max = 0.0;
  double F_mean = 0.0;
};

SolutionReport verify_solution(ClosedFormKind kind, const std::vector<double>& r_samples);

/// n equally spaced r in [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Samples of a closed form as a t-parameterized trajectory.
Trajectory closed_form_trajectory(ClosedFormKind kind, const std::vector<double>& r_samples);

// ------------------------------------------------------------ eigenproblems

struct EigenResult {
  Eigen::VectorXcd values;
  /// Column i pairs with values[i]; unit norm.
  Eigen::MatrixXcd vectors;
  /// max_i |M v_i - lambda_i v_i|.
  double max_residual = 0.0;
  bool defective = false;
};

/// Eigenpairs of a real square matrix of size at most 4, sorted by real part
/// (descending) and then imaginary part (descending).
EigenResult eig_small(const Eigen::MatrixXd& m);

// ---------------------------------------------------------- linearization

enum class LinearizationKind { tangential, modified_chart };

/// Orthonormal basis of the tangent space of S^3 at s (columns).
Eigen::Matrix<double, 4, 3> tangent_basis(const Vector4<double>& s);

/// Jacobian of W(X / |X|) at s by central differences, expressed in tangent_basis(s).
Eigen::Matrix3d linearize_tangential(const SphereState& s, double h = 1e-6);

/// Jacobian of the desingularized chart field at p by central differences.
Eigen::Matrix3d linearize_chart(const ChartPoint& p, double h = 1e-6);

/// Rejects points where the chosen field exceeds 1e-8.
Eigen::Matrix3d linearize(const SphereState& s, LinearizationKind kind);

// ------------------------------------------------------- stationary points

SphereState stationary_s1();

struct StationaryReport {
  std::string name;
  SphereState point;
  /// |W(point)|.
  double residual = 0.0;
  Eigen::VectorXcd eigenvalues;
  /// Tangent 4-vectors, one column per eigenvalue.
  Eigen::MatrixXcd eigenvectors;
  int negative = 0;
  int zero = 0;
  int positive = 0;
  std::vector<SphereState> orbit;
  std::size_t orbit_size = 0;
};

/// Closure of {s} under the five symmetry maps, duplicates merged at 1e-12.
std::vector<SphereState> symmetry_orbit(const SphereState& s);

/// S1 and S-infinity with residuals; eigendata and orbits on request.
std::vector<StationaryReport> stationary_points(bool with_eigendata = false, bool with_orbits = false);

}  // namespace g2cone
