#pragma once

// Trajectory production: power-series launch off the singular orbit, the
// chart launch off the singular arc, adaptive integration of the shape and
// sphere systems, convergence detection and asymptotically-locally-conic fits.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "g2cone/flow.hpp"
#include "g2cone/types.hpp"

namespace g2cone {

/// Truncated power series of (A1, A2, B1, B2) in t around the singular
/// orbit, seeded by (mu, lambda, 0, lambda) with lambda = sqrt((1 - mu^2)/2).
struct SeriesStart {
  double mu = 0.0;
  double lambda = 0.0;
  int order = 0;
  /// Row i holds the t^k coefficients of component i (A1, A2, B1, B2).
  Eigen::Matrix<double, 4, Eigen::Dynamic> coeffs;

  /// Largest t for which the last retained term stays below 1e-10, capped at 1e-2.
  double delta_max() const;
};

SeriesStart series_start(double mu, int order = 4);
ShapeState eval_series(const SeriesStart& s, double t);
/// Term-by-term t-derivative of the truncated series.
DerivVector eval_series_derivative(const SeriesStart& s, double t);

enum class ParameterKind { t, u, v };
enum class Termination { reached_horizon, converged_to_target, positivity_violation, step_failure };

std::string to_string(ParameterKind kind);
std::string to_string(Termination termination);

struct TrajectorySample {
  double parameter = 0.0;
  double t = 0.0;
  double u = 0.0;
  ShapeState shape;
  SphereState sphere;
  double f = 0.0;
  MonitorVector monitors;
};

struct Trajectory {
  ParameterKind kind = ParameterKind::t;
  std::vector<TrajectorySample> samples;
  Termination termination = Termination::reached_horizon;
  /// Accumulated embedded local error estimate of the integrator.
  double error_estimate = 0.0;
  /// Largest |1 - |S|| removed by sphere renormalization.
  double max_projection_drift = 0.0;
};

/// Builds a sample (sphere projection and monitors) from a shape state.
TrajectorySample make_sample(double parameter, double t, double u, const ShapeState& shape);

struct ShapeIntegrationOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double sample_step = 0.05;
  double positivity_floor = 1e-9;
  /// Value of u = integral dt / |R| at t0.
  double initial_u = 0.0;
};

/// Integrates the shape system in t together with u. Terminates early when a
/// component drops below the positivity floor or the step size collapses.
Trajectory integrate_shape(const ShapeState& start, double t0, double t1, const ShapeIntegrationOptions& opts = {});

struct FamilyOptions {
  int order = 4;
  double t_max = 200.0;
  ShapeIntegrationOptions integration;
};

/// series_start -> eval_series at delta_max -> integrate_shape to t_max.
Trajectory family_shape_trajectory(double mu, const FamilyOptions& opts = {});

struct SphereIntegrationOptions {
  double u_max = 60.0;
  double rtol = 1e-10;
  double atol = 1e-12;
  double sample_step = 0.05;
  double positivity_floor = 1e-9;
  /// Chart coordinate x at which the desingularized phase hands over to the
  /// sphere system.
  double switch_x = 0.01;
  /// When set, stop as soon as |S - target| <= stop_tol.
  std::optional<SphereState> stop_target;
  double stop_tol = 1e-6;
};

/// Unit unstable eigenvector of the desingularized system at (0, 0, mu).
Vector3<double> launch_direction(double mu);

/// Trajectory of the sphere flow leaving (mu, lambda, 0, lambda), launched at
/// chart point (0, 0, mu) + eps * launch_direction(mu). Parameterized by u;
/// the desingularized phase contributes samples with du = x dv. Tracks ln f
/// and t with f = 1 and t = 0 at the launch.
Trajectory launch_sphere(double mu, double eps, const SphereIntegrationOptions& opts = {});

/// Continues a trajectory on the sphere system in u from `from`.
Trajectory continue_on_sphere(const TrajectorySample& from, const SphereIntegrationOptions& opts = {});

struct ConvergenceResult {
  bool converged = false;
  std::optional<double> parameter;
  std::optional<std::size_t> index;
};

/// First sample after which |S - target| <= tol holds for the rest of the trajectory.
ConvergenceResult detect_convergence(const Trajectory& traj, const SphereState& target, double tol = 1e-6);

/// The limit direction (0, sqrt(3/10), sqrt(2/5), sqrt(3/10)).
SphereState limit_point();

struct ALCFit {
  std::array<double, 4> slope{};
  std::array<double, 4> intercept{};
  double t_lo = 0.0;
  double t_hi = 0.0;
  double max_rel_deviation = 0.0;
};

/// Least-squares affine fit of A1, A2, B1, B2 against t over the trailing
/// `window_fraction` of a t-parameterized trajectory.
ALCFit alc_fit(const Trajectory& traj, double window_fraction = 0.5);

/// Position along a sphere trajectory where alpha3 first reaches `level`,
/// located by cubic Hermite interpolation in u with W as the derivative.
std::optional<SphereState> sphere_at_alpha3(const Trajectory& traj, double level);

}  // namespace g2cone
