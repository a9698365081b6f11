#include <doctest.h>

#include <cmath>

#include "g2cone/analysis.hpp"
#include "g2cone/integrator.hpp"
#include "g2cone/shoot.hpp"

using namespace g2cone;

namespace {

double lambda_of(double mu) { return std::sqrt((1 - mu * mu) / 2); }

Vector4<double> s1() {
  const double k = 1.0 / (2.0 * std::sqrt(2.0));
  return {k, k, std::sqrt(3.0) * k, std::sqrt(3.0) * k};
}

/// Integrates the shape system without sampling and returns the state at t1.
Vector4<double> shape_at(const Vector4<double>& y0, double t0, double t1, double rtol = 1e-12) {
  using Vec = Eigen::Matrix<double, 4, 1>;
  IntegratorOptions o;
  o.rtol = rtol;
  o.atol = 1e-14;
  const auto out = integrate_dopri<4>([](double, const Vec& y) { return Vec(field(Vector4<double>(y))); }, t0, Vec(y0),
                                      t1, 0.0, [](double, Vec&) { return true; }, [](double, const Vec&) {}, o);
  REQUIRE(out.status == StepStatus::reached_end);
  return out.y;
}

}  // namespace

TEST_CASE("series start invariants") {
  for (const double mu : {0.1, 0.5, 0.9}) {
    for (int order = 3; order <= 8; ++order) {
      const SeriesStart s = series_start(mu, order);
      const double lambda = lambda_of(mu);
      CHECK(s.lambda == doctest::Approx(lambda).epsilon(1e-15));
      REQUIRE(s.coeffs.cols() == order + 1);
      CHECK(s.coeffs(0, 0) == mu);
      CHECK(s.coeffs(0, 1) == 0.0);
      CHECK(s.coeffs(1, 0) == doctest::Approx(lambda).epsilon(1e-15));
      CHECK(s.coeffs(2, 0) == 0.0);
      CHECK(s.coeffs(2, 1) == doctest::Approx(2.0).epsilon(1e-14));
      CHECK(s.coeffs(3, 0) == doctest::Approx(lambda).epsilon(1e-15));
      CHECK(s.coeffs(1, 1) == doctest::Approx(-s.coeffs(3, 1)).epsilon(1e-14));
      CHECK(s.coeffs(1, 1) == doctest::Approx(-mu / (4 * lambda)).epsilon(1e-13));
      CHECK(s.delta_max() > 0.0);
      CHECK(s.delta_max() <= 1e-2);
    }
  }
  CHECK_THROWS_AS(series_start(0.0), std::invalid_argument);
  CHECK_THROWS_AS(series_start(1.0), std::invalid_argument);
  CHECK_THROWS_AS(series_start(0.5, 2), std::invalid_argument);
  CHECK_THROWS_AS(series_start(0.5, 9), std::invalid_argument);
}

TEST_CASE("the truncated series nearly solves the system") {
  for (const double mu : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const SeriesStart s = series_start(mu, 4);
    const double t = std::min(1e-3, s.delta_max());
    const Vector4<double> lhs = eval_series_derivative(s, t).coeffs;
    const Vector4<double> v = rhs(eval_series(s, t)).coeffs;
    CHECK((lhs - v).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("series evaluation") {
  const double mu = 0.5;
  const SeriesStart s = series_start(mu);
  CHECK((eval_series(s, 0.0).coeffs - Vector4<double>(mu, lambda_of(mu), 0, lambda_of(mu))).norm() <= 1e-15);
  CHECK(std::abs(eval_series(s, 1e-6).B1() - 2e-6) <= 1e-14);
  CHECK_THROWS_AS(eval_series(s, -1e-9), std::out_of_range);
  CHECK_THROWS_AS(eval_series(s, 2 * s.delta_max()), std::out_of_range);
}

TEST_CASE("the launch offset does not matter") {
  for (const double mu : {0.2, 0.5}) {
    const SeriesStart s = series_start(mu);
    const double d = s.delta_max();
    const Vector4<double> a = shape_at(eval_series(s, d).coeffs, d, 1.0);
    const Vector4<double> b = shape_at(eval_series(s, d / 2).coeffs, d / 2, 1.0);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("integrate_shape reproduces the explicit asymptotically conic solution") {
  const double r0 = 1.5;
  const Trajectory traj = integrate_shape(closed_form(ClosedFormKind::bs, r0), 0.0, 5.0);
  CHECK(traj.termination == Termination::reached_horizon);
  REQUIRE(traj.samples.size() > 50);
  CHECK(traj.samples.back().t == doctest::Approx(5.0));
  const double t_base = r_to_t(ClosedFormKind::bs, r0);
  double worst = 0.0;
  for (const auto& smp : traj.samples) {
    // B1 = r / sqrt(3) recovers r; then both the shape and the elapsed t must match.
    const double r = std::sqrt(3.0) * smp.shape.B1();
    worst = std::max(worst, (smp.shape.coeffs - closed_form(ClosedFormKind::bs, r).coeffs).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(smp.t - (r_to_t(ClosedFormKind::bs, r) - t_base)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("integrate_shape preconditions") {
  const double mu = 0.5, lambda = lambda_of(mu);
  CHECK_THROWS_AS(integrate_shape(ShapeState(mu, lambda, 0, lambda), 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate_shape(ShapeState(1, 1, 1, 1), 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("the first integral is conserved along the family") {
  for (const double mu : {0.1, 0.3, 0.5}) {
    FamilyOptions o;
    o.t_max = 50.0;
    const Trajectory traj = family_shape_trajectory(mu, o);
    REQUIRE(traj.termination == Termination::reached_horizon);
    const double F0 = 2 * mu * lambda_of(mu) * lambda_of(mu);
    double drift = 0.0;
    for (const auto& smp : traj.samples) drift = std::max(drift, std::abs(first_integral(smp.shape) - F0));
    CHECK(drift <= 1e-8);
  }
}

TEST_CASE("trajectory invariants along the family") {
  const Trajectory traj = family_shape_trajectory(0.3);
  REQUIRE(traj.termination == Termination::reached_horizon);
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& smp = traj.samples[i];
    CHECK(std::abs(smp.sphere.coeffs.norm() - 1.0) <= 1e-12);
    CHECK((smp.shape.coeffs.array() > 0.0).all());
    if (i > 0) {
      CHECK(smp.parameter > traj.samples[i - 1].parameter);
      CHECK(smp.u > traj.samples[i - 1].u);
    }
    const auto& a = smp.sphere.coeffs;
    CHECK((a[3] > a[1] && a[1] > 0 && a[0] > 0 && a[2] > 0));
  }
}

TEST_CASE("monotone functionals and region ordering along the family") {
  for (const double mu : {0.1, 0.5}) {
    FamilyOptions o;
    o.t_max = 50.0;
    const Trajectory traj = family_shape_trajectory(mu, o);
    REQUIRE(traj.samples.size() > 2);
    CHECK(*traj.samples.front().monitors.G1 > 0.0);
    bool g2_negative = false;
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
      const auto& prev = traj.samples[i - 1].monitors;
      const auto& cur = traj.samples[i].monitors;
      CHECK(*cur.F1 >= *prev.F1 - 1e-12);
      if (prev.F2 && cur.F2) CHECK(*cur.F2 >= *prev.F2 - 1e-12);
      if (*cur.G2 < 0.0) g2_negative = true;
      if (g2_negative) CHECK(*cur.G2 < 0.0);
      if (*cur.G2 > 0.0) CHECK(*cur.F5 > 0.0);
    }
  }
}

TEST_CASE("tolerance scaling") {
  FamilyOptions coarse, fine;
  coarse.t_max = fine.t_max = 50.0;
  coarse.integration.rtol = 1e-9;
  fine.integration.rtol = 5e-10;
  const Trajectory a = family_shape_trajectory(0.5, coarse);
  const Trajectory b = family_shape_trajectory(0.5, fine);
  const double change = (a.samples.back().shape.coeffs - b.samples.back().shape.coeffs).cwiseAbs().maxCoeff();
  CHECK(change < 10.0 * a.error_estimate);
}

TEST_CASE("launch off the singular arc") {
  for (const double mu : {0.2, 0.5, 0.8}) {
    const Vector3<double> e = launch_direction(mu);
    CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-15));
    // Independent check: e is the eigenvector of the chart linearization with eigenvalue 2.
    Eigen::Matrix3d j;
    const double h = 1e-6;
    const Vector3<double> c(0, 0, mu);
    for (int k = 0; k < 3; ++k) {
      const Vector3<double> d = h * Vector3<double>::Unit(k);
      j.col(k) = (modified_field(ChartPoint(Vector3<double>(c + d))) - modified_field(ChartPoint(Vector3<double>(c - d)))) /
                 (2 * h);
    }
    CHECK((j * e - 2.0 * e).norm() <= 1e-7);

    const double eps = 1e-5;
    SphereIntegrationOptions o;
    o.u_max = 5.0;
    const Trajectory traj = launch_sphere(mu, eps, o);
    REQUIRE(traj.samples.size() > 2);
    CHECK((sphere_to_chart(traj.samples.front().sphere).coeffs - (c + eps * e)).norm() <= 1e-15);
    for (const auto& smp : traj.samples) {
      CHECK(smp.sphere.alpha3() > 0.0);
      CHECK(smp.sphere.alpha4() > smp.sphere.alpha2());
    }
  }
  CHECK_THROWS_AS(launch_sphere(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(launch_sphere(0.5, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(launch_sphere(1.0, 1e-5), std::invalid_argument);
}

TEST_CASE("halving the launch offset barely moves the trajectory") {
  for (const double mu : {0.2, 0.5}) {
    SphereIntegrationOptions o;
    o.u_max = 10.0;
    const auto a = sphere_at_alpha3(launch_sphere(mu, 1e-5, o), 0.3);
    const auto b = sphere_at_alpha3(launch_sphere(mu, 5e-6, o), 0.3);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK((a->coeffs - b->coeffs).norm() <= 1e-6);
  }
}

TEST_CASE("the shape route and the sphere route trace the same curve") {
  for (const double mu : {0.1, 0.3, 0.5}) {
    FamilyOptions fo;
    fo.t_max = 10.0;
    const Trajectory shape = family_shape_trajectory(mu, fo);
    SphereIntegrationOptions so;
    so.u_max = 10.0;
    const Trajectory sphere = launch_sphere(mu, 1e-5, so);
    for (const double level : {0.05, 0.1, 0.2, 0.3}) {
      const auto a = sphere_at_alpha3(shape, level);
      const auto b = sphere_at_alpha3(sphere, level);
      REQUIRE(a.has_value());
      REQUIRE(b.has_value());
      CHECK((a->coeffs - b->coeffs).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
}

TEST_CASE("convergence detection") {
  SphereIntegrationOptions o;
  o.u_max = 40.0;
  const Trajectory traj = launch_sphere(0.5, 1e-5, o);
  const ConvergenceResult to_limit = detect_convergence(traj, limit_point(), 1e-6);
  CHECK(to_limit.converged);
  REQUIRE(to_limit.parameter.has_value());
  CHECK(*to_limit.parameter < 40.0);
  for (std::size_t i = *to_limit.index; i < traj.samples.size(); ++i)
    CHECK((traj.samples[i].sphere.coeffs - limit_point().coeffs).norm() <= 1e-6);

  CHECK_FALSE(detect_convergence(traj, SphereState(s1()), 1e-6).converged);

  Trajectory constant;
  constant.kind = ParameterKind::u;
  for (int i = 0; i < 10; ++i)
    constant.samples.push_back(make_sample(i, 0.0, i, from_sphere(limit_point(), 1.0 + i)));
  const ConvergenceResult c = detect_convergence(constant, limit_point(), 1e-6);
  CHECK(c.converged);
  CHECK(*c.parameter == 0.0);
  CHECK(*c.index == 0);

  const SphereState expected(0.0, std::sqrt(0.3), std::sqrt(0.4), std::sqrt(0.3));
  CHECK((limit_point().coeffs - expected.coeffs).norm() <= 1e-16);
}

TEST_CASE("affine fits at large t") {
  SUBCASE("family member") {
    const ALCFit fit = alc_fit(family_shape_trajectory(0.5), 0.5);
    const double expected[4] = {0.0, 1 / std::sqrt(3.0), 2.0 / 3.0, 1 / std::sqrt(3.0)};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(fit.slope[i] - expected[i]) <= 2e-2);
    CHECK(fit.t_hi - fit.t_lo >= 10.0);
  }
  SUBCASE("explicit solution") {
    const Trajectory traj = closed_form_trajectory(ClosedFormKind::bs, linspace(1 + 1e-6, 501.0, 2000));
    const ALCFit fit = alc_fit(traj, 0.5);
    const double expected[4] = {1 / 3.0, 1 / 3.0, 1 / std::sqrt(3.0), 1 / std::sqrt(3.0)};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(fit.slope[i] - expected[i]) <= 1e-3);
  }
  SUBCASE("exact cone") {
    Trajectory ray;
    ray.kind = ParameterKind::t;
    for (int i = 0; i <= 100; ++i) {
      const double t = 1.0 + i;
      ray.samples.push_back(make_sample(t, t, std::log(t), from_sphere(limit_point(), t)));
    }
    const ALCFit fit = alc_fit(ray, 0.5);
    CHECK(fit.max_rel_deviation <= 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(fit.slope[i] - limit_point().coeffs[i]) <= 1e-12);
  }
  SUBCASE("rejections") {
    FamilyOptions o;
    o.t_max = 20.0;
    CHECK_THROWS_AS(alc_fit(family_shape_trajectory(0.5, o), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(alc_fit(family_shape_trajectory(0.5), 0.01), std::invalid_argument);
    SphereIntegrationOptions so;
    so.u_max = 5.0;
    CHECK_THROWS_AS(alc_fit(launch_sphere(0.5, 1e-5, so), 0.5), std::invalid_argument);
  }
}
