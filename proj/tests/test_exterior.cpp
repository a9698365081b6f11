#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "g2cone/exterior.hpp"
#include "g2cone/flow.hpp"

using namespace g2cone;

namespace {

KForm e(std::initializer_list<int> idx) { return KForm::monomial(idx); }

KForm random_form(int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  KForm f(degree);
  for (unsigned m = 0; m < 128; ++m)
    if (std::popcount(m) == degree) f.add(static_cast<std::uint8_t>(m), u(rng));
  return f;
}

ShapeState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 5.0);
  return {u(rng), u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("monomials carry the permutation sign") {
  CHECK(e({2, 1}).coefficient({1, 2}) == -1.0);
  CHECK(e({5, 6, 4}).coefficient({4, 5, 6}) == 1.0);
  CHECK(e({5, 2, 7}).coefficient({2, 5, 7}) == -1.0);
  CHECK(e({1, 1}).nonzero_count() == 0);
}

TEST_CASE("wedge is graded commutative and nilpotent on 1-forms") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const KForm a = random_form(1, rng), b = random_form(2, rng), c = random_form(3, rng);
    CHECK(max_abs_difference(wedge(a, a), KForm(2)) <= 1e-15);
    CHECK(max_abs_difference(wedge(a, b), wedge(b, a)) <= 1e-14);
    CHECK(max_abs_difference(wedge(a, c), -1.0 * wedge(c, a)) <= 1e-14);
    CHECK(max_abs_difference(wedge(wedge(a, b), c), wedge(a, wedge(b, c))) <= 1e-13);
  }
  CHECK(wedge(e({1, 2, 3, 4}), e({5, 6, 7})).coefficient({1, 2, 3, 4, 5, 6, 7}) == 1.0);
  CHECK(wedge(e({1, 2, 3, 4}), e({1, 5, 6, 7})).nonzero_count() == 0);
}

TEST_CASE("hodge star squares to the identity in dimension seven") {
  std::mt19937_64 rng(11);
  for (int k = 0; k <= 7; ++k) {
    const KForm f = random_form(k, rng);
    CHECK(max_abs_difference(hodge_star(hodge_star(f)), f) <= 1e-15);
    // a ^ *a = |a|^2 vol
    double norm2 = 0.0;
    for (const auto& [mask, c] : f.terms()) norm2 += c * c;
    CHECK(wedge(f, hodge_star(f)).coefficient({1, 2, 3, 4, 5, 6, 7}) == doctest::Approx(norm2).epsilon(1e-13));
  }
  CHECK(hodge_star(KForm::constant(1.0)).coefficient({1, 2, 3, 4, 5, 6, 7}) == 1.0);
}

TEST_CASE("the G2 form has seven unit terms and Psi ^ *Psi = 7 vol") {
  const KForm psi = g2_form();
  CHECK(psi.nonzero_count() == 7);
  CHECK(psi.coefficient({4, 5, 6}) == 1.0);
  CHECK(psi.coefficient({2, 5, 7}) == -1.0);
  CHECK(psi.coefficient({1, 3, 5}) == 1.0);
  CHECK(psi.coefficient({1, 2, 6}) == -1.0);
  CHECK(psi.coefficient({3, 6, 7}) == -1.0);
  CHECK(psi.coefficient({2, 3, 4}) == -1.0);
  CHECK(psi.coefficient({1, 4, 7}) == -1.0);
  CHECK(wedge(psi, hodge_star(psi)).coefficient({1, 2, 3, 4, 5, 6, 7}) == doctest::Approx(7.0));
}

TEST_CASE("the metric induced by Psi is positive definite for the chosen orientation") {
  // (i_x Psi) ^ (i_y Psi) ^ Psi = 6 g(x, y) vol for a positive G2 form.
  const KForm psi = g2_form();
  const auto contract = [&](int i) {
    KForm out(2);
    for (const auto& [mask, c] : psi.terms()) {
      if (!(mask & (1u << (i - 1)))) continue;
      const auto rest = static_cast<std::uint8_t>(mask & ~(1u << (i - 1)));
      out.add(rest, c * KForm::shuffle_sign(static_cast<std::uint8_t>(1u << (i - 1)), rest));
    }
    return out;
  };
  for (int i = 1; i <= 7; ++i)
    for (int j = 1; j <= 7; ++j) {
      const double g = wedge(wedge(contract(i), contract(j)), psi).coefficient({1, 2, 3, 4, 5, 6, 7});
      CHECK(g == doctest::Approx(i == j ? 6.0 : 0.0));
    }
}

TEST_CASE("d^2 = 0 on the coframe along an arbitrary smooth path") {
  // Quadratic path in t; derivatives of the coefficients of de^i by a
  // five-point stencil.
  const std::array<double, 6> c0{0.9, 1.3, 0.7, 1.1, 0.8, 1.6}, c1{0.3, -0.2, 0.5, 0.1, 0.4, -0.3},
      c2{0.05, 0.1, -0.07, 0.02, -0.04, 0.06};
  const auto diffs_at = [&](double t) {
    std::array<double, 3> a, b, da, db;
    for (int i = 0; i < 3; ++i) {
      a[i] = c0[i] + c1[i] * t + c2[i] * t * t;
      b[i] = c0[i + 3] + c1[i + 3] * t + c2[i + 3] * t * t;
      da[i] = c1[i] + 2 * c2[i] * t;
      db[i] = c1[i + 3] + 2 * c2[i + 3] * t;
    }
    return coframe_differentials(a, b, da, db);
  };
  const double t = 0.4, h = 1e-3;
  const auto d0 = diffs_at(t);
  const auto dm2 = diffs_at(t - 2 * h), dm1 = diffs_at(t - h), dp1 = diffs_at(t + h), dp2 = diffs_at(t + 2 * h);
  for (int i = 0; i < 7; ++i) {
    const KForm dt_coeffs = (1.0 / (12.0 * h)) * (dm2[i] - 8.0 * dm1[i] + 8.0 * dp1[i] - dp2[i]);
    const KForm dd = wedge(e({7}), dt_coeffs) + exterior_derivative(d0[i], d0);
    CHECK(dd.max_abs() <= 1e-9);
  }
}

TEST_CASE("torsion-free derivatives reproduce the shape system") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ShapeState s = random_state(rng);
    const DerivVector d = rhs(s);
    const DerivVector solved = solve_torsion_free_derivs(s);
    CHECK((solved.coeffs - d.coeffs).cwiseAbs().maxCoeff() <= 1e-9 * d.coeffs.cwiseAbs().maxCoeff());
    const TorsionResidual r = torsion_residual(s, d);
    CHECK(r.closure <= 1e-10);
    CHECK(r.coclosure <= 1e-10);
  }
}

TEST_CASE("torsion residual is nonzero away from the shape system") {
  const ShapeState s(1.0, 1.0, 1.0, 1.0);
  const TorsionResidual r = torsion_residual(s, DerivVector(0.0, 0.0, 0.0, 0.0));
  CHECK(std::max(r.closure, r.coclosure) > 0.1);
  // The torsion system has rank four: the derivatives are determined.
  const auto sys = torsion_system(s);
  CHECK(sys.matrix.rows() == 56);
  CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(sys.matrix).rank() == 4);
}

TEST_CASE("a flipped sign in Psi no longer reproduces the shape system") {
  KForm psi = g2_form();
  psi -= 2.0 * KForm::monomial({4, 5, 6});
  const ShapeState s(1.2, 0.8, 1.5, 1.1);
  // Still solvable, but by other derivatives; rhs leaves torsion behind.
  const Vector4<double> d = solve_torsion_free_derivs(s, psi).coeffs;
  CHECK((d - rhs(s).coeffs).cwiseAbs().maxCoeff() > 0.1);
  const TorsionResidual r = torsion_residual(s, rhs(s), psi);
  CHECK(std::max(r.closure, r.coclosure) > 0.1);
}

TEST_CASE("non-positive states are rejected") {
  CHECK_THROWS_AS(torsion_system(ShapeState(1.0, 0.0, 1.0, 1.0)), std::domain_error);
  CHECK_THROWS_AS(coframe_differentials(ShapeState(-1.0, 1.0, 1.0, 1.0), DerivVector()), std::domain_error);
}

TEST_CASE("wedge and hodge star on basis elements") {
  CHECK(wedge(e({1}), e({2})).coefficient({1, 2}) == 1.0);
  CHECK(wedge(e({2}), e({1})).coefficient({1, 2}) == -1.0);
  CHECK(wedge(e({1}), e({1})).nonzero_count() == 0);
  CHECK(hodge_star(e({1, 2, 3, 4, 5, 6, 7})) == KForm::constant(1.0));
  CHECK(hodge_star(hodge_star(g2_form())) == g2_form());
}

TEST_CASE("the sorted support of Psi matches the brute-force parity normalization") {
  const int triples[7][3] = {{5, 6, 4}, {5, 2, 7}, {5, 1, 3}, {6, 2, 1}, {6, 3, 7}, {4, 3, 2}, {4, 1, 7}};
  const KForm psi = g2_form();
  for (const auto& t : triples) {
    int sorted[3] = {t[0], t[1], t[2]};
    int swaps = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j + 1 < 3 - i; ++j)
        if (sorted[j] > sorted[j + 1]) {
          std::swap(sorted[j], sorted[j + 1]);
          ++swaps;
        }
    CHECK(psi.coefficient({sorted[0], sorted[1], sorted[2]}) == (swaps % 2 == 0 ? 1.0 : -1.0));
  }
  CHECK(psi.coefficient({1, 2, 3}) == 0.0);
}

TEST_CASE("coframe differentials at the unit state") {
  const auto d = coframe_differentials(ShapeState(1, 1, 1, 1), DerivVector(0, 0, 0, 0));
  CHECK(d[6].nonzero_count() == 0);
  // eta_i = (e^i + e^{i+3})/2 and etat_i = (e^i - e^{i+3})/2 at the unit state.
  CHECK(max_abs_difference(d[0], -1.0 * (e({2, 3}) + e({5, 6}))) <= 1e-15);
  CHECK(max_abs_difference(d[3], e({3, 5}) - e({2, 6})) <= 1e-15);
}

TEST_CASE("coframe differentials are affine in the derivatives") {
  const ShapeState s(1.3, 0.7, 2.1, 0.9);
  const DerivVector d(0.4, -0.3, 1.2, 0.5);
  const auto one = coframe_differentials(s, d);
  const auto two = coframe_differentials(s, DerivVector(Vector4<double>(2.0 * d.coeffs)));
  const auto zero = coframe_differentials(s, DerivVector());
  for (int i = 0; i < 7; ++i) CHECK(max_abs_difference(two[i] - one[i], one[i] - zero[i]) <= 1e-15);
}

TEST_CASE("exterior derivative of closed basis forms") {
  const auto d = coframe_differentials(ShapeState(1.3, 0.7, 2.1, 0.9), DerivVector(0.4, -0.3, 1.2, 0.5));
  CHECK(exterior_derivative(KForm::constant(2.0), d).nonzero_count() == 0);
  CHECK(exterior_derivative(e({7}), d).nonzero_count() == 0);
}

TEST_CASE("unit state: torsion-free derivatives are (0, 0, 1, 1)") {
  const ShapeState s(1, 1, 1, 1);
  const TorsionResidual r = torsion_residual(s, DerivVector(0, 0, 1, 1));
  CHECK(r.closure <= 1e-12);
  CHECK(r.coclosure <= 1e-12);
  const DerivVector d = solve_torsion_free_derivs(s);
  CHECK((d.coeffs - Vector4<double>(0, 0, 1, 1)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("torsion-free derivatives along the explicit equal-scale metric") {
  // A = (r/3) sqrt(1 - r^-3), B = r/sqrt(3), with dt = dr / sqrt(1 - r^-3).
  const double r = 2.0, h = 1e-5;
  const auto state = [](double x) {
    const double a = (x / 3.0) * std::sqrt(1.0 - 1.0 / (x * x * x)), b = x / std::sqrt(3.0);
    return ShapeState(a, a, b, b);
  };
  const Vector4<double> drdr = (state(r + h).coeffs - state(r - h).coeffs) / (2.0 * h);
  const Vector4<double> drdt = drdr * std::sqrt(1.0 - 1.0 / (r * r * r));
  const DerivVector solved = solve_torsion_free_derivs(state(r));
  CHECK((solved.coeffs - drdt).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("torsion system has rank four at random states") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sys = torsion_system(random_state(rng));
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.matrix);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-10 * sv[0]) ++rank;
    CHECK(rank == 4);
  }
}
