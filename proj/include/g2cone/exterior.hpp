#pragma once

// Exterior algebra over the invariant orthonormal coframe e^1..e^7 of the
// cone over S^3 x S^3 (e^7 = dt).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "g2cone/types.hpp"

namespace g2cone {

inline constexpr int kDimension = 7;

/// A k-form with constant coefficients in the e-basis. Terms are keyed by a
/// 7-bit mask: bit (i-1) set means e^i occurs. A mask is the same thing as a
/// strictly increasing index tuple.
template <typename Scalar>
class BasicKForm {
 public:
  using Mask = std::uint8_t;

  explicit BasicKForm(int degree = 0) : degree_(degree) {
    if (degree < 0) throw std::invalid_argument("KForm: negative degree");
  }

  static BasicKForm constant(Scalar c) {
    BasicKForm f(0);
    f.add(0, c);
    return f;
  }

  /// e^{i1} ^ ... ^ e^{ik} for indices in any order; the permutation sign is
  /// absorbed into the coefficient. Repeated indices give the zero form.
  static BasicKForm monomial(std::span<const int> indices, Scalar c = Scalar(1)) {
    BasicKForm f(static_cast<int>(indices.size()));
    const auto [mask, sign] = normalize(indices);
    if (sign != 0) f.add(mask, c * Scalar(sign));
    return f;
  }
  static BasicKForm monomial(std::initializer_list<int> indices, Scalar c = Scalar(1)) {
    return monomial(std::span<const int>(indices.begin(), indices.size()), c);
  }

  int degree() const { return degree_; }
  const std::map<Mask, Scalar>& terms() const { return terms_; }

  void add(Mask mask, Scalar c) {
    if (std::popcount(static_cast<unsigned>(mask)) != degree_)
      throw std::invalid_argument("KForm: mask does not match degree");
    terms_[mask] += c;
  }

  Scalar coefficient(Mask mask) const {
    const auto it = terms_.find(mask);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  /// Coefficient of e^{i1...ik} with the indices in any order.
  Scalar coefficient(std::span<const int> indices) const {
    if (static_cast<int>(indices.size()) != degree_) return Scalar(0);
    const auto [mask, sign] = normalize(indices);
    return sign == 0 ? Scalar(0) : Scalar(sign) * coefficient(mask);
  }
  Scalar coefficient(std::initializer_list<int> indices) const {
    return coefficient(std::span<const int>(indices.begin(), indices.size()));
  }

  /// (sorted index tuple, coefficient) pairs in increasing mask order.
  std::vector<std::pair<std::vector<int>, Scalar>> sorted_terms() const {
    std::vector<std::pair<std::vector<int>, Scalar>> out;
    for (const auto& [mask, c] : terms_) out.emplace_back(indices_of(mask), c);
    return out;
  }

  Scalar max_abs() const {
    Scalar m(0);
    for (const auto& [mask, c] : terms_) m = std::max<Scalar>(m, std::abs(c));
    return m;
  }

  std::size_t nonzero_count(Scalar tol = Scalar(0)) const {
    return static_cast<std::size_t>(std::count_if(
        terms_.begin(), terms_.end(), [tol](const auto& kv) { return std::abs(kv.second) > tol; }));
  }

  BasicKForm& operator+=(const BasicKForm& o) {
    require_same_degree(o);
    for (const auto& [mask, c] : o.terms_) terms_[mask] += c;
    return *this;
  }
  BasicKForm& operator-=(const BasicKForm& o) {
    require_same_degree(o);
    for (const auto& [mask, c] : o.terms_) terms_[mask] -= c;
    return *this;
  }
  BasicKForm& operator*=(Scalar s) {
    for (auto& kv : terms_) kv.second *= s;
    return *this;
  }

  friend BasicKForm operator+(BasicKForm a, const BasicKForm& b) { return a += b; }
  friend BasicKForm operator-(BasicKForm a, const BasicKForm& b) { return a -= b; }
  friend BasicKForm operator*(Scalar s, BasicKForm a) { return a *= s; }
  friend BasicKForm operator*(BasicKForm a, Scalar s) { return a *= s; }
  friend BasicKForm operator-(BasicKForm a) { return a *= Scalar(-1); }

  /// Coefficient-wise equality; absent terms count as zero.
  friend bool operator==(const BasicKForm& a, const BasicKForm& b) {
    return a.degree_ == b.degree_ && max_abs_difference(a, b) == Scalar(0);
  }

  friend Scalar max_abs_difference(const BasicKForm& a, const BasicKForm& b) {
    Scalar m(0);
    for (const auto& [mask, c] : a.terms_) m = std::max<Scalar>(m, std::abs(c - b.coefficient(mask)));
    for (const auto& [mask, c] : b.terms_) m = std::max<Scalar>(m, std::abs(c - a.coefficient(mask)));
    return m;
  }

  static std::vector<int> indices_of(Mask mask) {
    std::vector<int> idx;
    for (int i = 0; i < kDimension; ++i)
      if (mask & (1u << i)) idx.push_back(i + 1);
    return idx;
  }

  /// Sign of the shuffle putting the indices of `a` followed by those of `b`
  /// into increasing order; 0 when they overlap.
  static int shuffle_sign(Mask a, Mask b) {
    if (a & b) return 0;
    int inversions = 0;
    for (int j = 0; j < kDimension; ++j)
      if (b & (1u << j)) inversions += std::popcount(static_cast<unsigned>(a >> (j + 1)));
    return (inversions % 2) ? -1 : 1;
  }

 private:
  static std::pair<Mask, int> normalize(std::span<const int> indices) {
    Mask mask = 0;
    int inversions = 0;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const int k = indices[i];
      if (k < 1 || k > kDimension) throw std::out_of_range("KForm: index outside 1..7");
      if (mask & (1u << (k - 1))) return {0, 0};
      mask |= static_cast<Mask>(1u << (k - 1));
      for (std::size_t j = i + 1; j < indices.size(); ++j)
        if (indices[j] < k) ++inversions;
    }
    return {mask, (inversions % 2) ? -1 : 1};
  }

  void require_same_degree(const BasicKForm& o) const {
    if (o.degree_ != degree_) throw std::invalid_argument("KForm: degree mismatch");
  }

  int degree_;
  std::map<Mask, Scalar> terms_;
};

using KForm = BasicKForm<double>;

template <typename Scalar>
BasicKForm<Scalar> wedge(const BasicKForm<Scalar>& a, const BasicKForm<Scalar>& b) {
  BasicKForm<Scalar> out(a.degree() + b.degree());
  if (out.degree() > kDimension) return out;
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) {
      const int sign = BasicKForm<Scalar>::shuffle_sign(ma, mb);
      if (sign != 0) out.add(static_cast<typename BasicKForm<Scalar>::Mask>(ma | mb), Scalar(sign) * ca * cb);
    }
  return out;
}

/// Hodge star for the orthonormal coframe with orientation e^{1234567}:
/// *(e^I) = sign(I, I^c) e^{I^c}.
template <typename Scalar>
BasicKForm<Scalar> hodge_star(const BasicKForm<Scalar>& a) {
  using Mask = typename BasicKForm<Scalar>::Mask;
  constexpr Mask full = (1u << kDimension) - 1;
  BasicKForm<Scalar> out(kDimension - a.degree());
  for (const auto& [m, c] : a.terms()) {
    const Mask comp = static_cast<Mask>(full & ~m);
    out.add(comp, Scalar(BasicKForm<Scalar>::shuffle_sign(m, comp)) * c);
  }
  return out;
}

/// Psi = e^{564}+e^{527}+e^{513}+e^{621}+e^{637}+e^{432}+e^{417}.
template <typename Scalar = double>
BasicKForm<Scalar> g2_form() {
  static constexpr std::array<std::array<int, 3>, 7> kTriples{
      {{5, 6, 4}, {5, 2, 7}, {5, 1, 3}, {6, 2, 1}, {6, 3, 7}, {4, 3, 2}, {4, 1, 7}}};
  BasicKForm<Scalar> psi(3);
  for (const auto& t : kTriples) psi += BasicKForm<Scalar>::monomial(std::span<const int>(t));
  return psi;
}

namespace detail {

template <typename Scalar>
void require_positive(const ShapeStateT<Scalar>& s, const char* where) {
  for (int i = 0; i < 4; ++i)
    if (!(s.coeffs[i] > Scalar(0))) throw std::domain_error(std::string(where) + ": shape entries must be positive");
}

}  // namespace detail

/// de^1..de^7 for the general six-function metric. de^i picks up
/// (A_i'/A_i) e^7 ^ e^i from the t-dependence and -2 A_i (eta_j^eta_k +
/// etat_j^etat_k) from d eta_i = -2 eta_{i+1} ^ eta_{i+2}.
template <typename Scalar>
std::array<BasicKForm<Scalar>, kDimension> coframe_differentials(const std::array<Scalar, 3>& a,
                                                               const std::array<Scalar, 3>& b,
                                                               const std::array<Scalar, 3>& da,
                                                               const std::array<Scalar, 3>& db) {
  using Form = BasicKForm<Scalar>;
  std::array<Form, 3> eta, eta_t;
  for (int i = 0; i < 3; ++i) {
    const Form ei = Form::monomial({i + 1});
    const Form ei3 = Form::monomial({i + 4});
    eta[i] = Scalar(0.5) * (ei * (Scalar(1) / a[i]) + ei3 * (Scalar(1) / b[i]));
    eta_t[i] = Scalar(0.5) * (ei * (Scalar(1) / a[i]) - ei3 * (Scalar(1) / b[i]));
  }
  const Form e7 = Form::monomial({7});
  std::array<Form, kDimension> d;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    const Form plus = wedge(eta[j], eta[k]);
    const Form minus = wedge(eta_t[j], eta_t[k]);
    d[i] = (da[i] / a[i]) * wedge(e7, Form::monomial({i + 1})) - Scalar(2) * a[i] * (plus + minus);
    d[i + 3] = (db[i] / b[i]) * wedge(e7, Form::monomial({i + 4})) - Scalar(2) * b[i] * (plus - minus);
  }
  d[6] = Form(2);
  return d;
}

template <typename Scalar>
std::array<BasicKForm<Scalar>, kDimension> coframe_differentials(const ShapeStateT<Scalar>& s,
                                                               const DerivVectorT<Scalar>& d) {
  detail::require_positive(s, "coframe_differentials");
  return coframe_differentials<Scalar>({s.A1(), s.A2(), s.A2()}, {s.B1(), s.B2(), s.B2()},
                                       {d.dA1(), d.dA2(), d.dA2()}, {d.dB1(), d.dB2(), d.dB2()});
}

/// Graded Leibniz extension for a form with constant e-basis coefficients:
/// d(e^{i1..ik}) = sum_j (-1)^(j-1) e^{i1} ^ .. ^ de^{ij} ^ .. ^ e^{ik}.
template <typename Scalar>
BasicKForm<Scalar> exterior_derivative(const BasicKForm<Scalar>& form,
                                       const std::array<BasicKForm<Scalar>, kDimension>& diffs) {
  using Form = BasicKForm<Scalar>;
  Form out(form.degree() + 1);
  if (out.degree() > kDimension) return out;
  for (const auto& [mask, c] : form.terms()) {
    const std::vector<int> idx = Form::indices_of(mask);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const Form head = Form::monomial(std::span<const int>(idx.data(), j));
      const Form tail = Form::monomial(std::span<const int>(idx.data() + j + 1, idx.size() - j - 1));
      const Scalar sign = (j % 2) ? Scalar(-1) : Scalar(1);
      out += (sign * c) * wedge(wedge(head, diffs[idx[j] - 1]), tail);
    }
  }
  return out;
}

/// Infinity norms of d(Psi) and d(*Psi).
template <typename Scalar>
struct TorsionResidualT {
  Scalar closure;
  Scalar coclosure;
};
using TorsionResidual = TorsionResidualT<double>;

template <typename Scalar>
TorsionResidualT<Scalar> torsion_residual(const ShapeStateT<Scalar>& s, const DerivVectorT<Scalar>& d,
                                          const BasicKForm<Scalar>& psi = g2_form<Scalar>()) {
  const auto diffs = coframe_differentials(s, d);
  return {exterior_derivative(psi, diffs).max_abs(), exterior_derivative(hodge_star(psi), diffs).max_abs()};
}

/// The torsion coefficients are affine in the derivatives:
/// residual(d) = offset + matrix * d, rows being the 35 four-forms of d(Psi)
/// followed by the 21 five-forms of d(*Psi), each in increasing mask order.
template <typename Scalar>
struct TorsionSystemT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 4> matrix;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> offset;
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> torsion_coefficients(const ShapeStateT<Scalar>& s,
                                                              const DerivVectorT<Scalar>& d,
                                                              const BasicKForm<Scalar>& psi,
                                                              const BasicKForm<Scalar>& star_psi) {
  const auto diffs = coframe_differentials(s, d);
  const auto closure = exterior_derivative(psi, diffs);
  const auto coclosure = exterior_derivative(star_psi, diffs);
  std::vector<Scalar> rows;
  for (unsigned m = 0; m < (1u << kDimension); ++m) {
    if (std::popcount(m) == 4) rows.push_back(closure.coefficient(static_cast<std::uint8_t>(m)));
  }
  for (unsigned m = 0; m < (1u << kDimension); ++m) {
    if (std::popcount(m) == 5) rows.push_back(coclosure.coefficient(static_cast<std::uint8_t>(m)));
  }
  return Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(rows.data(), static_cast<Eigen::Index>(rows.size()));
}

}  // namespace detail

template <typename Scalar>
TorsionSystemT<Scalar> torsion_system(const ShapeStateT<Scalar>& s, const BasicKForm<Scalar>& psi = g2_form<Scalar>()) {
  detail::require_positive(s, "torsion_system");
  const BasicKForm<Scalar> star_psi = hodge_star(psi);
  TorsionSystemT<Scalar> sys;
  sys.offset = detail::torsion_coefficients(s, DerivVectorT<Scalar>(), psi, star_psi);
  sys.matrix.resize(sys.offset.size(), 4);
  for (int k = 0; k < 4; ++k) {
    DerivVectorT<Scalar> unit;
    unit.coeffs[k] = Scalar(1);
    sys.matrix.col(k) = detail::torsion_coefficients(s, unit, psi, star_psi) - sys.offset;
  }
  return sys;
}

/// Least-squares derivatives that make Psi closed and coclosed; an
/// independent route to the torsion-free ODE right-hand side.
template <typename Scalar>
DerivVectorT<Scalar> solve_torsion_free_derivs(const ShapeStateT<Scalar>& s,
                                               const BasicKForm<Scalar>& psi = g2_form<Scalar>()) {
  const auto sys = torsion_system(s, psi);
  const Vector4<Scalar> d = sys.matrix.colPivHouseholderQr().solve(-sys.offset);
  const Scalar residual = (sys.matrix * d + sys.offset).cwiseAbs().maxCoeff();
  if (!(residual <= Scalar(1e-8)))
    throw std::runtime_error("solve_torsion_free_derivs: inconsistent torsion system");
  return DerivVectorT<Scalar>(d);
}

}  // namespace g2cone
