#pragma once

// Small dense linear algebra and quadrature shared by the rest of the library.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <utility>

namespace krasovskii {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Real symmetric matrix. Input is symmetrized as (M + Mᵀ)/2 on construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Eigen::Index n);
  static SymMatrix zero(Eigen::Index n);

  [[nodiscard]] Eigen::Index dim() const { return entries_.rows(); }
  [[nodiscard]] const Matrix& dense() const { return entries_; }
  [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  [[nodiscard]] SymMatrix scaled(double s) const;
  [[nodiscard]] double quadratic_form(const Vector& x) const { return x.dot(entries_ * x); }

 private:
  Matrix entries_;
};

struct Spectrum {
  Vector eigenvalues;  // ascending
  Matrix basis;        // column k is the eigenvector of eigenvalues[k]

  [[nodiscard]] double min() const { return eigenvalues(0); }
  [[nodiscard]] double max() const { return eigenvalues(eigenvalues.size() - 1); }
};

/// Cyclic Jacobi eigensolver. Throws std::invalid_argument("invalid matrix") on
/// non-finite input.
[[nodiscard]] Spectrum sym_eig(const SymMatrix& s);

/// Strict test: λ_max(S) < −margin. A singular S is rejected even at margin 0.
[[nodiscard]] bool is_negative_definite(const SymMatrix& s, double margin = 0.0);
/// Strict test: λ_min(S) > margin.
[[nodiscard]] bool is_positive_definite(const SymMatrix& s, double margin = 0.0);

/// Largest singular value, sqrt(λ_max(MᵀM)).
[[nodiscard]] double matrix_2norm(const Matrix& m);

/// Inverse of a positive definite matrix through its spectrum.
[[nodiscard]] SymMatrix spd_inverse(const SymMatrix& s, double min_eigenvalue = 1e-12);

namespace detail {
template <class T, class = void>
struct Plain {
  using type = T;
};
template <class T>
struct Plain<T, std::enable_if_t<std::is_base_of_v<Eigen::EigenBase<T>, T>>> {
  using type = typename T::PlainObject;
};
template <class T>
using plain_t = typename Plain<std::decay_t<T>>::type;
}  // namespace detail

/// Composite Simpson approximation of ∫ₐᵇ weight(s)·f(s) ds with an even number
/// of subintervals (odd counts are rounded up). f may return a scalar or an
/// Eigen vector; the result has the type of weight(a)·f(a).
template <class F, class W>
auto weighted_quadrature(F&& f, double a, double b, W&& weight, int panels) {
  if (!(a <= b)) throw std::invalid_argument("weighted_quadrature: a > b");
  if (panels < 1) throw std::invalid_argument("weighted_quadrature: panels must be >= 1");
  if (panels % 2 != 0) ++panels;
  using Result = detail::plain_t<decltype(weight(a) * f(a))>;
  const double h = (b - a) / panels;
  Result sum = weight(a) * f(a);
  sum += weight(b) * f(b);
  for (int k = 1; k < panels; ++k) {
    const double s = a + h * k;
    sum += ((k % 2 == 1) ? 4.0 : 2.0) * (weight(s) * f(s));
  }
  return Result(sum * (h / 3.0));
}

template <class F>
auto quadrature(F&& f, double a, double b, int panels) {
  return weighted_quadrature(std::forward<F>(f), a, b, [](double) { return 1.0; }, panels);
}

/// Three-point Gauss–Legendre on [a, b]; exact for polynomials of degree ≤ 5.
template <class F>
auto gauss3(F&& f, double a, double b) {
  constexpr double kNode = 0.7745966692414833770358531;  // sqrt(3/5)
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  using Result = detail::plain_t<decltype(f(a))>;
  Result sum = (8.0 / 9.0) * f(mid);
  sum += (5.0 / 9.0) * f(mid - half * kNode);
  sum += (5.0 / 9.0) * f(mid + half * kNode);
  return Result(sum * half);
}

[[nodiscard]] bool all_finite(const Matrix& m);

}  // namespace krasovskii
