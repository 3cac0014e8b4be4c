#include "krasovskii/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace krasovskii {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagonalTolerance = 1e-12;

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw std::invalid_argument("SymMatrix: matrix must be square with dim >= 1");
  entries_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::zero(Eigen::Index n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::scaled(double s) const { return SymMatrix(entries_ * s); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

Spectrum sym_eig(const SymMatrix& s) {
  const Matrix& input = s.dense();
  if (input.size() == 0 || !input.allFinite()) throw std::invalid_argument("invalid matrix");
  const Eigen::Index n = input.rows();

  Matrix a = input;
  Matrix v = Matrix::Identity(n, n);
  const double threshold = kOffDiagonalTolerance * input.norm();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = off_diagonal_norm(a);
    if (off <= threshold || off == 0.0) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle annihilating a(p, q), computed in the stable form.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  Spectrum out;
  out.eigenvalues.resize(n);
  out.basis.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[k], order[k]);
    out.basis.col(k) = v.col(order[k]);
  }
  return out;
}

bool is_negative_definite(const SymMatrix& s, double margin) { return sym_eig(s).max() < -margin; }

bool is_positive_definite(const SymMatrix& s, double margin) { return sym_eig(s).min() > margin; }

double matrix_2norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const double top = sym_eig(SymMatrix(m.transpose() * m)).max();
  return std::sqrt(std::max(top, 0.0));
}

SymMatrix spd_inverse(const SymMatrix& s, double min_eigenvalue) {
  const Spectrum spec = sym_eig(s);
  if (!(spec.min() > min_eigenvalue)) throw std::invalid_argument("matrix is singular or not positive definite");
  const Vector inv = spec.eigenvalues.cwiseInverse();
  return SymMatrix(spec.basis * inv.asDiagonal() * spec.basis.transpose());
}

}  // namespace krasovskii
