#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "olstec/matrix.hpp"

namespace olstec {

/// Square-root-free Cholesky (M = L D L^T, L unit lower) for the small R x R
/// systems solved once per row per step. No pivoting: the matrices are SPD by
/// construction. A 1x1 system reduces to a single division, so the rank-1 case
/// agrees bit-for-bit with the diagonal (simplified) update.
class LdltSolver {
public:
  LdltSolver() = default;
  explicit LdltSolver(std::size_t n) { resize(n); }

  void resize(std::size_t n) {
    if (n == factor_.rows()) return;
    factor_ = RealMatrix(n, n);
    diag_.assign(n, 0.0);
  }

  std::size_t order() const noexcept { return factor_.rows(); }

  /// Factors the lower triangle of `m`. Returns false when a pivot is not
  /// strictly positive (matrix not numerically SPD).
  [[nodiscard]] bool factor(const RealMatrix& m) {
    const std::size_t n = m.rows();
    resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      double d = m(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= factor_(j, k) * factor_(j, k) * diag_[k];
      if (!(d > 0.0) || !std::isfinite(d)) return false;
      diag_[j] = d;
      factor_(j, j) = 1.0;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= factor_(i, k) * factor_(j, k) * diag_[k];
        factor_(i, j) = s / d;
      }
    }
    return true;
  }

  /// In-place solve of M x = rhs using the last successful factorization.
  void solve_in_place(std::span<double> x) const noexcept {
    const std::size_t n = order();
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t k = 0; k < i; ++k) s -= factor_(i, k) * x[k];
      x[i] = s;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] /= diag_[i];
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= factor_(k, i) * x[k];
      x[i] = s;
    }
  }

  std::span<const double> pivots() const noexcept { return diag_; }

private:
  RealMatrix factor_;
  RealVector diag_;
};

} // namespace olstec
