#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "olstec/matrix.hpp"
#include "olstec/spd_solve.hpp"

namespace olstec {

/// One observed entry seen from the row being updated: the target value and
/// its regressor (alpha_w for a row of A, beta^l for a row of C).
struct RlsTerm {
  double target;
  const double* feature;  // length R
};

/// Scalars shared by every row update of one step.
struct RlsWeights {
  double forgetting;      // lambda
  double shift;           // mu_r (1 - lambda), the regularizer bookkeeping term
  double expired_weight;  // lambda^V, only read when expired terms are supplied
};

/// M <- lambda M + sum f f^T - lambda^V sum f_old f_old^T + shift I.
/// The lower triangle is computed and mirrored so M stays exactly symmetric.
inline void accumulate_rls_matrix(RealMatrix& m, std::span<const RlsTerm> current,
                                  std::span<const RlsTerm> expired, const RlsWeights& wts) {
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = wts.forgetting * m(i, j);
  for (const RlsTerm& term : current) {
    const double* f = term.feature;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) m(i, j) += f[i] * f[j];
  }
  for (const RlsTerm& term : expired) {
    const double* f = term.feature;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) m(i, j) -= wts.expired_weight * (f[i] * f[j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) += wts.shift;
    for (std::size_t j = 0; j < i; ++j) m(j, i) = m(i, j);
  }
}

/// Diagonal counterpart of accumulate_rls_matrix: per element it performs the
/// same operations as the diagonal of the full update.
inline void accumulate_rls_diagonal(std::span<double> d, std::span<const RlsTerm> current,
                                    std::span<const RlsTerm> expired, const RlsWeights& wts) {
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) d[i] = wts.forgetting * d[i];
  for (const RlsTerm& term : current) {
    const double* f = term.feature;
    for (std::size_t i = 0; i < n; ++i) d[i] += f[i] * f[i];
  }
  for (const RlsTerm& term : expired) {
    const double* f = term.feature;
    for (std::size_t i = 0; i < n; ++i) d[i] -= wts.expired_weight * (f[i] * f[i]);
  }
  for (std::size_t i = 0; i < n; ++i) d[i] += wts.shift;
}

/// Right-hand side of the increment system M z = rhs:
///   rhs = -shift x + sum (y - f.x) f - lambda^V sum (y_old - f_old.x) f_old
/// so that x + z is the new row.
inline void rls_increment_rhs(std::span<const double> x, std::span<const RlsTerm> current,
                              std::span<const RlsTerm> expired, const RlsWeights& wts,
                              std::span<double> rhs) noexcept {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) rhs[i] = -wts.shift * x[i];
  for (const RlsTerm& term : current) {
    const double* f = term.feature;
    const double e = term.target - dot(std::span<const double>(f, n), x);
    for (std::size_t i = 0; i < n; ++i) rhs[i] += e * f[i];
  }
  for (const RlsTerm& term : expired) {
    const double* f = term.feature;
    const double e = term.target - dot(std::span<const double>(f, n), x);
    for (std::size_t i = 0; i < n; ++i) rhs[i] -= wts.expired_weight * (e * f[i]);
  }
}

/// Full second-order row update. Returns false if M lost positive definiteness.
[[nodiscard]] inline bool rls_row_update(std::span<double> x, RealMatrix& m,
                                         std::span<const RlsTerm> current,
                                         std::span<const RlsTerm> expired, const RlsWeights& wts,
                                         LdltSolver& solver, std::span<double> scratch) {
  accumulate_rls_matrix(m, current, expired, wts);
  rls_increment_rhs(x, current, expired, wts, scratch);
  if (!solver.factor(m)) return false;
  solver.solve_in_place(scratch);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += scratch[i];
  return true;
}

/// Diagonal-approximation row update; the inverse is an element-wise reciprocal.
inline void rls_row_update_diagonal(std::span<double> x, std::span<double> d,
                                    std::span<const RlsTerm> current,
                                    std::span<const RlsTerm> expired, const RlsWeights& wts,
                                    std::span<double> scratch) noexcept {
  accumulate_rls_diagonal(d, current, expired, wts);
  rls_increment_rhs(x, current, expired, wts, scratch);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += scratch[i] / d[i];
}

} // namespace olstec
