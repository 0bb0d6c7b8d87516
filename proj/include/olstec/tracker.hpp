#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "olstec/error.hpp"
#include "olstec/matrix.hpp"
#include "olstec/random.hpp"
#include "olstec/rls_row.hpp"
#include "olstec/spd_solve.hpp"
#include "olstec/tensor_core.hpp"

namespace olstec {

enum class Variant { full, simplified, windowed };

/// Which A the column updates see: the rows just updated in this step
/// (gauss_seidel) or the rows from the previous step (jacobi).
enum class UpdateOrdering { gauss_seidel, jacobi };

inline const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::full: return "full";
    case Variant::simplified: return "simplified";
    case Variant::windowed: return "window";
  }
  return "?";
}

inline const char* to_string(UpdateOrdering o) noexcept {
  return o == UpdateOrdering::jacobi ? "jacobi" : "gauss-seidel";
}

struct TrackerConfig {
  std::size_t rank = 5;
  double lambda = 0.5;         // forgetting, (0, 1]
  double mu = 1e-3;            // regularizer mu_r, held constant over time
  std::optional<double> gamma; // initial inverse scale; unset means 1 / mu
  Variant variant = Variant::full;
  std::size_t window = 1;      // V, read by the windowed variant only
  UpdateOrdering ordering = UpdateOrdering::gauss_seidel;
  std::uint64_t seed = 0;

  /// gamma, resolving "auto" to 1 / mu. With that choice the unrolled RA
  /// recursion carries exactly mu I and no decaying initialization term.
  double init_scale() const noexcept { return gamma.value_or(1.0 / mu); }

  /// The per-step regularizer increment mu_r[t] - lambda mu_r[t-1].
  double shift() const noexcept { return mu * (1.0 - lambda); }

  void validate() const {
    detail::require_config(rank >= 1, "TrackerConfig: rank must be >= 1");
    detail::require_config(lambda > 0.0 && lambda <= 1.0,
                           "TrackerConfig: lambda must lie in (0, 1]");
    detail::require_config(mu > 0.0 && std::isfinite(mu), "TrackerConfig: mu must be > 0");
    detail::require_config(!gamma || (*gamma > 0.0 && std::isfinite(*gamma)),
                           "TrackerConfig: gamma must be > 0");
    detail::require_config(variant != Variant::windowed || window >= 1,
                           "TrackerConfig: window length must be >= 1");
  }
};

/// Everything the windowed variant must replay when a step leaves the window.
struct WindowRecord {
  MaskMatrix mask;
  RealMatrix values;
  RealMatrix alpha;  // W x R, row w = diag(b) c^w[t-1]
  RealMatrix beta;   // L x R, row l = (a^l)^T diag(b)
};

struct TrackerState {
  CpFactors factors;
  /// RA_l / RC_w (full and windowed variants).
  std::vector<RealMatrix> row_a;
  std::vector<RealMatrix> row_c;
  /// DA_l / DC_w (simplified variant).
  std::vector<RealVector> diag_a;
  std::vector<RealVector> diag_c;
  std::size_t t = 0;
  std::deque<WindowRecord> history;

  std::size_t rows() const noexcept { return factors.a.rows(); }
  std::size_t cols() const noexcept { return factors.c.rows(); }
  std::size_t rank() const noexcept { return factors.rank(); }
};

struct StepOutput {
  /// A[t] diag(b[t]) C[t]^T.
  RealMatrix prediction;
  /// A[t-1] diag(b[t]) C[t-1]^T, the estimate before the factor updates.
  RealMatrix prediction_before_update;
  RealVector b;
  /// Sum of squared errors of `prediction` over observed entries.
  double observed_error_sq = 0.0;
};

/// Draws A[0], C[0], b[0] i.i.d. N(0, 1) from the config seed and sets every
/// row state to (1 / gamma) I.
inline TrackerState init(const Dims& dims, const TrackerConfig& config) {
  config.validate();
  dims.validate();
  detail::require_config(dims.rank == config.rank,
                         "init: Dims rank " + std::to_string(dims.rank) +
                             " differs from config rank " + std::to_string(config.rank));
  const std::size_t rank = config.rank;
  TrackerState s;
  Rng rng(config.seed);
  RealMatrix a(dims.rows, rank);
  RealMatrix c(dims.cols, rank);
  RealVector b(rank);
  fill_standard_normal(a.values(), rng);
  fill_standard_normal(c.values(), rng);
  fill_standard_normal(b, rng);
  s.factors = CpFactors(std::move(a), std::move(c), std::move(b));

  const double inv_gamma = 1.0 / config.init_scale();
  if (config.variant == Variant::simplified) {
    s.diag_a.assign(dims.rows, RealVector(rank, inv_gamma));
    s.diag_c.assign(dims.cols, RealVector(rank, inv_gamma));
  } else {
    RealMatrix m0(rank, rank);
    for (std::size_t i = 0; i < rank; ++i) m0(i, i) = inv_gamma;
    s.row_a.assign(dims.rows, m0);
    s.row_c.assign(dims.cols, m0);
  }
  return s;
}

inline void check_slice(const TrackerState& state, const SliceObservation& obs) {
  obs.validate();
  detail::require_dims(obs.rows() == state.rows() && obs.cols() == state.cols(),
                       "slice is " + std::to_string(obs.rows()) + "x" +
                           std::to_string(obs.cols()) + ", tracker expects " +
                           std::to_string(state.rows()) + "x" + std::to_string(state.cols()));
}

/// Ridge solve for the slice weights with A, C held fixed:
///   b = [mu I + sum_obs g g^T]^{-1} sum_obs Y g,   g = a^l ⊛ c^w.
/// Throws NumericalError if the Gram matrix is not SPD (only possible for mu = 0).
inline RealVector solve_b(const CpFactors& factors, const SliceObservation& obs, double mu) {
  factors.validate();
  obs.validate();
  detail::require_dims(obs.rows() == factors.a.rows() && obs.cols() == factors.c.rows(),
                       "solve_b: slice does not match factor dimensions");
  const std::size_t rank = factors.rank();
  RealMatrix gram(rank, rank);
  RealVector rhs(rank, 0.0);
  RealVector g(rank);
  for (std::size_t l = 0; l < obs.rows(); ++l) {
    for (std::size_t w = 0; w < obs.cols(); ++w) {
      if (!obs.observed(l, w)) continue;
      entry_product(factors.a, factors.c, l, w, g);
      const double y = obs.values(l, w);
      for (std::size_t i = 0; i < rank; ++i) {
        rhs[i] += y * g[i];
        for (std::size_t j = 0; j <= i; ++j) gram(i, j) += g[i] * g[j];
      }
    }
  }
  for (std::size_t i = 0; i < rank; ++i) gram(i, i) += mu;
  LdltSolver solver(rank);
  if (!solver.factor(gram)) {
    throw NumericalError("solve_b: observed Gram matrix is not positive definite; use mu > 0");
  }
  solver.solve_in_place(rhs);
  return rhs;
}

namespace detail {

inline void row_terms(const SliceObservation& obs, std::size_t l, const RealMatrix& alpha,
                      std::vector<RlsTerm>& out) {
  out.clear();
  for (std::size_t w = 0; w < obs.cols(); ++w)
    if (obs.observed(l, w)) out.push_back({obs.values(l, w), alpha.row(w).data()});
}

inline void column_terms(const MaskMatrix& mask, const RealMatrix& values, std::size_t w,
                         const RealMatrix& beta, std::vector<RlsTerm>& out) {
  out.clear();
  for (std::size_t l = 0; l < mask.rows(); ++l)
    if (mask(l, w)) out.push_back({values(l, w), beta.row(l).data()});
}

inline void row_terms(const WindowRecord& rec, std::size_t l, std::vector<RlsTerm>& out) {
  out.clear();
  for (std::size_t w = 0; w < rec.mask.cols(); ++w)
    if (rec.mask(l, w)) out.push_back({rec.values(l, w), rec.alpha.row(w).data()});
}

/// Workspace reused across rows within a step.
struct RowWorkspace {
  std::vector<RlsTerm> current;
  std::vector<RlsTerm> expired;
  RealVector scratch;
  LdltSolver solver;
};

inline RlsWeights weights_for(const TrackerConfig& config) {
  return {config.lambda, config.shift(), std::pow(config.lambda, static_cast<double>(config.window))};
}

inline void apply_row_update(std::span<double> x, const TrackerConfig& config, RealMatrix* full,
                             RealVector* diag, RowWorkspace& ws, const char* which,
                             std::size_t index) {
  const RlsWeights wts = weights_for(config);
  ws.scratch.resize(x.size());
  if (diag != nullptr) {
    rls_row_update_diagonal(x, *diag, ws.current, ws.expired, wts, ws.scratch);
    return;
  }
  if (!rls_row_update(x, *full, ws.current, ws.expired, wts, ws.solver, ws.scratch)) {
    throw NumericalError(std::string(which) + " state for index " + std::to_string(index) +
                         " is no longer positive definite");
  }
}

} // namespace detail

/// alpha_w = diag(b) c^w for every column, from the given C.
inline RealMatrix alpha_vectors(const RealMatrix& c, std::span<const double> b) {
  RealMatrix alpha(c.rows(), b.size());
  for (std::size_t w = 0; w < c.rows(); ++w)
    for (std::size_t r = 0; r < b.size(); ++r) alpha(w, r) = b[r] * c(w, r);
  return alpha;
}

/// beta^l = (a^l)^T diag(b) for every row, from the given A.
inline RealMatrix beta_vectors(const RealMatrix& a, std::span<const double> b) {
  return alpha_vectors(a, b);
}

/// RLS update of row l of A (RA_l and a^l). `expired` carries step t - V for
/// the windowed variant once the window is full.
inline void update_row_a(TrackerState& state, const TrackerConfig& config, std::size_t l,
                         const SliceObservation& obs, const RealMatrix& alpha,
                         const WindowRecord* expired, detail::RowWorkspace& ws) {
  detail::row_terms(obs, l, alpha, ws.current);
  ws.expired.clear();
  if (expired != nullptr) detail::row_terms(*expired, l, ws.expired);
  const bool simplified = config.variant == Variant::simplified;
  detail::apply_row_update(state.factors.a.row(l), config, simplified ? nullptr : &state.row_a[l],
                           simplified ? &state.diag_a[l] : nullptr, ws, "RA", l);
}

inline void update_row_a(TrackerState& state, const TrackerConfig& config, std::size_t l,
                         const SliceObservation& obs, const RealMatrix& alpha,
                         const WindowRecord* expired = nullptr) {
  detail::RowWorkspace ws;
  update_row_a(state, config, l, obs, alpha, expired, ws);
}

/// Mirror of update_row_a for row w of C (RC_w and c^w) with beta regressors.
inline void update_row_c(TrackerState& state, const TrackerConfig& config, std::size_t w,
                         const SliceObservation& obs, const RealMatrix& beta,
                         const WindowRecord* expired, detail::RowWorkspace& ws) {
  detail::column_terms(obs.mask, obs.values, w, beta, ws.current);
  ws.expired.clear();
  if (expired != nullptr)
    detail::column_terms(expired->mask, expired->values, w, expired->beta, ws.expired);
  const bool simplified = config.variant == Variant::simplified;
  detail::apply_row_update(state.factors.c.row(w), config, simplified ? nullptr : &state.row_c[w],
                           simplified ? &state.diag_c[w] : nullptr, ws, "RC", w);
}

inline void update_row_c(TrackerState& state, const TrackerConfig& config, std::size_t w,
                         const SliceObservation& obs, const RealMatrix& beta,
                         const WindowRecord* expired = nullptr) {
  detail::RowWorkspace ws;
  update_row_c(state, config, w, obs, beta, expired, ws);
}

/// Online low-rank tensor tracker driven by per-row recursive least squares.
/// Each step solves the slice weights b[t] in closed form, then refreshes
/// every row of A and every row of C with one small SPD solve each.
class OlstecTracker {
public:
  OlstecTracker(const Dims& dims, TrackerConfig config)
      : config_(std::move(config)), state_(init(dims, config_)) {}

  StepOutput step(const SliceObservation& obs) {
    check_slice(state_, obs);
    const std::size_t rows = state_.rows();
    const std::size_t cols = state_.cols();

    StepOutput out;
    out.b = solve_b(state_.factors, obs, config_.mu);
    state_.factors.b = out.b;
    out.prediction_before_update = reconstruct_slice(state_.factors.a, out.b, state_.factors.c);

    const bool windowed = config_.variant == Variant::windowed;
    const WindowRecord* expired =
        windowed && state_.history.size() == config_.window ? &state_.history.front() : nullptr;

    RealMatrix alpha = alpha_vectors(state_.factors.c, out.b);
    RealMatrix a_prev;
    if (config_.ordering == UpdateOrdering::jacobi) a_prev = state_.factors.a;

    for (std::size_t l = 0; l < rows; ++l) update_row_a(state_, config_, l, obs, alpha, expired, ws_);

    RealMatrix beta = beta_vectors(
        config_.ordering == UpdateOrdering::jacobi ? a_prev : state_.factors.a, out.b);
    for (std::size_t w = 0; w < cols; ++w) update_row_c(state_, config_, w, obs, beta, expired, ws_);

    if (windowed) {
      if (expired != nullptr) state_.history.pop_front();
      state_.history.push_back({obs.mask, obs.values, std::move(alpha), std::move(beta)});
    }

    ++state_.t;
    out.prediction = reconstruct_slice(state_.factors.a, out.b, state_.factors.c);
    out.observed_error_sq = masked_frobenius_sq(out.prediction, obs.values, obs.mask);
    return out;
  }

  const TrackerState& state() const noexcept { return state_; }
  /// Direct state access, e.g. to seed two trackers from one shared state.
  TrackerState& state() noexcept { return state_; }
  const TrackerConfig& config() const noexcept { return config_; }
  Dims dims() const noexcept { return state_.factors.dims(); }

private:
  TrackerConfig config_;
  TrackerState state_;
  detail::RowWorkspace ws_;
};

} // namespace olstec
