#pragma once

// First-order online CP tracker used as the comparison baseline. It shares the
// closed-form slice-weight solve with the RLS tracker and then takes one
// gradient step on A and C for the current slice's masked loss
//
//   f(A, C) = 1/2 ||Omega ⊛ (Y - A diag(b) C^T)||_F^2 + mu/2 (||A||_F^2 + ||C||_F^2).
//
// This is a plain reconstruction for qualitative comparison, not a port of
// any published reference code. The step is eta / |Omega_t|, i.e. a fixed
// stepsize on the loss averaged over the observed entries, which keeps one
// stepsize stable across observation ratios.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "olstec/error.hpp"
#include "olstec/matrix.hpp"
#include "olstec/random.hpp"
#include "olstec/tensor_core.hpp"
#include "olstec/tracker.hpp"

namespace olstec {

struct SgdConfig {
  std::size_t rank = 5;
  double lambda = 0.001;  // ridge weight of the slice-weight solve
  double mu = 0.1;        // factor regularizer
  double stepsize = 10.0;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require_config(rank >= 1, "SgdConfig: rank must be >= 1");
    detail::require_config(lambda > 0.0 && std::isfinite(lambda), "SgdConfig: lambda must be > 0");
    detail::require_config(mu >= 0.0 && std::isfinite(mu), "SgdConfig: mu must be >= 0");
    detail::require_config(stepsize >= 0.0 && std::isfinite(stepsize),
                           "SgdConfig: stepsize must be >= 0");
  }
};

struct MaskedLossGradient {
  RealMatrix grad_a;  // L x R
  RealMatrix grad_c;  // W x R
};

/// 1/2 ||Omega ⊛ (Y - A diag(b) C^T)||^2 + mu/2 (||A||^2 + ||C||^2).
inline double masked_loss(const CpFactors& f, const SliceObservation& obs, double mu) {
  const RealMatrix x = reconstruct_slice(f);
  return 0.5 * masked_frobenius_sq(x, obs.values, obs.mask) +
         0.5 * mu * (frobenius_sq(f.a) + frobenius_sq(f.c));
}

/// Analytic gradients of masked_loss with b held fixed:
///   grad_A = -E C diag(b) + mu A,   grad_C = -E^T A diag(b) + mu C,
/// where E = Omega ⊛ (Y - A diag(b) C^T).
inline MaskedLossGradient masked_loss_gradient(const CpFactors& f, const SliceObservation& obs,
                                               double mu) {
  f.validate();
  detail::require_dims(obs.rows() == f.a.rows() && obs.cols() == f.c.rows(),
                       "masked_loss_gradient: slice does not match factors");
  const std::size_t rank = f.rank();
  MaskedLossGradient g{RealMatrix(f.a.rows(), rank), RealMatrix(f.c.rows(), rank)};
  for (std::size_t i = 0; i < f.a.size(); ++i) g.grad_a.values()[i] = mu * f.a.values()[i];
  for (std::size_t i = 0; i < f.c.size(); ++i) g.grad_c.values()[i] = mu * f.c.values()[i];

  RealVector scaled(rank);
  for (std::size_t l = 0; l < obs.rows(); ++l) {
    auto arow = f.a.row(l);
    for (std::size_t r = 0; r < rank; ++r) scaled[r] = arow[r] * f.b[r];
    for (std::size_t w = 0; w < obs.cols(); ++w) {
      if (!obs.observed(l, w)) continue;
      auto crow = f.c.row(w);
      const double e = obs.values(l, w) - dot(scaled, crow);
      auto ga = g.grad_a.row(l);
      auto gc = g.grad_c.row(w);
      for (std::size_t r = 0; r < rank; ++r) {
        ga[r] -= e * crow[r] * f.b[r];
        gc[r] -= e * scaled[r];
      }
    }
  }
  return g;
}

struct SgdState {
  CpFactors factors;
  std::size_t t = 0;
};

inline SgdState init_sgd(const Dims& dims, const SgdConfig& config) {
  config.validate();
  dims.validate();
  detail::require_config(dims.rank == config.rank, "init_sgd: Dims rank differs from config rank");
  Rng rng(config.seed);
  RealMatrix a(dims.rows, config.rank);
  RealMatrix c(dims.cols, config.rank);
  RealVector b(config.rank);
  fill_standard_normal(a.values(), rng);
  fill_standard_normal(c.values(), rng);
  fill_standard_normal(b, rng);
  return {CpFactors(std::move(a), std::move(c), std::move(b)), 0};
}

/// Solves b, then updates A and C simultaneously from the pre-step factors.
inline StepOutput sgd_step(SgdState& state, const SgdConfig& config, const SliceObservation& obs) {
  obs.validate();
  detail::require_dims(obs.rows() == state.factors.a.rows() && obs.cols() == state.factors.c.rows(),
                       "sgd_step: slice does not match tracker dimensions");
  StepOutput out;
  out.b = solve_b(state.factors, obs, config.lambda);
  state.factors.b = out.b;
  out.prediction_before_update = reconstruct_slice(state.factors);

  const std::size_t observed = count_observed(obs.mask);
  if (observed > 0 && config.stepsize > 0.0) {
    const MaskedLossGradient g = masked_loss_gradient(state.factors, obs, config.mu);
    const double step = config.stepsize / static_cast<double>(observed);
    for (std::size_t i = 0; i < g.grad_a.size(); ++i)
      state.factors.a.values()[i] -= step * g.grad_a.values()[i];
    for (std::size_t i = 0; i < g.grad_c.size(); ++i)
      state.factors.c.values()[i] -= step * g.grad_c.values()[i];
  }
  ++state.t;
  out.prediction = reconstruct_slice(state.factors);
  out.observed_error_sq = masked_frobenius_sq(out.prediction, obs.values, obs.mask);
  return out;
}

class SgdTracker {
public:
  SgdTracker(const Dims& dims, SgdConfig config)
      : config_(config), state_(init_sgd(dims, config_)) {}

  StepOutput step(const SliceObservation& obs) { return sgd_step(state_, config_, obs); }

  const SgdState& state() const noexcept { return state_; }
  SgdState& state() noexcept { return state_; }
  const SgdConfig& config() const noexcept { return config_; }

private:
  SgdConfig config_;
  SgdState state_;
};

} // namespace olstec
