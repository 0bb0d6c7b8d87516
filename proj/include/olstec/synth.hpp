#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "olstec/error.hpp"
#include "olstec/matrix.hpp"
#include "olstec/random.hpp"
#include "olstec/tensor_core.hpp"

namespace olstec {

struct SynthConfig {
  std::size_t rows = 50;   // L
  std::size_t cols = 50;   // W
  std::size_t steps = 500; // T
  std::size_t rank = 5;
  double angle = std::numbers::pi / 36.0;  // rotation per step, radians
  double noise = 1e-3;                     // noise standard deviation
  double ratio = 0.3;                      // observation probability per entry
  std::uint64_t seed = 0;                  // factors, weights and noise
  std::uint64_t mask_seed = 1;             // Bernoulli masks

  void validate() const {
    detail::require_config(rows >= 1 && cols >= 1, "SynthConfig: L and W must be >= 1");
    detail::require_config(rank >= 2, "SynthConfig: rank must be >= 2 for the rotation");
    detail::require_config(noise >= 0.0 && std::isfinite(noise), "SynthConfig: noise must be >= 0");
    detail::require_config(ratio > 0.0 && ratio <= 1.0, "SynthConfig: ratio must lie in (0, 1]");
    detail::require_config(std::isfinite(angle), "SynthConfig: angle must be finite");
  }
};

/// 1-based index of the first rotated coordinate at step t:
/// p(t) = (t + R - 2) % (R - 1) + 1, cycling 1, 2, ..., R - 1.
inline std::size_t rotation_plane(std::size_t t, std::size_t rank) {
  detail::require_config(rank >= 2, "rotation_plane: rank must be >= 2");
  detail::require_config(t >= 1, "rotation_plane: t is 1-based");
  return (t + rank - 2) % (rank - 1) + 1;
}

/// Identity except a plane rotation by `angle` in coordinates (p, p + 1).
inline RealMatrix rotation_matrix(std::size_t t, double angle, std::size_t rank) {
  const std::size_t p = rotation_plane(t, rank) - 1;
  RealMatrix q = RealMatrix::identity(rank);
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  q(p, p) = cs;
  q(p, p + 1) = -sn;
  q(p + 1, p) = sn;
  q(p + 1, p + 1) = cs;
  return q;
}

/// In-place right multiplication F <- F Q(t, angle); only columns p, p+1 change.
inline void rotate_columns(RealMatrix& f, std::size_t t, double angle, std::size_t rank) {
  const std::size_t p = rotation_plane(t, rank) - 1;
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    const double x = f(i, p);
    const double y = f(i, p + 1);
    f(i, p) = x * cs + y * sn;
    f(i, p + 1) = -x * sn + y * cs;
  }
}

inline MaskMatrix bernoulli_mask(std::size_t rows, std::size_t cols, double ratio, Rng& rng) {
  MaskMatrix m(rows, cols);
  if (ratio >= 1.0) {
    m.fill(1);
    return m;
  }
  std::bernoulli_distribution draw(ratio);
  for (auto& v : m.values()) v = draw(rng) ? 1 : 0;
  return m;
}

struct SynthSlice {
  SliceObservation observation;
  RealMatrix truth;
};

/// Rotating-subspace stream: truth_t = A_t diag(b_t) C_t^T with b_t fresh
/// N(0, 1), noise added to every entry before masking, and A, C advanced by
/// Q(t, angle) after each slice.
class SynthStream {
public:
  explicit SynthStream(SynthConfig config) : config_(config) {
    config_.validate();
    rng_.seed(config_.seed);
    mask_rng_.seed(config_.mask_seed);
    a_ = RealMatrix(config_.rows, config_.rank);
    c_ = RealMatrix(config_.cols, config_.rank);
    fill_standard_normal(a_.values(), rng_);
    fill_standard_normal(c_.values(), rng_);
  }

  const SynthConfig& config() const noexcept { return config_; }
  bool done() const noexcept { return t_ >= config_.steps; }
  std::size_t produced() const noexcept { return t_; }

  /// Current (not yet advanced) generating factors.
  const RealMatrix& a() const noexcept { return a_; }
  const RealMatrix& c() const noexcept { return c_; }

  SynthSlice next() {
    ++t_;
    RealVector b(config_.rank);
    fill_standard_normal(b, rng_);
    RealMatrix truth = reconstruct_slice(a_, b, c_);
    RealMatrix observed = truth;
    if (config_.noise > 0.0) {
      std::normal_distribution<double> noise(0.0, config_.noise);
      for (double& v : observed.values()) v += noise(rng_);
    }
    MaskMatrix mask = bernoulli_mask(config_.rows, config_.cols, config_.ratio, mask_rng_);
    rotate_columns(a_, t_, config_.angle, config_.rank);
    rotate_columns(c_, t_, config_.angle, config_.rank);
    return {SliceObservation(t_, std::move(observed), std::move(mask)), std::move(truth)};
  }

private:
  SynthConfig config_;
  Rng rng_;
  Rng mask_rng_;
  RealMatrix a_;
  RealMatrix c_;
  std::size_t t_ = 0;
};

} // namespace olstec
