#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "olstec/error.hpp"
#include "olstec/matrix.hpp"

namespace olstec {

enum class ResidualMode {
  full,           // every entry of the reference slice
  observed_only,  // only entries selected by the mask
};

inline const char* to_string(ResidualMode m) noexcept {
  return m == ResidualMode::full ? "full" : "observed";
}

struct MetricsRecord {
  std::size_t t = 0;
  /// Unset when the reference slice has zero norm on the evaluated support.
  std::optional<double> normalized_residual;
  double running_average = 0.0;
  double elapsed_ms = 0.0;
};

/// ||X - Y||_F^2 / ||Y||_F^2 over all entries (full) or the masked entries.
/// Returns nullopt for a zero reference; the caller decides how to log it.
inline std::optional<double> normalized_residual(const RealMatrix& estimate,
                                                 const RealMatrix& reference, ResidualMode mode,
                                                 const MaskMatrix* mask = nullptr) {
  detail::require_dims(estimate.same_shape(reference),
                       "normalized_residual: estimate and reference shapes differ");
  const bool masked = mode == ResidualMode::observed_only;
  if (masked) {
    detail::require_dims(mask != nullptr && mask->same_shape(reference),
                         "normalized_residual: observed-only mode needs a matching mask");
  }
  const auto xv = estimate.values();
  const auto yv = reference.values();
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (masked && !mask->values()[i]) continue;
    const double d = xv[i] - yv[i];
    err += d * d;
    ref += yv[i] * yv[i];
  }
  if (!(ref > 0.0)) return std::nullopt;
  return err / ref;
}

/// Arithmetic mean of the residuals pushed so far. The running sum is kept
/// rather than an incremental mean so replaying a log reproduces it exactly.
class RunningAverage {
public:
  double push(double value) noexcept {
    sum_ += value;
    ++count_;
    return value_();
  }

  double value() const noexcept { return value_(); }
  std::size_t count() const noexcept { return count_; }

private:
  double value_() const noexcept { return count_ ? sum_ / static_cast<double>(count_) : 0.0; }

  double sum_ = 0.0;
  std::size_t count_ = 0;
};

inline RunningAverage update_running_average(RunningAverage acc, double residual) noexcept {
  acc.push(residual);
  return acc;
}

} // namespace olstec
