#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "olstec/error.hpp"
#include "olstec/matrix.hpp"

namespace olstec {

/// Slice height L, width W and CP rank R.
struct Dims {
  std::size_t rows = 0;  // L
  std::size_t cols = 0;  // W
  std::size_t rank = 0;  // R

  void validate() const {
    detail::require_config(rows >= 1 && cols >= 1, "Dims: L and W must be >= 1");
    detail::require_config(rank >= 1, "Dims: rank must be >= 1");
  }

  /// R above min(L, W) is allowed but over-parameterized.
  bool rank_exceeds_slice() const noexcept { return rank > std::min(rows, cols); }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// One frontal slice of the stream. `values` is only meaningful where `mask` is set.
struct SliceObservation {
  std::size_t t = 0;  // 1-based step index
  RealMatrix values;
  MaskMatrix mask;

  SliceObservation() = default;
  SliceObservation(std::size_t step, RealMatrix v, MaskMatrix m)
      : t(step), values(std::move(v)), mask(std::move(m)) {
    validate();
  }

  /// Fully observed slice.
  static SliceObservation dense(std::size_t step, RealMatrix v) {
    MaskMatrix m(v.rows(), v.cols(), 1);
    return {step, std::move(v), std::move(m)};
  }

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
  bool observed(std::size_t l, std::size_t w) const noexcept { return mask(l, w) != 0; }

  void validate() const {
    detail::require_dims(values.same_shape(mask), "SliceObservation: values " +
                                                      std::to_string(values.rows()) + "x" +
                                                      std::to_string(values.cols()) + " vs mask " +
                                                      std::to_string(mask.rows()) + "x" +
                                                      std::to_string(mask.cols()));
  }
};

/// CP factors of the current slice model X = A diag(b) C^T.
struct CpFactors {
  RealMatrix a;  // L x R
  RealMatrix c;  // W x R
  RealVector b;  // R

  CpFactors() = default;
  CpFactors(RealMatrix a_, RealMatrix c_, RealVector b_)
      : a(std::move(a_)), c(std::move(c_)), b(std::move(b_)) {
    validate();
  }

  std::size_t rank() const noexcept { return b.size(); }
  Dims dims() const noexcept { return {a.rows(), c.rows(), b.size()}; }

  void validate() const {
    detail::require_dims(a.cols() == b.size() && c.cols() == b.size(),
                         "CpFactors: A has " + std::to_string(a.cols()) + " columns, C has " +
                             std::to_string(c.cols()) + ", b has length " +
                             std::to_string(b.size()));
  }

  bool all_finite() const noexcept {
    auto finite = [](std::span<const double> v) {
      for (double x : v)
        if (!std::isfinite(x)) return false;
      return true;
    };
    return finite(a.values()) && finite(c.values()) && finite(b);
  }
};

/// X[l, w] = sum_r A[l, r] b[r] C[w, r], computed against explicit factor/weight operands.
inline RealMatrix reconstruct_slice(const RealMatrix& a, std::span<const double> b,
                                    const RealMatrix& c) {
  detail::require_dims(a.cols() == b.size() && c.cols() == b.size(),
                       "reconstruct_slice: rank mismatch");
  const std::size_t rank = b.size();
  RealMatrix x(a.rows(), c.rows());
  RealVector scaled(rank);
  for (std::size_t l = 0; l < a.rows(); ++l) {
    auto arow = a.row(l);
    for (std::size_t r = 0; r < rank; ++r) scaled[r] = arow[r] * b[r];
    for (std::size_t w = 0; w < c.rows(); ++w) x(l, w) = dot(scaled, c.row(w));
  }
  return x;
}

inline RealMatrix reconstruct_slice(const CpFactors& f) {
  f.validate();
  return reconstruct_slice(f.a, f.b, f.c);
}

/// g_{l,w} = a^l ⊛ c^w, written into `out`.
inline void entry_product(const RealMatrix& a, const RealMatrix& c, std::size_t l, std::size_t w,
                          std::span<double> out) noexcept {
  auto arow = a.row(l);
  auto crow = c.row(w);
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = arow[r] * crow[r];
}

inline RealVector entry_product_g(const CpFactors& f, std::size_t l, std::size_t w) {
  f.validate();
  if (l >= f.a.rows() || w >= f.c.rows()) {
    throw DimensionError("entry_product_g: index (" + std::to_string(l) + ", " +
                         std::to_string(w) + ") outside " + std::to_string(f.a.rows()) + "x" +
                         std::to_string(f.c.rows()));
  }
  RealVector g(f.rank());
  entry_product(f.a, f.c, l, w, g);
  return g;
}

/// Sum over observed entries of (X - Y)^2.
inline double masked_frobenius_sq(const RealMatrix& x, const RealMatrix& y,
                                  const MaskMatrix& mask) {
  detail::require_dims(x.same_shape(y) && x.same_shape(mask),
                       "masked_frobenius_sq: operand shapes differ");
  double s = 0.0;
  const auto xv = x.values();
  const auto yv = y.values();
  const auto mv = mask.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (mv[i]) {
      const double d = xv[i] - yv[i];
      s += d * d;
    }
  }
  return s;
}

} // namespace olstec
