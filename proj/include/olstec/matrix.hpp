#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "olstec/error.hpp"

namespace olstec {

/// Dense row-major matrix. Rows are contiguous, so a row of a factor matrix
/// (one a^l or c^w vector) is a plain span.
template <typename T>
class Matrix {
public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Builds from nested braces, e.g. {{1, 2}, {3, 4}}. Ragged input is rejected.
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      detail::require_dims(row.size() == cols_, "Matrix: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  T& at(std::size_t i, std::size_t j) {
    check_index(i, j);
    return (*this)(i, j);
  }
  const T& at(std::size_t i, std::size_t j) const {
    check_index(i, j);
    return (*this)(i, j);
  }

  std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(std::size_t r, std::size_t c) const noexcept { return rows_ == r && cols_ == c; }
  template <typename U>
  bool same_shape(const Matrix<U>& o) const noexcept {
    return rows_ == o.rows() && cols_ == o.cols();
  }

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
  void check_index(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) {
      throw DimensionError("Matrix index (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
/// One byte per entry, nonzero = observed. Avoids std::vector<bool> proxies.
using MaskMatrix = Matrix<std::uint8_t>;
using RealVector = std::vector<double>;

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double squared_norm(std::span<const double> x) noexcept { return dot(x, x); }

inline double frobenius_sq(const RealMatrix& m) noexcept { return squared_norm(m.values()); }

inline std::size_t count_observed(const MaskMatrix& mask) noexcept {
  return static_cast<std::size_t>(
      std::count_if(mask.values().begin(), mask.values().end(), [](auto v) { return v != 0; }));
}

} // namespace olstec
