#pragma once

#include <stdexcept>
#include <string>

namespace olstec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shapes of operands disagree, or an index is out of range.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A configuration value violates its documented range.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A factorization failed. Callers may recover, e.g. by raising the regularizer.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Malformed or unreadable file content.
class FormatError : public Error {
public:
  using Error::Error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

inline void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

} // namespace detail
} // namespace olstec
