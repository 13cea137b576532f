#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace erligme {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecCRef = Eigen::Ref<const Vec>;
using VecRef = Eigen::Ref<Vec>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operator or vector dimensions do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A parameter set is internally inconsistent (bad ranges, violated
/// convexity condition, malformed block layout, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A dense fallback was requested for an operator that is too large.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (NaN, failed decomposition, root bracketing).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The primal-dual iteration diverged or produced non-finite iterates.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written, or its contents are malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Short name of the most derived library error class.
inline const char* error_kind(const Error& e) {
  if (dynamic_cast<const SolverError*>(&e)) return "solver";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
  if (dynamic_cast<const CapacityError*>(&e)) return "capacity";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  return "numerical";
}

/// Largest total dimension (in + out) that may be materialized densely.
inline constexpr Index kDenseLimit = 4096;

inline void require_dim(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

inline void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace erligme
