#ifndef MCSBD_ERROR_HPP_
#define MCSBD_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mcsbd {

/// Base class for every runtime failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands whose lengths or grid shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot support the requested computation (all-zero
/// kernels, empty aggregate spectral bins, zero vectors to normalize).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A kernel or estimate whose spectrum has a (numerically) zero entry.
class NonInvertibleError : public Error {
 public:
  using Error::Error;
};

/// A retraction asked to normalize a zero vector.
class DegenerateStepError : public DegenerateInputError {
 public:
  using DegenerateInputError::DegenerateInputError;
};

/// Invalid user configuration (out-of-range parameters, unknown names).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File-system or format failures; the message always carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (e.g. a non-unit point on the
/// sphere). Distinct from runtime errors because it signals a bug upstream.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mcsbd

#endif  // MCSBD_ERROR_HPP_
