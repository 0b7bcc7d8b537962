#ifndef DCE_ERRORS_HPP
#define DCE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dce {

/// Base of every domain failure raised by the library. Callers that only
/// need to distinguish "our" errors from programming errors catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// physics-core
class DegenerateFlux : public Error { using Error::Error; };
class OutOfBand : public Error { using Error::Error; };
class QuadratureFailure : public Error { using Error::Error; };

// gaussian-state
class UnphysicalState : public Error { using Error::Error; };
class CutoffTooSmall : public Error { using Error::Error; };

// measurement-chain
class FactorizationFailure : public Error { using Error::Error; };
class RecordTooShort : public Error { using Error::Error; };
class NegativeDenominator : public Error { using Error::Error; };
class ConfigMismatch : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };

// cli / config
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& reason)
      : Error(field + ": " + reason), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};
class VersionError : public Error { using Error::Error; };

}  // namespace dce

#endif  // DCE_ERRORS_HPP
