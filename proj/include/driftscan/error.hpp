#pragma once

#include <stdexcept>
#include <string>

namespace driftscan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller passed arguments that violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

enum class LoadErrorKind {
  kIo,
  kBadFormat,
  kBadLength,
  kUnsupported,
  kMissingBand,
  kInconsistentDimensions,
  kNanPayload,
  kBadGeoreference,
};

const char* to_string(LoadErrorKind kind);

/// Raised while decoding raster files (GeoTIFF or DSCN).
class LoadError : public Error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  LoadErrorKind kind() const noexcept { return kind_; }

 private:
  LoadErrorKind kind_;
};

class DegenerateHistogram : public Error {
 public:
  DegenerateHistogram() : Error("degenerate histogram") {}
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& which)
      : Error("undefined metric: " + which) {}
};

/// A pluggable component returned data outside its declared contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact (model, threshold, manifest) does not match its schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace driftscan
