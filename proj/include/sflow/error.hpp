#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sflow {

enum class ErrorKind {
  InvalidArgument,
  InvalidSubspace,
  InvalidRule,
  DegenerateMeasure,
  CorruptFile,
  OutsideSupport,
  ResolutionExhausted,
  OutOfDomain,
  UndefinedMagnification,
  TruncatedOrbit,
  DimensionMismatch,
  EmptyDistribution,
  DepthOverflow,
  ScheduleTooShort,
  InvalidConfig,
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when a CP orbit hits a zero-mass cell before reaching its requested length.
class TruncatedOrbit : public Error {
 public:
  TruncatedOrbit(std::size_t achieved, const std::string& what)
      : Error(ErrorKind::TruncatedOrbit, what), achieved_(achieved) {}

  std::size_t achieved() const noexcept { return achieved_; }

 private:
  std::size_t achieved_;
};

// Raised by time averages when the scenery at one sample time fails.
class SceneryFailure : public Error {
 public:
  SceneryFailure(ErrorKind kind, double t, const std::string& what)
      : Error(kind, what), t_(t) {}

  double time() const noexcept { return t_; }

 private:
  double t_;
};

}  // namespace sflow
