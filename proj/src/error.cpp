#include "sflow/error.hpp"

namespace sflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidSubspace: return "invalid-subspace";
    case ErrorKind::InvalidRule: return "invalid-rule";
    case ErrorKind::DegenerateMeasure: return "degenerate-measure";
    case ErrorKind::CorruptFile: return "corrupt-file";
    case ErrorKind::OutsideSupport: return "outside-support";
    case ErrorKind::ResolutionExhausted: return "resolution-exhausted";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::UndefinedMagnification: return "undefined-magnification";
    case ErrorKind::TruncatedOrbit: return "truncated-orbit";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::EmptyDistribution: return "empty-distribution";
    case ErrorKind::DepthOverflow: return "depth-overflow";
    case ErrorKind::ScheduleTooShort: return "schedule-too-short";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::IoError: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace sflow
