#include "iekf/common.hpp"

namespace iekf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidRotation: return "InvalidRotation";
    case ErrorCode::AngleNearPi: return "AngleNearPi";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::StepRejected: return "StepRejected";
    case ErrorCode::F0NotCompatible: return "F0NotCompatible";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::NegativeRange: return "NegativeRange";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::ZeroRange: return "ZeroRange";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

}  // namespace iekf
