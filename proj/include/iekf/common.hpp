#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace iekf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

enum class ErrorCode {
  DimensionMismatch,
  InvalidRotation,
  AngleNearPi,
  SingularJacobian,
  StepRejected,
  F0NotCompatible,
  NonPositiveDt,
  NegativeRange,
  SingularInnovation,
  SingularCovariance,
  BehindCamera,
  ZeroRange,
  DegenerateGeometry,
  Diverged,
  OutOfDomain,
  EmptyReport,
  InvalidArgument,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the condition without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Deterministic 64-bit mixer used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace iekf
