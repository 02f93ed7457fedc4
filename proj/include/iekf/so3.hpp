#pragma once

#include "iekf/common.hpp"

namespace iekf {

/// Below this rotation angle (rad) the Rodrigues coefficients switch to a
/// four-term Taylor expansion.
inline constexpr double kSmallAngle = 1e-6;

/// Below this angle the cancellation-prone Jacobian coefficients
/// ((θ - sinθ)/θ³ and friends) are evaluated from their power series.
inline constexpr double kSeriesAngle = 0.5;

/// Margin kept from the injectivity radius of log and from the singular
/// angles 2kπ of the left Jacobian.
inline constexpr double kAngleMargin = 1e-6;

Mat3 skew(const Vec3& w);
Vec3 unskew(const Mat3& m);

/// Scalar coefficients shared by the SO(3)/SE(3) closed forms, evaluated
/// stably for every θ.
struct TrigCoefficients {
  double a;   // sinθ/θ
  double b;   // (1 - cosθ)/θ²
  double c;   // (θ - sinθ)/θ³
  double d;   // (1 - θ sinθ / (2(1 - cosθ)))/θ²
  double c2;  // (θ² + 2cosθ - 2)/(2θ⁴)
  double c3;  // (2θ - 3sinθ + θcosθ)/(2θ⁵)
};
TrigCoefficients trig_coefficients(double theta);

Mat3 so3_exp(const Vec3& w);
/// Throws AngleNearPi when the angle is within kAngleMargin of π.
Vec3 so3_log(const Mat3& R);
double rotation_angle(const Mat3& R);

/// J(θ^) = Σ (θ^)^i/(i+1)!
Mat3 so3_left_jacobian(const Vec3& w);
/// Throws SingularJacobian when ‖w‖ is within kAngleMargin of 2kπ, k ≠ 0.
Mat3 so3_left_jacobian_inverse(const Vec3& w);

/// Q_θ(v) = Σ_n Σ_m (θ^)^n v^ (θ^)^m / (n+m+2)!, the off-diagonal block of
/// the SE(3) left Jacobian.
Mat3 se3_q_matrix(const Vec3& theta, const Vec3& v);

/// Rotation matrix with validated orthonormality.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}
  /// Throws InvalidRotation unless mᵀm = I and det m = 1 within 1e-10.
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(); }
  static Rotation exp(const Vec3& w);
  /// Skips validation; for values produced by exact group operations.
  static Rotation unchecked(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const { return unchecked(m_.transpose()); }
  Vec3 log() const { return so3_log(m_); }
  Rotation operator*(const Rotation& o) const { return unchecked(m_ * o.m_); }
  Vec3 operator*(const Vec3& x) const { return m_ * x; }

  /// Re-orthonormalizes through the nearest rotation (polar decomposition).
  Rotation normalized() const;

 private:
  Mat3 m_;
};

}  // namespace iekf
