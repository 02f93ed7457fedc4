#pragma once

#include <vector>

#include "iekf/common.hpp"
#include "iekf/so3.hpp"

namespace iekf {

/// Coordinates of an element of se_n(3): ξ = (ω, v₁, …, vₙ), length 3(n+1).
///
/// For SE_2(3) the IMU layout is (ω, p, v): the first translation slot holds
/// position and the second velocity. The same ordering is used by every
/// filter Jacobian in this library.
class SEnTangent {
 public:
  /// Zero tangent of SE_n(3).
  explicit SEnTangent(int n = 0);
  /// Throws DimensionMismatch unless the length is a positive multiple of 3.
  explicit SEnTangent(VecX coords);
  /// Throws DimensionMismatch unless the length equals 3(n+1).
  SEnTangent(int n, VecX coords);

  static SEnTangent from_parts(const Vec3& omega, const std::vector<Vec3>& vs);

  int n() const { return static_cast<int>(coords_.size() / 3) - 1; }
  Eigen::Index dim() const { return coords_.size(); }

  auto omega() const { return coords_.head<3>(); }
  auto omega() { return coords_.head<3>(); }
  auto v(int i) const { return coords_.segment<3>(3 + 3 * i); }
  auto v(int i) { return coords_.segment<3>(3 + 3 * i); }

  const VecX& coords() const { return coords_; }
  VecX& coords() { return coords_; }

  SEnTangent operator+(const SEnTangent& o) const;
  SEnTangent operator-() const;
  SEnTangent operator*(double s) const;

 private:
  VecX coords_;
};

/// Element of SE_n(3): a rotation plus n 3-vectors that share it. The matrix
/// embedding is [[R, t₁ … tₙ], [0, I_n]].
class SEnElement {
 public:
  /// Identity of SE_n(3).
  explicit SEnElement(int n = 0);
  SEnElement(const Rotation& R, Mat3X columns);

  static SEnElement identity(int n) { return SEnElement(n); }
  /// Throws DimensionMismatch / InvalidRotation for malformed embeddings.
  static SEnElement from_matrix(const MatX& m);

  int n() const { return static_cast<int>(t_.cols()); }
  const Rotation& rotation() const { return R_; }
  const Mat3& R() const { return R_.matrix(); }
  const Mat3X& columns() const { return t_; }
  Vec3 column(int i) const { return t_.col(i); }

  MatX matrix() const;
  SEnElement inverse() const;
  SEnElement operator*(const SEnElement& o) const;

 private:
  Rotation R_;
  Mat3X t_;
};

/// (3+n)-square Lie-algebra matrix of ξ.
MatX hat(const SEnTangent& xi);
/// Exact inverse of hat; n is inferred from the matrix size.
SEnTangent vee(const MatX& m);

SEnElement exp(const SEnTangent& xi);
/// Throws AngleNearPi outside the injectivity radius.
SEnTangent log(const SEnElement& x);

/// Ad_X acting on tangent coordinates: [[R, 0], [tᵢ^R, R]] block pattern.
MatX adjoint(const SEnElement& x);
/// ad_ξ: [[ω^, 0], [vᵢ^, ω^]] block pattern.
MatX ad(const SEnTangent& xi);

/// J(ad_ξ) = Σ ad_ξ^i/(i+1)!, assembled from the closed-form SO(3) Jacobian on
/// the diagonal and Q_θ(vᵢ) in the first block column.
MatX left_jacobian(const SEnTangent& xi);
/// Throws SingularJacobian when ‖ω‖ is within kAngleMargin of 2kπ, k ≠ 0.
MatX left_jacobian_inverse(const SEnTangent& xi);

}  // namespace iekf
