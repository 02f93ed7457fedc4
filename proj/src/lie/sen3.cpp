#include "iekf/sen3.hpp"

namespace iekf {
namespace {

void require_same_n(int a, int b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": n=" + std::to_string(a) + " vs n=" + std::to_string(b));
  }
}

}  // namespace

SEnTangent::SEnTangent(int n) : coords_(VecX::Zero(3 * (n + 1))) {
  if (n < 0) throw Error(ErrorCode::DimensionMismatch, "negative n");
}

SEnTangent::SEnTangent(VecX coords) : coords_(std::move(coords)) {
  if (coords_.size() < 3 || coords_.size() % 3 != 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "tangent length " + std::to_string(coords_.size()) + " is not 3(n+1)");
  }
}

SEnTangent::SEnTangent(int n, VecX coords) : coords_(std::move(coords)) {
  if (n < 0 || coords_.size() != 3 * (n + 1)) {
    throw Error(ErrorCode::DimensionMismatch, "tangent length " + std::to_string(coords_.size()) +
                                                  " does not match n=" + std::to_string(n));
  }
}

SEnTangent SEnTangent::from_parts(const Vec3& omega, const std::vector<Vec3>& vs) {
  SEnTangent xi(static_cast<int>(vs.size()));
  xi.omega() = omega;
  for (std::size_t i = 0; i < vs.size(); ++i) xi.v(static_cast<int>(i)) = vs[i];
  return xi;
}

SEnTangent SEnTangent::operator+(const SEnTangent& o) const {
  require_same_n(n(), o.n(), "tangent sum");
  return SEnTangent(VecX(coords_ + o.coords_));
}

SEnTangent SEnTangent::operator-() const { return SEnTangent(VecX(-coords_)); }

SEnTangent SEnTangent::operator*(double s) const { return SEnTangent(VecX(s * coords_)); }

SEnElement::SEnElement(int n) : t_(Mat3X::Zero(3, n)) {
  if (n < 0) throw Error(ErrorCode::DimensionMismatch, "negative n");
}

SEnElement::SEnElement(const Rotation& R, Mat3X columns) : R_(R), t_(std::move(columns)) {}

SEnElement SEnElement::from_matrix(const MatX& m) {
  const Eigen::Index size = m.rows();
  if (size < 3 || m.cols() != size) {
    throw Error(ErrorCode::DimensionMismatch, "SE_n(3) embedding must be square with size >= 3");
  }
  const int n = static_cast<int>(size) - 3;
  const double lower_left = n > 0 ? m.bottomLeftCorner(n, 3).cwiseAbs().maxCoeff() : 0.0;
  const double lower_right =
      n > 0 ? (m.bottomRightCorner(n, n) - MatX::Identity(n, n)).cwiseAbs().maxCoeff() : 0.0;
  if (lower_left > 1e-12 || lower_right > 1e-12) {
    throw Error(ErrorCode::DimensionMismatch, "matrix is not an SE_n(3) embedding");
  }
  return SEnElement(Rotation(m.topLeftCorner<3, 3>()), m.topRightCorner(3, n));
}

MatX SEnElement::matrix() const {
  const int k = n();
  MatX m = MatX::Identity(3 + k, 3 + k);
  m.topLeftCorner<3, 3>() = R();
  m.topRightCorner(3, k) = t_;
  return m;
}

SEnElement SEnElement::inverse() const {
  const Mat3 Rt = R().transpose();
  return SEnElement(Rotation::unchecked(Rt), Mat3X(-Rt * t_));
}

SEnElement SEnElement::operator*(const SEnElement& o) const {
  require_same_n(n(), o.n(), "group product");
  return SEnElement(Rotation::unchecked(R() * o.R()), Mat3X(R() * o.t_ + t_));
}

MatX hat(const SEnTangent& xi) {
  const int n = xi.n();
  MatX m = MatX::Zero(3 + n, 3 + n);
  m.topLeftCorner<3, 3>() = skew(xi.omega());
  for (int i = 0; i < n; ++i) m.block<3, 1>(0, 3 + i) = xi.v(i);
  return m;
}

SEnTangent vee(const MatX& m) {
  const Eigen::Index size = m.rows();
  if (size < 3 || m.cols() != size) {
    throw Error(ErrorCode::DimensionMismatch, "se_n(3) matrix must be square with size >= 3");
  }
  const int n = static_cast<int>(size) - 3;
  SEnTangent xi(n);
  xi.omega() = unskew(m.topLeftCorner<3, 3>());
  for (int i = 0; i < n; ++i) xi.v(i) = m.block<3, 1>(0, 3 + i);
  return xi;
}

SEnElement exp(const SEnTangent& xi) {
  const Vec3 w = xi.omega();
  const auto k = trig_coefficients(w.norm());
  const Mat3 W = skew(w);
  const Mat3 W2 = W * W;
  const Mat3 R = Mat3::Identity() + k.a * W + k.b * W2;
  const Mat3 J = Mat3::Identity() + k.b * W + k.c * W2;
  Mat3X t(3, xi.n());
  for (int i = 0; i < xi.n(); ++i) t.col(i) = J * xi.v(i);
  return SEnElement(Rotation::unchecked(R), std::move(t));
}

SEnTangent log(const SEnElement& x) {
  SEnTangent xi(x.n());
  xi.omega() = so3_log(x.R());
  const Mat3 Jinv = so3_left_jacobian_inverse(xi.omega());
  for (int i = 0; i < x.n(); ++i) xi.v(i) = Jinv * x.column(i);
  return xi;
}

MatX adjoint(const SEnElement& x) {
  const int n = x.n();
  const Eigen::Index d = 3 * (n + 1);
  MatX m = MatX::Zero(d, d);
  const Mat3& R = x.R();
  m.topLeftCorner<3, 3>() = R;
  for (int i = 0; i < n; ++i) {
    m.block<3, 3>(3 + 3 * i, 0) = skew(x.column(i)) * R;
    m.block<3, 3>(3 + 3 * i, 3 + 3 * i) = R;
  }
  return m;
}

MatX ad(const SEnTangent& xi) {
  const int n = xi.n();
  const Eigen::Index d = 3 * (n + 1);
  MatX m = MatX::Zero(d, d);
  const Mat3 W = skew(xi.omega());
  m.topLeftCorner<3, 3>() = W;
  for (int i = 0; i < n; ++i) {
    m.block<3, 3>(3 + 3 * i, 0) = skew(xi.v(i));
    m.block<3, 3>(3 + 3 * i, 3 + 3 * i) = W;
  }
  return m;
}

MatX left_jacobian(const SEnTangent& xi) {
  const int n = xi.n();
  const Eigen::Index d = 3 * (n + 1);
  const Vec3 w = xi.omega();
  const Mat3 J = so3_left_jacobian(w);
  MatX m = MatX::Zero(d, d);
  m.topLeftCorner<3, 3>() = J;
  for (int i = 0; i < n; ++i) {
    m.block<3, 3>(3 + 3 * i, 0) = se3_q_matrix(w, xi.v(i));
    m.block<3, 3>(3 + 3 * i, 3 + 3 * i) = J;
  }
  return m;
}

MatX left_jacobian_inverse(const SEnTangent& xi) {
  const int n = xi.n();
  const Eigen::Index d = 3 * (n + 1);
  const Vec3 w = xi.omega();
  const Mat3 Jinv = so3_left_jacobian_inverse(w);
  MatX m = MatX::Zero(d, d);
  m.topLeftCorner<3, 3>() = Jinv;
  for (int i = 0; i < n; ++i) {
    // Block lower-triangular inverse: -J⁻¹ Q J⁻¹ below the diagonal.
    m.block<3, 3>(3 + 3 * i, 0) = -Jinv * se3_q_matrix(w, xi.v(i)) * Jinv;
    m.block<3, 3>(3 + 3 * i, 3 + 3 * i) = Jinv;
  }
  return m;
}

}  // namespace iekf
