#include "iekf/so3.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace iekf {
namespace {

constexpr int kSeriesTerms = 10;

// |B_2k| for k = 1..10.
constexpr std::array<double, kSeriesTerms> kBernoulliAbs = {
    1.0 / 6.0,        1.0 / 30.0,  1.0 / 42.0,          1.0 / 30.0,     5.0 / 66.0,
    691.0 / 2730.0,   7.0 / 6.0,   3617.0 / 510.0,      43867.0 / 798.0, 174611.0 / 330.0};

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Σ_k coeff(k) θ^{2(k - k0)} summed by Horner in θ².
template <typename Coeff>
double even_series(double theta, int k0, Coeff coeff) {
  const double t2 = theta * theta;
  double acc = 0.0;
  for (int k = k0 + kSeriesTerms - 1; k >= k0; --k) acc = acc * t2 + coeff(k);
  return acc;
}

}  // namespace

Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

Vec3 unskew(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

TrigCoefficients trig_coefficients(double theta) {
  TrigCoefficients k{};
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    k.a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0;
    k.b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0;
  } else {
    k.a = std::sin(theta) / theta;
    const double h = std::sin(0.5 * theta) / (0.5 * theta);
    k.b = 0.5 * h * h;
  }

  if (theta < kSeriesAngle) {
    k.c = even_series(theta, 1, [](int j) {
      return ((j % 2 == 1) ? 1.0 : -1.0) / factorial(2 * j + 1);
    });
    k.d = even_series(theta, 1, [](int j) { return kBernoulliAbs[j - 1] / factorial(2 * j); });
    k.c2 = even_series(theta, 2, [](int j) {
      return ((j % 2 == 0) ? 1.0 : -1.0) / factorial(2 * j);
    });
    k.c3 = even_series(theta, 2, [](int j) {
      return ((j % 2 == 0) ? 1.0 : -1.0) * (j - 1) / factorial(2 * j + 1);
    });
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    k.c = (theta - s) / (t2 * theta);
    const double half = 0.5 * theta;
    k.d = (1.0 - half * std::cos(half) / std::sin(half)) / t2;
    k.c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
    k.c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta);
  }
  return k;
}

Mat3 so3_exp(const Vec3& w) {
  const auto k = trig_coefficients(w.norm());
  const Mat3 W = skew(w);
  return Mat3::Identity() + k.a * W + k.b * W * W;
}

double rotation_angle(const Mat3& R) {
  const double s = 0.5 * unskew(R - R.transpose()).norm();
  const double c = 0.5 * (R.trace() - 1.0);
  return std::atan2(s, c);
}

Vec3 so3_log(const Mat3& R) {
  const double theta = rotation_angle(R);
  if (theta >= std::numbers::pi - kAngleMargin) {
    throw Error(ErrorCode::AngleNearPi,
                "rotation angle " + std::to_string(theta) + " is outside the log domain");
  }
  const Vec3 v = 0.5 * unskew(R - R.transpose());
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return v * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0 + 31.0 * t2 * t2 * t2 / 15120.0);
  }
  return v * (theta / std::sin(theta));
}

Mat3 so3_left_jacobian(const Vec3& w) {
  const auto k = trig_coefficients(w.norm());
  const Mat3 W = skew(w);
  return Mat3::Identity() + k.b * W + k.c * W * W;
}

Mat3 so3_left_jacobian_inverse(const Vec3& w) {
  const double theta = w.norm();
  const double turns = std::round(theta / (2.0 * std::numbers::pi));
  if (turns >= 1.0 && std::abs(theta - turns * 2.0 * std::numbers::pi) < kAngleMargin) {
    throw Error(ErrorCode::SingularJacobian,
                "left Jacobian is singular at angle " + std::to_string(theta));
  }
  const auto k = trig_coefficients(theta);
  const Mat3 W = skew(w);
  return Mat3::Identity() - 0.5 * W + k.d * W * W;
}

Mat3 se3_q_matrix(const Vec3& theta, const Vec3& v) {
  const auto k = trig_coefficients(theta.norm());
  const Mat3 T = skew(theta);
  const Mat3 V = skew(v);
  const Mat3 TV = T * V;
  const Mat3 VT = V * T;
  const Mat3 TVT = TV * T;
  const Mat3 TTV = T * TV;
  const Mat3 VTT = VT * T;
#ifdef IEKF_MUTATE_QTHETA_SIGN
  const double c_sign = -1.0;
#else
  const double c_sign = 1.0;
#endif
  return 0.5 * V + c_sign * k.c * (TV + VT + TVT) + k.c2 * (TTV + VTT - 3.0 * TVT) +
         k.c3 * (TVT * T + T * TVT);
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (!(ortho <= 1e-10) || !(std::abs(det - 1.0) <= 1e-10)) {
    throw Error(ErrorCode::InvalidRotation, "matrix is not a proper rotation");
  }
}

Rotation Rotation::exp(const Vec3& w) { return unchecked(so3_exp(w)); }

Rotation Rotation::unchecked(const Mat3& m) {
  Rotation r;
  r.m_ = m;
  return r;
}

Rotation Rotation::normalized() const {
  Eigen::JacobiSVD<Mat3> svd(m_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return unchecked(r);
}

}  // namespace iekf
