#include "iekf/oracles.hpp"

namespace iekf::oracle {

MatX expm_series(const MatX& m, int terms) {
  MatX sum = MatX::Identity(m.rows(), m.cols());
  MatX term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * m / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

MatX left_jacobian_series(const SEnTangent& xi, int terms) {
  const MatX a = ad(xi);
  MatX sum = MatX::Identity(a.rows(), a.cols());
  MatX power = sum;
  double fact = 1.0;
  for (int i = 1; i < terms; ++i) {
    power = power * a;
    fact *= static_cast<double>(i + 1);
    sum += power / fact;
  }
  return sum;
}

Mat3 q_theta_series(const Vec3& theta, const Vec3& v, int terms) {
  const Mat3 T = skew(theta);
  const Mat3 V = skew(v);
  std::vector<Mat3> powers(terms);
  powers[0] = Mat3::Identity();
  for (int i = 1; i < terms; ++i) powers[i] = powers[i - 1] * T;
  std::vector<double> fact(2 * terms + 2, 1.0);
  for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  Mat3 sum = Mat3::Zero();
  for (int n = 0; n < terms; ++n) {
    for (int m = 0; n + m < terms; ++m) {
      sum += powers[n] * V * powers[m] / fact[n + m + 2];
    }
  }
  return sum;
}

SEnElement group_exp_series(const SEnTangent& xi, int terms) {
  const MatX e = expm_series(hat(xi), terms);
  const int n = xi.n();
  return SEnElement(Rotation::unchecked(e.topLeftCorner<3, 3>()), e.topRightCorner(3, n));
}

MatX numerical_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& x, double h) {
  const VecX f0 = f(x);
  MatX jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    VecX xp = x;
    VecX xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

MatX rk4_matrix(const std::function<MatX(double, const MatX&)>& f, MatX m, double t0, double h,
                int steps) {
  double t = t0;
  for (int k = 0; k < steps; ++k) {
    const MatX k1 = f(t, m);
    const MatX k2 = f(t + 0.5 * h, m + 0.5 * h * k1);
    const MatX k3 = f(t + 0.5 * h, m + 0.5 * h * k2);
    const MatX k4 = f(t + h, m + h * k3);
    m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return m;
}

}  // namespace iekf::oracle
