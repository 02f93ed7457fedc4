#include "test_util.hpp"

#include <numbers>

namespace iekf::testing {

VecX random_vec(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  VecX v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

SEnTangent random_tangent(std::mt19937_64& rng, int n, double max_angle, double v_scale) {
  std::uniform_real_distribution<double> u(0.0, max_angle);
  VecX dir = random_vec(rng, 3);
  while (dir.norm() < 1e-3) dir = random_vec(rng, 3);
  VecX c(3 * (n + 1));
  c.head<3>() = dir.normalized() * u(rng);
  c.tail(3 * n) = random_vec(rng, 3 * n, v_scale);
  return SEnTangent(n, c);
}

Rotation random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const Vec3 dir = random_vec(rng, 3).normalized();
  return Rotation::exp(dir * u(rng));
}

MatX random_spd(std::mt19937_64& rng, Eigen::Index n, double floor) {
  const MatX a = random_vec(rng, n * n).reshaped(n, n);
  return a * a.transpose() + floor * MatX::Identity(n, n);
}

double rel_frobenius(const MatX& a, const MatX& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace iekf::testing
