#include <Eigen/SVD>

#include "iekf/observability.hpp"
#include "iekf/so3.hpp"

namespace iekf {

MatX observability_transition(double dt, const Vec3& gravity) {
  const Mat3 G = skew(gravity);
  MatX phi = MatX::Identity(12, 12);
  phi.block<3, 3>(3, 0) = 0.5 * G * dt * dt;
  phi.block<3, 3>(3, 6) = Mat3::Identity() * dt;
  phi.block<3, 3>(6, 0) = G * dt;
  return phi;
}

ObservabilityResult observability_matrix(double dt, int k_blocks, const Vec3& gravity) {
  if (k_blocks < 1) throw Error(ErrorCode::InvalidArgument, "k_blocks must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  MatX H = MatX::Zero(3, 12);
  H.block<3, 3>(0, 3) = -Mat3::Identity();
  H.block<3, 3>(0, 9) = Mat3::Identity();
  const MatX phi = observability_transition(dt, gravity);

  ObservabilityResult out;
  out.O.resize(3 * k_blocks, 12);
  MatX row = H;
  for (int k = 0; k < k_blocks; ++k) {
    out.O.middleRows(3 * k, 3) = row;
    row = row * phi;
  }
  const Eigen::JacobiSVD<MatX> svd(out.O, Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  const double tol = 1e-10 * out.singular_values(0);
  out.rank = static_cast<int>((out.singular_values.array() > tol).count());
  out.nullspace_dim = 12 - out.rank;
  out.nullspace = svd.matrixV().rightCols(out.nullspace_dim);
  return out;
}

}  // namespace iekf
