#include "iekf/vins_jacobians.hpp"

namespace iekf {

FullStateJacobians full_state_jacobians(const ImuState& state, const std::vector<Vec3>& landmarks,
                                        const Vec3& gravity,
                                        const std::optional<SEnTangent>& xi_delta) {
  const int L = static_cast<int>(landmarks.size());
  if (L == 0) {
    const ErrorJacobians base = error_jacobians(state, gravity, xi_delta);
    return {MatX(base.F), MatX(base.G)};
  }
  const Eigen::Index d = 15 + 3 * L;
  const Eigen::Index g = 9 + 3 * L;  // group tangent (ω, p, v, f…)

  MatX B = MatX::Zero(g, 6);
  B.topRows<9>() = imu_b_matrix(state);
  for (int j = 0; j < L; ++j) B.block<3, 3>(9 + 3 * j, 0) = skew(landmarks[j]) * state.R.matrix();
  if (xi_delta) {
    if (xi_delta->n() != 2) {
      throw Error(ErrorCode::DimensionMismatch, "imitated error must live in se_2(3)");
    }
    if (!xi_delta->coords().isZero(0.0)) {
      VecX padded = VecX::Zero(g);
      padded.head<9>() = xi_delta->coords();
      B = (left_jacobian_inverse(SEnTangent(2 + L, padded)) * B).eval();
    }
  }

  FullStateJacobians j{MatX::Zero(d, d), MatX::Zero(d, 12)};
  j.F.topLeftCorner<9, 9>() = imu_a_matrix(gravity);
  j.F.block(0, 9, 9, 6) = -B.topRows<9>();
  j.G.topLeftCorner(9, 6) = B.topRows<9>();
  j.G.block<6, 6>(9, 6).setIdentity();
  j.F.block(15, 9, 3 * L, 6) = -B.bottomRows(3 * L);
  j.G.block(15, 0, 3 * L, 6) = B.bottomRows(3 * L);
  return j;
}

}  // namespace iekf
