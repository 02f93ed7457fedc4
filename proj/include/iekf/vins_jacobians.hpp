#pragma once

#include <optional>
#include <vector>

#include "iekf/imu_model.hpp"

namespace iekf {

struct FullStateJacobians {
  MatX F;  // (15 + 3L) square, layout [ξ_I, b̃, ξ_f]
  MatX G;  // (15 + 3L) × 12
};

/// Error dynamics on SE_{2+L}(3) with static landmarks: A gains zero rows for
/// the landmark slots and B gains f̂^R̂ gyro rows; both optionally
/// premultiplied by J(ad ξ_δ)⁻¹ with ξ_δ padded by zero landmark slots.
FullStateJacobians full_state_jacobians(const ImuState& state, const std::vector<Vec3>& landmarks,
                                        const Vec3& gravity,
                                        const std::optional<SEnTangent>& xi_delta = std::nullopt);

}  // namespace iekf
