#pragma once

#include "iekf/common.hpp"

namespace iekf {

struct ObservabilityResult {
  MatX O;
  VecX singular_values;
  int rank = 0;
  int nullspace_dim = 0;
  MatX nullspace;  // orthonormal basis, columns
};

/// Stacks H, HΦ, …, HΦ^{k−1} for the landmark-augmented log-invariant error
/// (ξ_ω, ξ_p, ξ_v, ξ_f) with the nilpotent transition over `dt` and the
/// observation pattern (0, −I, 0, I). Rank uses the threshold 1e-10·σ_max.
/// Throws InvalidArgument for k < 1 or dt ≤ 0.
ObservabilityResult observability_matrix(double dt, int k_blocks, const Vec3& gravity);

/// Transition matrix used above.
MatX observability_transition(double dt, const Vec3& gravity);

}  // namespace iekf
