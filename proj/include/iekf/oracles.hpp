#pragma once

// Reference computations that share no code path with the closed forms they
// check. Used by the unit tests, the acceptance suite and `selfcheck`.

#include <functional>

#include "iekf/common.hpp"
#include "iekf/sen3.hpp"

namespace iekf::oracle {

/// Σ_{k<terms} M^k/k!, no scaling.
MatX expm_series(const MatX& m, int terms = 30);

/// Σ_{i<terms} ad_ξ^i/(i+1)!
MatX left_jacobian_series(const SEnTangent& xi, int terms = 25);

/// Truncated double series for Q_θ(v): Σ_{n+m<terms} (θ^)^n v^ (θ^)^m/(n+m+2)!
Mat3 q_theta_series(const Vec3& theta, const Vec3& v, int terms = 25);

/// exp of the (3+n)-square Lie-algebra matrix by series, mapped back to the group.
SEnElement group_exp_series(const SEnTangent& xi, int terms = 30);

/// Central-difference Jacobian of a vector function.
MatX numerical_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& x, double h = 1e-6);

/// Classical RK4 integration of a matrix ODE Ṁ = f(t, M) on [t0, t0 + steps·h].
MatX rk4_matrix(const std::function<MatX(double, const MatX&)>& f, MatX m0, double t0, double h,
                int steps);

}  // namespace iekf::oracle
