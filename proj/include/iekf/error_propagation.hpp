#pragma once

#include <functional>
#include <vector>

#include "iekf/common.hpp"
#include "iekf/sen3.hpp"

namespace iekf {

enum class ErrorSide { Left, Right };

/// η_L = X⁻¹X̄ or η_R = X̄X⁻¹ between a reference X and a tracking trajectory X̄.
struct InvariantError {
  SEnElement eta;
  ErrorSide side = ErrorSide::Right;

  static InvariantError between(const SEnElement& x, const SEnElement& xbar, ErrorSide side);
  /// Recovers X̄ from X.
  SEnElement apply(const SEnElement& x) const;
};

/// Inputs of Ẋ = X v_b + v_g X + f₀(X).
struct BodyFixedInput {
  SEnTangent vb;
  SEnTangent vg;
};

/// f₀ returns a tangent vector at X as a (3+n)-square matrix.
using VectorFieldFn = std::function<MatX(const SEnElement&)>;

/// A vector field f₀ with f₀(X₁X₂) = f₀(X₁)X₂ + X₁f₀(X₂), checked on
/// construction against `trials` seeded random pairs.
class GroupVectorField {
 public:
  /// Throws F0NotCompatible if the product rule fails beyond `tol`.
  GroupVectorField(VectorFieldFn f0, int n, int trials = 100, double tol = 1e-8,
                   std::uint64_t seed = 0x5eed);

  static GroupVectorField zero(int n);
  /// f₀(X) = M X N for SE_2(3): the velocity column feeds the position column.
  static GroupVectorField imu_autonomous();

  int n() const { return n_; }
  MatX operator()(const SEnElement& x) const { return f0_(x); }
  /// Worst product-rule residual seen during validation.
  double validation_residual() const { return residual_; }

 private:
  VectorFieldFn f0_;
  int n_;
  double residual_ = 0.0;
};

/// A = ∂/∂ξ f₀(exp ξ) at ξ = 0, by central differences of (f₀(exp ξ)exp(−ξ))^∨.
struct LinearPart {
  MatX A;
  static LinearPart linearize(const GroupVectorField& f0, double h = 1e-6);
};

/// ξ̇_L = −ad(v_b)ξ + J(−ad ξ)⁻¹w + Aξ
VecX left_error_rate(const SEnTangent& xi, const SEnTangent& vb, const SEnTangent& w,
                     const LinearPart& A);

/// ξ̇_R = ad(v_g)ξ + J(ad ξ)⁻¹Ad_X̄ w + Aξ
VecX right_error_rate(const SEnTangent& xi, const SEnTangent& vg, const SEnTangent& w,
                      const MatX& adjoint_of_estimate, const LinearPart& A);

/// η̇ at the group level; left: −v_bη + ηv_b + ηw + f₀(η), right:
/// v_gη − ηv_g + (Ad_X̄ w)η + f₀(η). The right form needs Ad_X̄.
MatX group_error_rate(const InvariantError& eta, const BodyFixedInput& input, const SEnTangent& w,
                      const GroupVectorField& f0, const MatX* adjoint_of_estimate = nullptr);

/// Rate of the log error: (t, ξ, w) -> ξ̇.
using ErrorRateFn = std::function<VecX(double, const VecX&, const VecX&)>;
/// Per-step noise sample w_k, already scaled to the step (variance Q/step).
using NoisePathFn = std::function<VecX(long)>;

enum class NoiseInjection {
  Frozen,         // w_k held constant inside every RK4 stage
  EulerMaruyama,  // RK4 on the drift, then ξ += step·(rate(ξ, w_k) − rate(ξ, 0))
};

struct ErrorTrajectory {
  std::vector<double> t;
  std::vector<VecX> xi;
};

/// Classical RK4 on [0, horizon]; the last step is shortened to land on the
/// horizon. Throws StepRejected when any stage has ‖ω‖ ≥ 2π − 1e-6.
ErrorTrajectory integrate_error(const ErrorRateFn& rate, const VecX& xi0, double horizon,
                                double step, const NoisePathFn& noise = nullptr,
                                NoiseInjection mode = NoiseInjection::Frozen);

/// Φ = e^{A dt}; exact polynomial for nilpotent A.
MatX loglinear_transition(const LinearPart& A, double dt);

}  // namespace iekf
