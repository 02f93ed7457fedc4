#pragma once

// Numerical studies shared by `iekf_kit selfcheck` and the acceptance suite.
// Each study returns raw figures; thresholds live with the callers.

#include <functional>
#include <string>
#include <vector>

#include "iekf/common.hpp"

namespace iekf {

struct RoundtripStudy {
  double worst = 0.0;  // max ‖log(exp ξ) − ξ‖
  double seconds = 0.0;
};
/// `count` seeded ξ ∈ se_2(3) with ‖ω‖ uniform in [0, max_angle].
RoundtripStudy study_lie_roundtrip(int count, double max_angle, std::uint64_t seed);

struct JacobianStudy {
  double worst_series = 0.0;   // relative Frobenius, closed form vs series
  double worst_inverse = 0.0;  // ‖J⁻¹J − I‖_max
};
JacobianStudy study_left_jacobian(int count, double max_angle, std::uint64_t seed);

/// max ‖exp(A)B^exp(−A) − (e^{ad A}B)^‖_F over `count` random pairs.
double study_conjugation_identity(int count, std::uint64_t seed);

struct FlowStudy {
  double sup_error = 0.0;  // sup_t ‖exp(ξ(t)) − η(t)‖_max at `step`
  double order = 0.0;      // min observed order over the halving ladder
  std::vector<double> ladder_steps;
  std::vector<double> ladder_errors;
  double seconds = 0.0;
};
/// Right-invariant IMU error over `horizon` with a fixed smooth w(t): RK4 on
/// the log error ξ̇ = ad(v_g)ξ + J(ad ξ)⁻¹Ad_X̄ w + Aξ against RK4 on the
/// matrix error η̇ = v_gη − ηv_g + (Ad_X̄ w)η + f₀(η).
FlowStudy study_group_vs_log_flow(double horizon, double step);

/// max |log(X̂X⁻¹) − Φ(t)ξ₀| over a noise-free IMU run of `horizon` seconds.
double study_loglinear(double horizon);

/// Mean DOF-normalized NEES of `draws` errors drawn from N(0, P).
double study_nees_calibration(int draws, std::uint64_t seed);

/// Worst scaled finite-difference mismatch of the clone measurement Jacobians
/// over every variant and both projection modes.
double study_measurement_jacobian(int cases_per_variant, std::uint64_t seed);

struct NullspaceStudy {
  int tracks = 0;
  double worst_annihilation = 0.0;  // ‖Q₂ᵀH_f‖_F
  double worst_residual = 0.0;      // max |Q₂ᵀz̃| for noise-free tracks
};
/// Tracks of noise-free observations of the default scene seen from a
/// window of truth clones along the default trajectory.
NullspaceStudy study_nullspace(int tracks, std::uint64_t seed);

struct ObservabilityStudy {
  std::vector<double> dts;
  std::vector<int> ks;
  std::vector<std::vector<int>> dims;  // dims[i][j] at dts[i], ks[j]
  bool uniform() const;
};
ObservabilityStudy study_observability(const std::vector<double>& dts, const std::vector<int>& ks);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct NamedCheck {
  std::string name;
  std::function<CheckResult()> run;
};

/// lie_roundtrip, jacobian, conjugation, group_vs_log_flow, loglinear,
/// nees_calibration, measurement_jacobian, nullspace, observability.
const std::vector<NamedCheck>& selfcheck_registry();

/// Runs the checks whose name equals `filter` or starts with it (all when
/// empty). Throws InvalidArgument when nothing matches.
std::vector<CheckResult> run_selfchecks(const std::string& filter);

}  // namespace iekf
