#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "iekf/common.hpp"
#include "iekf/sen3.hpp"

namespace iekf {

using Mat15 = Eigen::Matrix<double, 15, 15>;
using Mat15x12 = Eigen::Matrix<double, 15, 12>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat9x6 = Eigen::Matrix<double, 9, 6>;

/// Pose (R, p, v) on SE_2(3) with gyro and accelerometer biases.
struct ImuState {
  Rotation R;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 b_omega = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();

  /// (R, p, v) as an SE_2(3) element, columns ordered (p, v).
  SEnElement pose() const;
  void set_pose(const SEnElement& x);
};

struct ImuMeasurement {
  double t = 0.0;
  Vec3 omega_m = Vec3::Zero();
  Vec3 a_m = Vec3::Zero();
};

/// Continuous-time noise densities; defaults are those of a MEMS IMU.
struct ImuNoiseSpec {
  double sigma_gw = 1.6968e-4;   // rad/(s·√Hz)
  double sigma_aw = 2.0e-3;      // m/(s²·√Hz)
  double sigma_gbw = 1.9393e-5;  // rad/(s²·√Hz)
  double sigma_abw = 3.0e-3;     // m/(s³·√Hz)
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);

  /// Throws InvalidArgument unless every sigma is positive (zero is allowed
  /// when `allow_zero`, for noiseless simulations).
  void validate(bool allow_zero = false) const;
  /// diag(σ_gw², σ_aw², σ_gbw², σ_abw²), each repeated three times.
  Mat12 q_imu() const;
};

/// 15×15 covariance of (ξ_ω, ξ_p, ξ_v, b̃_ω, b̃_a).
struct ErrorCovariance {
  Mat15 P = Mat15::Zero();

  /// Throws SingularCovariance if asymmetric beyond 1e-10 or an eigenvalue
  /// is below −1e-9.
  void check() const;
};

/// Mean propagation with bias-corrected inputs held constant over dt. The
/// closed form integrates the kinematics exactly for constant body inputs:
///   R ← R exp(ω dt)
///   v ← v + R J(ω dt) a dt + g dt
///   p ← p + v dt + R N(ω dt) a dt² + ½ g dt²,  N(φ) = Σ φ^k/(k+2)!
ImuState propagate_mean(const ImuState& state, const ImuMeasurement& meas, double dt,
                        const Vec3& gravity = Vec3(0.0, 0.0, -9.81));

/// Continuous-time log-error dynamics A (9×9); gravity enters through ad(v_g).
Mat9 imu_a_matrix(const Vec3& gravity);
/// B (9×6) mapping (gyro, accel) input errors into the log error.
Mat9x6 imu_b_matrix(const ImuState& state);

struct ErrorJacobians {
  Mat15 F;
  Mat15x12 G;
};

/// F = [[A, −J_δ⁻¹B], [0, 0]], G = [[J_δ⁻¹B, 0], [0, I₆]] with J_δ⁻¹ = I when
/// `xi_delta` is empty. Throws SingularJacobian for ‖ω(ξ_δ)‖ near 2kπ.
ErrorJacobians error_jacobians(const ImuState& state, const Vec3& gravity,
                               const std::optional<SEnTangent>& xi_delta = std::nullopt);

/// P ← Φ P Φᵀ + Q_d over dt for Ṗ = FP + PFᵀ + GQGᵀ, with Φ and Q_d from the
/// block exponential. Throws NonPositiveDt.
ErrorCovariance propagate_covariance(const ErrorCovariance& P, const Mat15& F,
                                     const Mat15x12& G, const Mat12& Q, double dt);

/// ξ_δ with ω ~ U(−r, r)³ and zero translation parts. r = 0 returns zero
/// without consuming the stream. Throws NegativeRange.
SEnTangent sample_imitating_error(double r, std::mt19937_64& rng);

/// `t,wx,wy,wz,ax,ay,az` with strictly increasing t.
std::vector<ImuMeasurement> read_imu_csv(const std::string& path);
void write_imu_csv(const std::string& path, const std::vector<ImuMeasurement>& stream);

}  // namespace iekf
