#pragma once

#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "iekf/common.hpp"
#include "iekf/imu_model.hpp"

namespace iekf {

enum class FilterKind { EKF, QEKF, FEJ, IEKF, IJ_IEKF };

struct FilterVariant {
  FilterKind kind = FilterKind::IEKF;
  double r = 0.0;  // imitation range, IJ_IEKF only

  /// Throws InvalidArgument for r < 0, or r ≠ 0 on a non-IJ variant.
  void validate() const;
  bool invariant() const { return kind == FilterKind::IEKF || kind == FilterKind::IJ_IEKF; }
  /// "EKF", "IEKF", "IJIEKF-0.1", …
  std::string label() const;
  /// Inverse of label(); accepts "IJIEKF-<r>" and "IJ_IEKF".
  static FilterVariant parse(const std::string& text);
};

/// Error-state coordinates of a variant. Increments δ are applied as
///   invariant: X̂ ← exp(δ)X̂ on SE_{2+L}(3), clones on SE(3); biases additive
///   EKF/FEJ:   R̂ ← exp(δθ)R̂ (world frame); everything else additive
///   QEKF:      R̂ ← R̂ exp(δθ) (body frame); everything else additive
/// and the covariance describes δ. Layout:
///   [ θ(3) p(3) v(3) b_ω(3) b_a(3) | landmarks 3·L | clones (θ, p) 6·C ]
inline constexpr int kImuDim = 15;

struct ClonePose {
  double t = 0.0;
  long frame = 0;
  Rotation R;
  Vec3 p = Vec3::Zero();
  Rotation R_fej;  // first estimate, used by FEJ Jacobians
  Vec3 p_fej = Vec3::Zero();
};

struct LinearMeasurement {
  VecX residual;  // z − ẑ
  MatX H;         // ∂ẑ/∂δ
  MatX N;
};

struct NeesValue {
  double pos = 0.0;      // DOF-normalized, native error convention of the variant
  double ang = 0.0;
  double pos_alt = 0.0;  // position NEES under the other convention
};

struct KalmanStep {
  VecX delta;  // K z̃
  MatX P;      // (I − KH)P, symmetrized
  MatX K;
};

/// One linear update. Throws DimensionMismatch, or SingularInnovation when
/// S = HPHᵀ + N is not positive definite or its condition number exceeds 1e12.
KalmanStep kalman_update(const MatX& P, const LinearMeasurement& m);

/// Variant-specific continuous-time error dynamics of the IMU block.
ErrorJacobians variant_jacobians(const FilterVariant& variant, const ImuState& state,
                                 const ImuMeasurement& meas, const Vec3& gravity,
                                 const std::optional<SEnTangent>& xi_delta = std::nullopt);

/// Maps a covariance given in world-frame additive coordinates (δθ, δp, δv,
/// δb) into the variant's coordinates at `state`.
Mat15 covariance_in_variant(const FilterVariant& variant, const ImuState& state, const Mat15& P);

class FilterInstance {
 public:
  FilterInstance(const FilterVariant& variant, const ImuState& mean, const Mat15& P0,
                 const ImuNoiseSpec& noise, std::uint64_t seed);

  /// Mean and covariance over dt with inputs `meas`. Throws NonPositiveDt.
  void predict(const ImuMeasurement& meas, double dt);

  /// K = PHᵀS⁻¹, δ = K z̃, P ← P − K H P (symmetrized). Throws DimensionMismatch
  /// or SingularInnovation (cond S > 1e12), leaving the filter untouched.
  void update(const LinearMeasurement& m);

  /// Appends a clone of the current IMU pose (R, p).
  void augment_clone(double t, long frame);
  /// Drops the clone at `index` (rows/columns removed).
  void marginalize_clone(std::size_t index);
  /// Appends a landmark with the given cross-free covariance block.
  void add_landmark(const Vec3& f, const Mat3& cov);

  const FilterVariant& variant() const { return variant_; }
  const ImuState& mean() const { return mean_; }
  const MatX& cov() const { return P_; }
  Eigen::Index dim() const { return P_.rows(); }
  const std::vector<Vec3>& landmarks() const { return landmarks_; }
  const std::deque<ClonePose>& clones() const { return clones_; }
  Eigen::Index landmark_offset(std::size_t j) const { return kImuDim + 3 * static_cast<Eigen::Index>(j); }
  Eigen::Index clone_offset(std::size_t i) const;
  const ImuNoiseSpec& noise() const { return noise_; }
  std::mt19937_64& rng() { return rng_; }

  /// NEES against truth; throws SingularCovariance for a block determinant < 1e-30.
  NeesValue nees(const ImuState& truth) const;

 private:
  void apply_increment(const VecX& delta);

  FilterVariant variant_;
  ImuState mean_;
  MatX P_;
  ImuNoiseSpec noise_;
  std::mt19937_64 rng_;
  std::vector<Vec3> landmarks_;
  std::deque<ClonePose> clones_;
  Vec3 fej_p_;
  Vec3 fej_v_;
};

/// Estimation errors under each convention: rotation error, position error.
struct PoseError {
  Vec3 ang;        // log(R̂Rᵀ) (world) or log(RᵀR̂) (QEKF, body)
  Vec3 pos;        // native position error
  Vec3 pos_alt;    // alternate convention
  Vec3 pos_plain;  // p̂ − p, used for RMSE
};
PoseError pose_error(const FilterVariant& variant, const ImuState& est, const ImuState& truth);

/// DOF-normalized eᵀP⁻¹e/3 for a 3×3 block.
double nees3(const Vec3& e, const Mat3& P);

/// `t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,bgx,bgy,bgz,bax,bay,baz,trace_P_pos,trace_P_ang`
std::string snapshot_csv_header();
std::string snapshot_csv_row(double t, const FilterInstance& f);

}  // namespace iekf
