#pragma once

#include <vector>

#include "iekf/filter_bank.hpp"
#include "iekf/so3.hpp"

namespace iekf {

using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;

/// Bearing: π(x) = first two entries of K x/‖x‖ (dividing K x/‖x‖ by its
/// third entry gives back the pinhole pixel). Pinhole: π(x) = (K x)₀₁/x₂.
enum class ProjectionMode { Bearing, Pinhole };

struct CameraModel {
  Mat3 K = Mat3::Identity();
  ProjectionMode mode = ProjectionMode::Pinhole;
  int width = 752;
  int height = 480;
  double sigma_px = 1.0;
  double max_range = 60.0;

  /// Throws InvalidArgument unless K is upper triangular and invertible.
  void validate() const;
  /// 752×480, f = 460 px, principal point at the image centre.
  static CameraModel default_model();
  /// True when a camera-frame point lands in front of the camera, inside the
  /// image and within max_range.
  bool visible(const Vec3& x_cam) const;
};

/// IMU-from-camera transform X_I^C.
struct Extrinsics {
  Rotation R_IC;
  Vec3 p_IC = Vec3::Zero();

  /// Camera looking along the IMU x axis, 10 cm ahead of the IMU.
  static Extrinsics default_extrinsics();
};

/// World-from-camera pose.
struct CameraPose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  Vec3 to_camera(const Vec3& f) const { return R.transpose() * (f - p); }
};

CameraPose camera_pose(const Rotation& R, const Vec3& p, const Extrinsics& ext);

/// Projection of a camera-frame point; `jac` receives ∂π/∂x. Throws
/// BehindCamera (pinhole, x₂ ≤ 0) or ZeroRange (bearing, x = 0).
Vec2 project_camera_frame(const Vec3& x, const CameraModel& model, Mat23* jac = nullptr);
Vec2 project(const CameraPose& cam, const Vec3& f, const CameraModel& model);

/// Unit ray in the camera frame that projects to `uv`.
Vec3 unproject(const Vec2& uv, const CameraModel& model);

struct FeatureObservation {
  long frame = 0;
  Vec2 uv = Vec2::Zero();
};

struct FeatureTrack {
  long id = 0;
  std::vector<FeatureObservation> obs;
  double sigma_px = 1.0;
};

struct TriangulationOptions {
  int max_iterations = 20;
  double step_tolerance = 1e-8;
  double min_baseline = 1e-3;
};

/// Gauss–Newton on the reprojection residuals from a linear (ray midpoint)
/// initializer. `poses[i]` is the camera that produced `obs[i]`. Throws
/// DegenerateGeometry or Diverged.
Vec3 triangulate(const std::vector<FeatureObservation>& obs, const std::vector<CameraPose>& poses,
                 const CameraModel& model, const TriangulationOptions& opts = {});

/// Predicted pixel and its Jacobians with respect to the variant's clone error
/// (θ, p) and an additive landmark perturbation.
struct CloneMeasurementJacobians {
  Vec2 predicted;
  Mat26 H_X;
  Mat23 H_f;
};

CloneMeasurementJacobians clone_measurement_jacobians(FilterKind kind, const ClonePose& clone,
                                                      const Vec3& f, const Extrinsics& ext,
                                                      const CameraModel& model);

/// Observation of the in-state landmark `j` by the current IMU pose (full-state
/// VINS). Returns the 2-row measurement against the whole state.
LinearMeasurement landmark_measurement(const FilterInstance& filter, std::size_t j, const Vec2& z,
                                       const Extrinsics& ext, const CameraModel& model);

}  // namespace iekf
