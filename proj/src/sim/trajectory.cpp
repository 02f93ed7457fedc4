#include <cmath>

#include "iekf/sim.hpp"

namespace iekf {

void TrajectorySpec::validate() const {
  if (!(duration > 0.0) || !(imu_rate > 0.0) || !(cam_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "trajectory duration and rates must be positive");
  }
  const double ratio = imu_rate / cam_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw Error(ErrorCode::InvalidArgument, "imu_rate must be an integer multiple of cam_rate");
  }
}

long TrajectorySpec::imu_steps() const { return std::lround(duration * imu_rate); }

long TrajectorySpec::imu_per_frame() const { return std::lround(imu_rate / cam_rate); }

TruthSample truth_kinematics(const TrajectorySpec& spec, double t) {
  if (!(t >= 0.0 && t <= spec.duration + 1e-9)) {
    throw Error(ErrorCode::OutOfDomain, "t = " + std::to_string(t) + " outside the trajectory");
  }
  TruthSample s;
  switch (spec.kind) {
    case TrajectoryKind::Lissajous:
      s.p = Vec3(50.0 * std::cos(0.075 * t), 40.0 * std::sin(0.05 * t), 20.0 * std::sin(0.05 * t + 1.0));
      s.v = Vec3(-3.75 * std::sin(0.075 * t), 2.0 * std::cos(0.05 * t), std::cos(0.05 * t + 1.0));
      s.a = Vec3(-0.28125 * std::cos(0.075 * t), -0.1 * std::sin(0.05 * t),
                 -0.05 * std::sin(0.05 * t + 1.0));
      break;
    case TrajectoryKind::Line:
      s.p = spec.origin + spec.velocity * t;
      s.v = spec.velocity;
      s.a = Vec3::Zero();
      break;
    case TrajectoryKind::Static:
      s.p = spec.origin;
      s.v = Vec3::Zero();
      s.a = Vec3::Zero();
      break;
  }
  s.omega = Vec3::Zero();
  if (spec.attitude == AttitudePolicy::YawFollowsVelocity) {
    const double h2 = s.v.x() * s.v.x() + s.v.y() * s.v.y();
    if (!(h2 > 1e-12)) throw Error(ErrorCode::OutOfDomain, "yaw undefined at zero horizontal speed");
    const double yaw = std::atan2(s.v.y(), s.v.x());
    s.R = Rotation::exp(Vec3(0.0, 0.0, yaw));
    s.omega.z() = (s.v.x() * s.a.y() - s.v.y() * s.a.x()) / h2;
  }
  return s;
}

std::vector<Vec3> generate_landmarks(const LandmarkSpec& spec, std::uint64_t seed) {
  if (spec.count < 0 || !(spec.box_max.array() > spec.box_min.array()).all()) {
    throw Error(ErrorCode::InvalidArgument, "landmark box must be non-empty");
  }
  std::mt19937_64 rng(derive_seed(seed, 0x6c616e64));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    Vec3 x;
    for (int k = 0; k < 3; ++k) x(k) = spec.box_min(k) + u(rng) * (spec.box_max(k) - spec.box_min(k));
    out.push_back(x);
  }
  return out;
}

Mat15 InitSpec::covariance() const {
  Mat15 P = Mat15::Zero();
  P.diagonal() << Vec3::Constant(sigma_theta * sigma_theta), Vec3::Constant(sigma_p * sigma_p),
      Vec3::Constant(sigma_v * sigma_v), Vec3::Constant(sigma_bg * sigma_bg),
      Vec3::Constant(sigma_ba * sigma_ba);
  return P;
}

void Scenario::finalize() {
  trajectory.validate();
  camera.validate();
  noise.validate(true);
  if (landmarks.empty()) landmarks = generate_landmarks(landmark_spec, seed);
}

}  // namespace iekf
