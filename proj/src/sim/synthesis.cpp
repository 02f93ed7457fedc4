#include <algorithm>
#include <cmath>

#include "iekf/sim.hpp"

namespace iekf {

ImuStream synthesize_imu(const Scenario& s, std::mt19937_64& rng) {
  const TrajectorySpec& spec = s.trajectory;
  spec.validate();
  const long n = spec.imu_steps();
  ImuStream out;
  out.dt = 1.0 / spec.imu_rate;
  const double dt = out.dt;
  out.meas.reserve(static_cast<std::size_t>(n));
  out.truth.reserve(static_cast<std::size_t>(n + 1));

  const TruthSample t0 = truth_kinematics(spec, 0.0);
  ImuState x;  // bias-free kinematic truth
  x.R = t0.R;
  x.p = t0.p;
  x.v = t0.v;
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto draw = [&](double sigma) {
    Vec3 w;
    for (int i = 0; i < 3; ++i) w(i) = normal(rng);
    return Vec3(sigma * w);
  };
  const double sg = s.noise.sigma_gw / std::sqrt(dt);
  const double sa = s.noise.sigma_aw / std::sqrt(dt);
  const double sgb = s.noise.sigma_gbw * std::sqrt(dt);
  const double sab = s.noise.sigma_abw * std::sqrt(dt);

  for (long k = 0; k < n; ++k) {
    ImuState truth = x;
    truth.b_omega = bg;
    truth.b_a = ba;
    out.truth.push_back(truth);

    const double tk = k * dt;
    const TruthSample mid = truth_kinematics(spec, std::min(tk + 0.5 * dt, spec.duration));
    const ImuMeasurement exact{tk, mid.omega, mid.R.matrix().transpose() * (mid.a - s.noise.gravity)};
    x = propagate_mean(x, exact, dt, s.noise.gravity);

    ImuMeasurement m = exact;
    m.omega_m += bg + draw(sg);
    m.a_m += ba + draw(sa);
    out.meas.push_back(m);
    bg += draw(sgb);
    ba += draw(sab);
  }
  ImuState last = x;
  last.b_omega = bg;
  last.b_a = ba;
  out.truth.push_back(last);
  return out;
}

std::vector<CameraFrame> synthesize_camera(const Scenario& s, const ImuStream& imu,
                                           std::mt19937_64& rng) {
  const long per = s.trajectory.imu_per_frame();
  const long steps = static_cast<long>(imu.truth.size()) - 1;
  std::normal_distribution<double> normal(0.0, s.pixel_noise);
  std::vector<CameraFrame> frames;
  for (long k = per, index = 0; k <= steps; k += per, ++index) {
    CameraFrame f;
    f.index = index;
    f.imu_step = k;
    f.t = k * imu.dt;
    const ImuState& x = imu.truth[static_cast<std::size_t>(k)];
    const CameraPose cam = camera_pose(x.R, x.p, s.extrinsics);
    std::vector<std::pair<double, long>> visible;
    for (std::size_t j = 0; j < s.landmarks.size(); ++j) {
      const Vec3 xc = cam.to_camera(s.landmarks[j]);
      if (s.camera.visible(xc)) visible.emplace_back(xc.norm(), static_cast<long>(j));
    }
    std::sort(visible.begin(), visible.end());
    if (visible.size() > s.msckf.max_features) visible.resize(s.msckf.max_features);
    std::sort(visible.begin(), visible.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [range, j] : visible) {
      Vec2 uv = project_camera_frame(cam.to_camera(s.landmarks[static_cast<std::size_t>(j)]), s.camera);
      if (s.pixel_noise > 0.0) {
        uv.x() += normal(rng);
        uv.y() += normal(rng);
      }
      f.features.emplace_back(j, uv);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace iekf
