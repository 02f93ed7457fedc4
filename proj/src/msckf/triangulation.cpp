#include <cmath>

#include <Eigen/Eigenvalues>

#include "iekf/camera.hpp"

namespace iekf {

Vec3 triangulate(const std::vector<FeatureObservation>& obs, const std::vector<CameraPose>& poses,
                 const CameraModel& model, const TriangulationOptions& opts) {
  if (obs.size() != poses.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one camera pose per observation required");
  }
  if (obs.size() < 2) throw Error(ErrorCode::DegenerateGeometry, "fewer than two observations");
  double baseline = 0.0;
  for (const auto& c : poses) baseline = std::max(baseline, (c.p - poses.front().p).norm());
  if (baseline < opts.min_baseline) {
    throw Error(ErrorCode::DegenerateGeometry, "baseline below " + std::to_string(opts.min_baseline));
  }

  // Point closest to all rays.
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Vec3 d = poses[i].R * unproject(obs[i].uv, model);
    const Mat3 proj = Mat3::Identity() - d * d.transpose();
    A += proj;
    b += proj * poses[i].p;
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(A);
  if (!(eig.eigenvalues()(0) > 1e-8 * eig.eigenvalues()(2))) {
    throw Error(ErrorCode::DegenerateGeometry, "rays are parallel");
  }
  Vec3 f = eig.eigenvectors() * (eig.eigenvectors().transpose() * b).cwiseQuotient(eig.eigenvalues());

  try {
    for (int it = 0; it < opts.max_iterations; ++it) {
      Mat3 JtJ = Mat3::Zero();
      Vec3 Jtr = Vec3::Zero();
      for (std::size_t i = 0; i < obs.size(); ++i) {
        Mat23 dpi;
        const Vec2 r = obs[i].uv - project_camera_frame(poses[i].to_camera(f), model, &dpi);
        const Mat23 J = dpi * poses[i].R.transpose();
        JtJ += J.transpose() * J;
        Jtr += J.transpose() * r;
      }
      const Eigen::SelfAdjointEigenSolver<Mat3> ne(JtJ);
      if (!(ne.eigenvalues()(0) > 1e-12 * ne.eigenvalues()(2))) {
        throw Error(ErrorCode::DegenerateGeometry, "rank-deficient normal equations");
      }
      const Vec3 step = ne.eigenvectors() *
                        (ne.eigenvectors().transpose() * Jtr).cwiseQuotient(ne.eigenvalues());
      f += step;
      if (!f.allFinite()) throw Error(ErrorCode::Diverged, "non-finite landmark estimate");
      if (step.norm() < opts.step_tolerance) break;
    }
    for (const auto& c : poses) project_camera_frame(c.to_camera(f), model);
    if (model.mode == ProjectionMode::Bearing) {
      for (const auto& c : poses) {
        if (!(c.to_camera(f).z() > 0.0)) throw Error(ErrorCode::BehindCamera, "");
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BehindCamera || e.code() == ErrorCode::ZeroRange) {
      throw Error(ErrorCode::Diverged, "Gauss-Newton moved the landmark behind a camera");
    }
    throw;
  }
  return f;
}

}  // namespace iekf
