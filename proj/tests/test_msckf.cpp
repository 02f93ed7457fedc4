#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "iekf/camera.hpp"
#include "iekf/msckf.hpp"
#include "iekf/observability.hpp"
#include "iekf/oracles.hpp"
#include "test_util.hpp"

using namespace iekf;
using iekf::testing::random_rotation;
using iekf::testing::random_vec;

namespace {

const Vec3 kGravity(0.0, 0.0, -9.81);

CameraModel unit_camera(ProjectionMode mode) {
  CameraModel m;
  m.mode = mode;
  return m;
}

CameraModel skewed_camera(ProjectionMode mode) {
  CameraModel m = CameraModel::default_model();
  m.K(0, 1) = 3.0;
  m.mode = mode;
  return m;
}

// A clone with a random pose and a landmark a few metres in front of its camera.
struct CloneCase {
  ClonePose clone;
  Vec3 f;
};

CloneCase random_case(std::mt19937_64& rng, const Extrinsics& ext) {
  CloneCase c;
  c.clone.R = random_rotation(rng);
  c.clone.p = random_vec(rng, 3, 3.0);
  c.clone.R_fej = c.clone.R;
  c.clone.p_fej = c.clone.p;
  const CameraPose cam = camera_pose(c.clone.R, c.clone.p, ext);
  const Vec3 x(0.3 * random_vec(rng, 1)(0), 0.3 * random_vec(rng, 1)(0), 4.0 + std::abs(random_vec(rng, 1)(0)));
  c.f = cam.R * x + cam.p;
  return c;
}

ClonePose perturb_clone(FilterKind kind, ClonePose c, const VecX& d) {
  const Vec3 th = d.head<3>();
  const Vec3 rho = d.tail<3>();
  if (kind == FilterKind::IEKF || kind == FilterKind::IJ_IEKF) {
    const SEnElement dx = exp(SEnTangent(1, VecX(d)));
    c.R = Rotation::unchecked(dx.R() * c.R.matrix());
    c.p = dx.R() * c.p + dx.column(0);
  } else if (kind == FilterKind::QEKF) {
    c.R = Rotation::unchecked(c.R.matrix() * so3_exp(th));
    c.p += rho;
  } else {
    c.R = Rotation::unchecked(so3_exp(th) * c.R.matrix());
    c.p += rho;
  }
  return c;
}

const std::vector<FilterKind> kKinds = {FilterKind::EKF, FilterKind::QEKF, FilterKind::FEJ,
                                        FilterKind::IEKF, FilterKind::IJ_IEKF};

}  // namespace

TEST(Camera, PoseComposition) {
  const Extrinsics id{};
  std::mt19937_64 rng(1);
  const Rotation R = random_rotation(rng);
  const Vec3 p = random_vec(rng, 3);
  const CameraPose a = camera_pose(R, p, id);
  EXPECT_EQ(a.R, R.matrix());
  EXPECT_EQ(a.p, p);

  const Extrinsics ext = Extrinsics::default_extrinsics();
  const CameraPose b = camera_pose(Rotation(), Vec3::Zero(), ext);
  EXPECT_EQ(b.R, ext.R_IC.matrix());
  EXPECT_EQ(b.p, ext.p_IC);

  for (int i = 0; i < 20; ++i) {
    const Extrinsics e{random_rotation(rng), random_vec(rng, 3)};
    const Rotation Ri = random_rotation(rng);
    const Vec3 pi = random_vec(rng, 3);
    const CameraPose c = camera_pose(Ri, pi, e);
    const Mat3 R_back = c.R * e.R_IC.matrix().transpose();
    const Vec3 p_back = c.p - R_back * e.p_IC;
    EXPECT_LT((R_back - Ri.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((p_back - pi).norm(), 1e-12);
  }
}

TEST(Camera, ProjectionExamples) {
  const CameraModel bearing = unit_camera(ProjectionMode::Bearing);
  const CameraModel pinhole = unit_camera(ProjectionMode::Pinhole);
  const CameraPose origin;
  for (double range : {0.5, 3.0, 100.0}) {
    EXPECT_EQ(project(origin, Vec3(0, 0, range), bearing), Vec2::Zero());
  }
  const Vec2 b = project(origin, Vec3(1, 0, 1), bearing);
  EXPECT_NEAR(b.x(), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(b.y(), 0.0);
  const Vec3 homog = Vec3(1, 0, 1).normalized();
  EXPECT_NEAR(homog.x() / homog.z(), project(origin, Vec3(1, 0, 1), pinhole).x(), 1e-15);
  EXPECT_EQ(project(origin, Vec3(1, 0, 1), pinhole), Vec2(1, 0));
  try {
    project(origin, Vec3(0, 0, -1), pinhole);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
  }
  try {
    project(origin, Vec3::Zero(), bearing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroRange);
  }
}

TEST(Camera, ProjectionJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (auto mode : {ProjectionMode::Bearing, ProjectionMode::Pinhole}) {
    const CameraModel model = skewed_camera(mode);
    for (int i = 0; i < 100; ++i) {
      const Vec3 x = Vec3(random_vec(rng, 3)) + Vec3(0, 0, 4);
      Mat23 J;
      project_camera_frame(x, model, &J);
      const MatX fd = oracle::numerical_jacobian(
          [&](const VecX& y) { return VecX(project_camera_frame(Vec3(y), model)); }, x);
      EXPECT_LT((fd - MatX(J)).cwiseAbs().maxCoeff(), 1e-5);
      // Scale invariance: moving along the ray does not change the pixel.
      EXPECT_LT((J * x).norm(), 1e-9 * J.norm() * x.norm());
    }
  }
  Mat23 J;
  project_camera_frame(Vec3(0, 0, 2.5), unit_camera(ProjectionMode::Bearing), &J);
  EXPECT_EQ(J * Vec3(0, 0, 2.5), Vec2::Zero());
}

TEST(Camera, UnprojectInvertsProjection) {
  std::mt19937_64 rng(3);
  for (auto mode : {ProjectionMode::Bearing, ProjectionMode::Pinhole}) {
    const CameraModel model = skewed_camera(mode);
    for (int i = 0; i < 100; ++i) {
      const Vec3 x = Vec3(random_vec(rng, 3)) + Vec3(0, 0, 5);
      const Vec3 ray = unproject(project_camera_frame(x, model), model);
      EXPECT_LT((ray - x.normalized()).norm(), 1e-12);
    }
  }
}

TEST(Camera, DefaultModelVisibility) {
  const CameraModel m = CameraModel::default_model();
  EXPECT_NO_THROW(m.validate());
  EXPECT_TRUE(m.visible(Vec3(0, 0, 10)));
  EXPECT_FALSE(m.visible(Vec3(0, 0, -10)));
  EXPECT_FALSE(m.visible(Vec3(0, 0, 100)));
  EXPECT_FALSE(m.visible(Vec3(10, 0, 1)));
  CameraModel bad = m;
  bad.K(2, 0) = 0.1;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(MeasurementJacobians, CloneBlocksMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  const Extrinsics ext = Extrinsics::default_extrinsics();
  for (auto mode : {ProjectionMode::Bearing, ProjectionMode::Pinhole}) {
    const CameraModel model = skewed_camera(mode);
    for (FilterKind kind : kKinds) {
      for (int i = 0; i < 100; ++i) {
        const CloneCase c = random_case(rng, ext);
        const auto j = clone_measurement_jacobians(kind, c.clone, c.f, ext, model);
        const auto z = [&](const ClonePose& cl, const Vec3& f) {
          return VecX(project(camera_pose(cl.R, cl.p, ext), f, model));
        };
        const MatX fdX = oracle::numerical_jacobian(
            [&](const VecX& d) { return z(perturb_clone(kind, c.clone, d), c.f); }, VecX::Zero(6));
        const MatX fdf = oracle::numerical_jacobian(
            [&](const VecX& d) { return z(c.clone, c.f + Vec3(d)); }, VecX::Zero(3));
        // Pixel-scale Jacobians (f = 460) carry ~1e-7 relative FD error.
        const double scale = std::max(1.0, MatX(j.H_X).cwiseAbs().maxCoeff());
        EXPECT_LT((fdX - MatX(j.H_X)).cwiseAbs().maxCoeff() / scale, 1e-5);
        EXPECT_LT((fdf - MatX(j.H_f)).cwiseAbs().maxCoeff() / scale, 1e-5);
        EXPECT_EQ(MatX(j.H_f), MatX(-j.H_X.rightCols<3>()));
      }
    }
  }
}

TEST(MeasurementJacobians, FejUsesFirstEstimates) {
  std::mt19937_64 rng(5);
  const Extrinsics ext = Extrinsics::default_extrinsics();
  const CameraModel model = CameraModel::default_model();
  CloneCase c = random_case(rng, ext);
  const auto before = clone_measurement_jacobians(FilterKind::FEJ, c.clone, c.f, ext, model);
  c.clone.R = Rotation::exp(Vec3(0.01, 0.0, 0.0)) * c.clone.R;
  c.clone.p += Vec3(0.05, 0, 0);
  const auto after = clone_measurement_jacobians(FilterKind::FEJ, c.clone, c.f, ext, model);
  const auto ekf = clone_measurement_jacobians(FilterKind::EKF, c.clone, c.f, ext, model);
  EXPECT_EQ(before.H_X, after.H_X);
  EXPECT_NE(after.H_X, ekf.H_X);
  EXPECT_EQ(after.predicted, ekf.predicted);
}

TEST(MeasurementJacobians, FullStateLandmarkRowsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  const Extrinsics ext = Extrinsics::default_extrinsics();
  for (auto mode : {ProjectionMode::Bearing, ProjectionMode::Pinhole}) {
    const CameraModel model = skewed_camera(mode);
    for (FilterKind kind : kKinds) {
      for (int i = 0; i < 20; ++i) {
        const CloneCase c = random_case(rng, ext);
        ImuState s;
        s.R = c.clone.R;
        s.p = c.clone.p;
        s.v = random_vec(rng, 3);
        FilterInstance filter({kind, kind == FilterKind::IJ_IEKF ? 0.1 : 0.0}, s,
                              Mat15::Identity(), ImuNoiseSpec{}, 1);
        filter.add_landmark(c.f + Vec3(5, 0, 0), Mat3::Identity());
        filter.add_landmark(c.f, Mat3::Identity());
        const LinearMeasurement m = landmark_measurement(filter, 1, Vec2::Zero(), ext, model);
        // Perturb (θ, p, f) the way the variant applies increments.
        const auto z = [&](const VecX& d) {
          Vec3 f = c.f;
          ClonePose cl = c.clone;
          const Vec3 df = d.segment<3>(6);
          if (filter.variant().invariant()) {
            VecX xi(9);
            xi << d.head<6>(), df;
            const SEnElement dx = exp(SEnTangent(2, xi));
            cl.R = Rotation::unchecked(dx.R() * cl.R.matrix());
            cl.p = dx.R() * cl.p + dx.column(0);
            f = dx.R() * f + dx.column(1);
          } else {
            cl = perturb_clone(kind, cl, d.head<6>());
            f += df;
          }
          return VecX(project(camera_pose(cl.R, cl.p, ext), f, model));
        };
        const MatX fd = oracle::numerical_jacobian(z, VecX::Zero(9));
        MatX H(2, 9);
        H << m.H.block<2, 6>(0, 0), m.H.block<2, 3>(0, filter.landmark_offset(1));
        const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
        EXPECT_LT((fd - H).cwiseAbs().maxCoeff() / scale, 1e-5);
        EXPECT_TRUE((m.H.block<2, 3>(0, 6).isZero(0.0)));
        EXPECT_TRUE((m.H.block<2, 3>(0, filter.landmark_offset(0)).isZero(0.0)));
        if (filter.variant().invariant()) EXPECT_TRUE((m.H.block<2, 3>(0, 0).isZero(0.0)));
      }
    }
  }
}

namespace {

std::vector<CameraPose> orbit_poses(int n, double radius, const Vec3& target,
                                    const Extrinsics& ext) {
  std::vector<CameraPose> poses;
  for (int i = 0; i < n; ++i) {
    const double a = 0.05 * i;
    const Vec3 p(radius * std::cos(a), radius * std::sin(a), 0.0);
    // IMU x axis points at the target.
    const Vec3 x = (target - p).normalized();
    const Vec3 y = Vec3::UnitZ().cross(x).normalized();
    Mat3 R;
    R << x, y, x.cross(y);
    poses.push_back(camera_pose(Rotation(R), p, ext));
  }
  return poses;
}

}  // namespace

TEST(Triangulation, NoiseFreeThreePoses) {
  const Extrinsics ext = Extrinsics::default_extrinsics();
  for (auto mode : {ProjectionMode::Bearing, ProjectionMode::Pinhole}) {
    const CameraModel model = skewed_camera(mode);
    const Vec3 f(0.3, -0.2, 0.5);
    const auto poses = orbit_poses(3, 10.0, Vec3::Zero(), ext);
    std::vector<FeatureObservation> obs;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      obs.push_back({static_cast<long>(i), project(poses[i], f, model)});
    }
    EXPECT_LT((triangulate(obs, poses, model) - f).norm(), 1e-6);
  }
}

TEST(Triangulation, SinglePoseIsDegenerate) {
  const Extrinsics ext = Extrinsics::default_extrinsics();
  const CameraModel model = CameraModel::default_model();
  auto poses = orbit_poses(1, 10.0, Vec3::Zero(), ext);
  poses.push_back(poses.front());
  const Vec3 f(0.1, 0.1, 0.1);
  const std::vector<FeatureObservation> obs = {{0, project(poses[0], f, model)},
                                               {1, project(poses[1], f, model)}};
  try {
    triangulate(obs, poses, model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
  EXPECT_THROW(triangulate({obs[0]}, {poses[0]}, model), Error);
}

TEST(NullspaceProjection, AnnihilatesFeatureJacobian) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index m = 4 + 2 * (i % 10);
    const MatX Hf = random_vec(rng, 3 * m).reshaped(m, 3);
    const MatX HX = random_vec(rng, 12 * m).reshaped(m, 12);
    const MatX N = 2.0 * MatX::Identity(m, m);
    const ProjectedResidual p = nullspace_project(HX, Hf, random_vec(rng, m), N);
    EXPECT_EQ(p.r.size(), m - 3);
    const Eigen::HouseholderQR<MatX> qr(Hf);
    const MatX Q2 = MatX(qr.householderQ()).rightCols(m - 3);
    EXPECT_LT((Q2.transpose() * Hf).norm(), 1e-10);
    EXPECT_LT((p.H - Q2.transpose() * HX).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(p.N, MatX(p.N.transpose()));
    EXPECT_LT((p.N - 2.0 * MatX::Identity(m - 3, m - 3)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(NullspaceProjection, MinimalAndDegenerateTracks) {
  std::mt19937_64 rng(8);
  const MatX Hf = random_vec(rng, 9).reshaped(3, 3);
  const ProjectedResidual p =
      nullspace_project(MatX::Ones(3, 6), Hf, VecX::Ones(3), MatX::Identity(3, 3));
  EXPECT_EQ(p.r.size(), 0);
  EXPECT_EQ(p.H.rows(), 0);
  MatX rank2 = random_vec(rng, 18).reshaped(6, 3);
  rank2.col(2) = rank2.col(0) - rank2.col(1);
  EXPECT_THROW(nullspace_project(MatX::Ones(6, 6), rank2, VecX::Ones(6), MatX::Identity(6, 6)),
               Error);
}

namespace {

// Straight-line flight along +x at 1 m/s past a wall of landmarks 15 m ahead.
struct LineScene {
  Extrinsics ext = Extrinsics::default_extrinsics();
  CameraModel model = CameraModel::default_model();
  std::vector<Vec3> landmarks;
  LineScene() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 60; ++i) landmarks.emplace_back(15.0 + 0.5 * u(rng), u(rng), 0.5 * u(rng));
  }
  ImuState truth(double t) const {
    ImuState s;
    s.v = Vec3(1.0, 0.0, 0.0);
    s.p = s.v * t;
    return s;
  }
  std::vector<std::pair<long, Vec2>> features(const ClonePose& pose) const {
    const CameraPose cam = camera_pose(pose.R, pose.p, ext);
    std::vector<std::pair<long, Vec2>> out;
    for (std::size_t j = 0; j < landmarks.size(); ++j) {
      const Vec3 x = cam.to_camera(landmarks[j]);
      if (model.visible(x)) out.emplace_back(static_cast<long>(j), project_camera_frame(x, model));
    }
    return out;
  }
};

FilterInstance line_filter(FilterKind kind) {
  LineScene scene;
  Mat15 P0 = Mat15::Zero();
  P0.diagonal() << Vec3::Constant(1e-4), Vec3::Constant(0.01), Vec3::Constant(1e-3),
      Vec3::Constant(1e-6), Vec3::Constant(1e-4);
  const ImuState s0 = scene.truth(0.0);
  return FilterInstance({kind, 0.0}, s0, covariance_in_variant({kind, 0.0}, s0, P0), ImuNoiseSpec{}, 1);
}

}  // namespace

TEST(Msckf, NoMatureTracksLeavesStateUnchanged) {
  LineScene scene;
  FilterInstance f = line_filter(FilterKind::IEKF);
  f.augment_clone(0.0, 0);
  const MatX P = f.cov();
  const ImuState m = f.mean();
  msckf_update(f, {}, scene.ext, scene.model, MsckfOptions{});
  EXPECT_EQ(f.cov(), P);
  EXPECT_EQ(f.mean().p, m.p);
}

TEST(Msckf, NoiseFreeUpdateShrinksPositionCovariance) {
  LineScene scene;
  for (FilterKind kind : kKinds) {
    FilterInstance f = line_filter(kind);
    std::vector<FeatureTrack> tracks(scene.landmarks.size());
    for (std::size_t j = 0; j < tracks.size(); ++j) tracks[j].id = static_cast<long>(j);
    const ImuMeasurement imu{0.0, Vec3::Zero(), -kGravity};
    for (long k = 0; k < 6; ++k) {
      if (k) for (int i = 0; i < 20; ++i) f.predict(imu, 0.005);
      f.augment_clone(0.1 * k, k);
      for (const auto& [id, uv] : scene.features(f.clones().back())) tracks[id].obs.push_back({k, uv});
    }
    const double before = f.cov().block<3, 3>(3, 3).trace();
    MsckfStats stats;
    msckf_update(f, tracks, scene.ext, scene.model, MsckfOptions{}, &stats);
    EXPECT_GT(stats.used, 10u);
    EXPECT_EQ(stats.rejected_gate, 0u);
    EXPECT_LT(f.cov().block(3, 3, 3, 3).trace(), before);
    // Exact model and truth-valued mean: nothing to correct.
    EXPECT_LT((f.mean().p - scene.truth(0.5).p).norm(), 1e-6);
  }
}

TEST(Msckf, ProjectedResidualOfNoiseFreeTrackVanishes) {
  LineScene scene;
  FilterInstance f = line_filter(FilterKind::IEKF);
  FeatureTrack track;
  const ImuMeasurement imu{0.0, Vec3::Zero(), -kGravity};
  for (long k = 0; k < 5; ++k) {
    if (k) for (int i = 0; i < 20; ++i) f.predict(imu, 0.005);
    f.augment_clone(0.1 * k, k);
    for (const auto& [id, uv] : scene.features(f.clones().back())) {
      if (id == 3) track.obs.push_back({k, uv});
    }
  }
  ASSERT_EQ(track.obs.size(), 5u);
  MsckfStats stats;
  const auto blocks = track_residuals(f, {track}, scene.ext, scene.model, MsckfOptions{}, &stats);
  ASSERT_EQ(blocks.front().r.size(), 7);
  EXPECT_LT(blocks.front().r.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Msckf, ParallelKernelMatchesSerialBitwise) {
  LineScene scene;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> px(0.0, 1.0);
  FilterInstance a = line_filter(FilterKind::EKF);
  const ImuMeasurement imu{0.0, Vec3(0.01, 0.0, 0.0), -kGravity};
  std::vector<FeatureTrack> tracks(scene.landmarks.size());
  for (long k = 0; k < 8; ++k) {
    if (k) for (int i = 0; i < 20; ++i) a.predict(imu, 0.005);
    a.augment_clone(0.1 * k, k);
    for (const auto& [id, uv] : scene.features(a.clones().back())) {
      tracks[id].id = id;
      tracks[id].obs.push_back({k, uv + Vec2(px(rng), px(rng))});
    }
  }
  FilterInstance b = a;
  MsckfOptions par;
  MsckfOptions ser;
  ser.parallel = false;
  msckf_update(a, tracks, scene.ext, scene.model, par);
  msckf_update(b, tracks, scene.ext, scene.model, ser);
  EXPECT_EQ(a.cov(), b.cov());
  EXPECT_EQ(a.mean().p, b.mean().p);
}

TEST(Msckf, EstimatorHonoursWindowAndFeatureCap) {
  LineScene scene;
  MsckfOptions opts;
  opts.max_features = 5;
  MsckfEstimator est(line_filter(FilterKind::IEKF), scene.ext, scene.model, opts);
  const ImuMeasurement imu{0.0, Vec3::Zero(), -kGravity};
  for (long k = 0; k < 30; ++k) {
    if (k) for (int i = 0; i < 20; ++i) est.propagate(imu, 0.005);
    ClonePose now;
    now.R = est.filter().mean().R;
    now.p = est.filter().mean().p;
    est.process_frame(0.1 * k, k, scene.features(now));
    EXPECT_LE(est.filter().clones().size(), opts.max_clones);
    EXPECT_LE(est.last_stats().mature, opts.max_features);
    EXPECT_EQ(est.filter().dim(), 15 + 6 * static_cast<Eigen::Index>(est.filter().clones().size()));
  }
  EXPECT_EQ(est.filter().clones().size(), opts.max_clones);
  EXPECT_LT((est.filter().mean().p - scene.truth(2.9).p).norm(), 1e-6);
}

TEST(Observability, RankStructure) {
  const auto one = observability_matrix(0.1, 1, kGravity);
  EXPECT_EQ(one.rank, 3);
  EXPECT_EQ(observability_matrix(0.1, 2, kGravity).nullspace_dim, 6);
  const int truth = observability_matrix(0.1, 4, kGravity).nullspace_dim;
  EXPECT_EQ(truth, 4);
  for (double dt : {0.01, 0.1, 1.0}) {
    for (int k = 4; k <= 10; ++k) {
      const auto o = observability_matrix(dt, k, kGravity);
      EXPECT_EQ(o.nullspace_dim, truth) << dt << " " << k;
      EXPECT_LT((o.O * o.nullspace).norm(), 1e-9 * o.singular_values(0));
    }
  }
  const Eigen::JacobiSVD<MatX> g(MatX(skew(kGravity)));
  EXPECT_LT(g.singularValues()(2), 1e-12);
  const MatX first = observability_matrix(0.1, 6, kGravity).O.leftCols(3);
  EXPECT_LE(Eigen::FullPivLU<MatX>(first).rank(), 2);
  EXPECT_THROW(observability_matrix(0.1, 0, kGravity), Error);
}

TEST(Observability, NullspaceIsTranslationPlusYaw) {
  const auto o = observability_matrix(0.1, 6, kGravity);
  // Common translation of (p, f) and rotation about gravity.
  MatX expected = MatX::Zero(12, 4);
  expected.block<3, 3>(3, 0).setIdentity();
  expected.block<3, 3>(9, 0).setIdentity();
  expected.block<3, 1>(0, 3) = kGravity.normalized();
  // A 1/2 gθ^ dt²-type v shift is absent because g × g = 0.
  const MatX proj = o.nullspace * o.nullspace.transpose() * expected;
  EXPECT_LT((proj - expected).norm(), 1e-10);
}

TEST(TrackCsv, Roundtrip) {
  const std::vector<TrackRecord> rows = {{1, 0, 0.0, Vec2(10.5, 20.25)}, {2, 3, 0.15, Vec2(-1e-3, 479.0)}};
  const auto back = read_tracks_csv(write_tracks_csv(rows));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].feature_id, 2);
  EXPECT_EQ(back[1].frame, 3);
  EXPECT_EQ(back[1].t, 0.15);
  EXPECT_EQ(back[1].uv, rows[1].uv);
  EXPECT_THROW(read_tracks_csv("id,frame\n"), Error);
}
