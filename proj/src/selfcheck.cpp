#include "iekf/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "iekf/camera.hpp"
#include "iekf/error_propagation.hpp"
#include "iekf/filter_bank.hpp"
#include "iekf/imu_model.hpp"
#include "iekf/observability.hpp"
#include "iekf/oracles.hpp"
#include "iekf/sen3.hpp"
#include "iekf/sim.hpp"

namespace iekf {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

VecX normal_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  VecX v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Vec3 random_axis_angle(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(0.0, max_angle);
  Vec3 dir = normal_vec(rng, 3);
  while (dir.norm() < 1e-3) dir = normal_vec(rng, 3);
  return dir.normalized() * u(rng);
}

SEnTangent random_tangent(std::mt19937_64& rng, int n, double max_angle, double v_scale) {
  VecX c(3 * (n + 1));
  c.head<3>() = random_axis_angle(rng, max_angle);
  c.tail(3 * n) = normal_vec(rng, 3 * n, v_scale);
  return SEnTangent(n, c);
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

// Estimate trajectory X̄(t) used by the flow study: smooth, non-trivial
// rotation and translations.
SEnElement flow_estimate(double t) {
  const Mat3 R = so3_exp(Vec3(0.1, -0.2, 0.15) * t);
  Mat3X cols(3, 2);
  cols.col(0) = Vec3(t, 0.5 * t * t, std::sin(t));
  cols.col(1) = Vec3(1.0, t, std::cos(t));
  return SEnElement(Rotation::unchecked(R), cols);
}

SEnTangent flow_noise(double t) {
  VecX w(9);
  for (int i = 0; i < 9; ++i) w(i) = 0.05 * std::sin((i + 1) * 0.7 * t + i);
  return SEnTangent(2, w);
}

SEnElement as_element(const MatX& m) {
  return SEnElement(Rotation::unchecked(m.topLeftCorner<3, 3>()), m.topRightCorner(3, 2));
}

double flow_discrepancy(double horizon, double step) {
  const auto f0 = GroupVectorField::imu_autonomous();
  const LinearPart A = LinearPart::linearize(f0);
  const SEnTangent vg = SEnTangent::from_parts(Vec3::Zero(), {Vec3::Zero(), Vec3(0, 0, -9.81)});
  const BodyFixedInput input{SEnTangent(2), vg};
  VecX xi0(9);
  xi0 << 0.3, -0.2, 0.4, 0.5, -0.3, 0.2, 0.1, 0.2, -0.1;

  const ErrorRateFn log_rate = [&](double t, const VecX& xi, const VecX&) {
    return right_error_rate(SEnTangent(2, xi), vg, flow_noise(t), adjoint(flow_estimate(t)), A);
  };
  const ErrorTrajectory traj = integrate_error(log_rate, xi0, horizon, step);

  const auto group_rate = [&](double t, const MatX& m) {
    const MatX Ad = adjoint(flow_estimate(t));
    return group_error_rate({as_element(m), ErrorSide::Right}, input, flow_noise(t), f0, &Ad);
  };
  MatX eta = exp(SEnTangent(2, xi0)).matrix();
  double worst = 0.0;
  for (std::size_t k = 1; k < traj.t.size(); ++k) {
    const double h = traj.t[k] - traj.t[k - 1];
    eta = oracle::rk4_matrix(group_rate, eta, traj.t[k - 1], h, 1);
    const MatX from_log = exp(SEnTangent(2, traj.xi[k])).matrix();
    worst = std::max(worst, (from_log - eta).cwiseAbs().maxCoeff());
  }
  return worst;
}

// Clone at the truth pose of the default trajectory.
ClonePose truth_clone(const TrajectorySpec& spec, double t, long frame) {
  const TruthSample s = truth_kinematics(spec, t);
  ClonePose c;
  c.t = t;
  c.frame = frame;
  c.R = s.R;
  c.p = s.p;
  c.R_fej = s.R;
  c.p_fej = s.p;
  return c;
}

}  // namespace

RoundtripStudy study_lie_roundtrip(int count, double max_angle, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SEnTangent> xs;
  xs.reserve(count);
  for (int i = 0; i < count; ++i) xs.push_back(random_tangent(rng, 2, max_angle, 5.0));
  RoundtripStudy out;
  const auto t0 = Clock::now();
  for (const auto& xi : xs) {
    out.worst = std::max(out.worst, (log(exp(xi)).coords() - xi.coords()).norm());
  }
  out.seconds = seconds_since(t0);
  return out;
}

JacobianStudy study_left_jacobian(int count, double max_angle, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  JacobianStudy out;
  for (int i = 0; i < count; ++i) {
    const SEnTangent xi = random_tangent(rng, 2, max_angle, 2.0);
    const MatX J = left_jacobian(xi);
    const MatX series = oracle::left_jacobian_series(xi, 25);
    out.worst_series = std::max(out.worst_series, (J - series).norm() / series.norm());
    const MatX I = left_jacobian_inverse(xi) * J;
    out.worst_inverse = std::max(
        out.worst_inverse, (I - MatX::Identity(I.rows(), I.cols())).cwiseAbs().maxCoeff());
  }
  return out;
}

double study_conjugation_identity(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const SEnTangent a = random_tangent(rng, 2, 1.0, 0.5);
    const SEnTangent b = random_tangent(rng, 2, 3.0, 2.0);
    const MatX lhs = exp(a).matrix() * hat(b) * exp(-a).matrix();
    const MatX rhs = hat(SEnTangent(2, VecX(oracle::expm_series(ad(a), 40) * b.coords())));
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

FlowStudy study_group_vs_log_flow(double horizon, double step) {
  FlowStudy out;
  const auto t0 = Clock::now();
  out.sup_error = flow_discrepancy(horizon, step);
  // The order is read where truncation dominates round-off.
  out.ladder_steps = {0.04, 0.02, 0.01};
  for (double h : out.ladder_steps) out.ladder_errors.push_back(flow_discrepancy(horizon, h));
  out.order = INFINITY;
  for (std::size_t i = 1; i < out.ladder_errors.size(); ++i) {
    out.order =
        std::min(out.order, std::log2(out.ladder_errors[i - 1] / out.ladder_errors[i]));
  }
  out.seconds = seconds_since(t0);
  return out;
}

double study_loglinear(double horizon) {
  const Vec3 g(0.0, 0.0, -9.81);
  ImuState truth;
  truth.p = Vec3(50, 0, 20 * std::sin(1.0));
  truth.v = Vec3(0, 2, 1);
  const SEnTangent xi0 = SEnTangent::from_parts(Vec3(0.05, -0.08, 0.1),
                                                {Vec3(0.5, -0.3, 0.4), Vec3(0.1, 0.2, -0.1)});
  ImuState est = truth;
  est.set_pose(exp(xi0) * truth.pose());
  const LinearPart A{imu_a_matrix(g)};
  const double dt = 1.0 / 200.0;
  const long steps = std::lround(horizon / dt);
  double worst = 0.0;
  for (long k = 1; k <= steps; ++k) {
    ImuMeasurement m;
    m.omega_m = Vec3(0.1 * std::sin(0.3 * k * dt), 0.05, -0.2 * std::cos(0.2 * k * dt));
    m.a_m = Vec3(0.3 * std::cos(0.5 * k * dt), 0.2, 9.81);
    truth = propagate_mean(truth, m, dt, g);
    est = propagate_mean(est, m, dt, g);
    const VecX xi = log(est.pose() * truth.pose().inverse()).coords();
    const VecX ref = loglinear_transition(A, k * dt) * xi0.coords();
    worst = std::max(worst, (xi - ref).cwiseAbs().maxCoeff());
  }
  return worst;
}

double study_nees_calibration(int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const MatX a = normal_vec(rng, 9).reshaped(3, 3);
  const Mat3 P = a * a.transpose() + 0.05 * Mat3::Identity();
  const Eigen::LLT<Mat3> llt(P);
  double sum = 0.0;
  for (int i = 0; i < draws; ++i) sum += nees3(llt.matrixL() * Vec3(normal_vec(rng, 3)), P);
  return sum / draws;
}

double study_measurement_jacobian(int cases_per_variant, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Extrinsics ext = Extrinsics::default_extrinsics();
  double worst = 0.0;
  for (auto mode : {ProjectionMode::Bearing, ProjectionMode::Pinhole}) {
    CameraModel model = CameraModel::default_model();
    model.K(0, 1) = 3.0;
    model.mode = mode;
    for (FilterKind kind : {FilterKind::EKF, FilterKind::QEKF, FilterKind::FEJ, FilterKind::IEKF,
                            FilterKind::IJ_IEKF}) {
      const bool invariant = kind == FilterKind::IEKF || kind == FilterKind::IJ_IEKF;
      for (int i = 0; i < cases_per_variant; ++i) {
        ClonePose c;
        c.R = Rotation::exp(random_axis_angle(rng, 3.0));
        c.p = normal_vec(rng, 3, 3.0);
        c.R_fej = c.R;
        c.p_fej = c.p;
        const CameraPose cam = camera_pose(c.R, c.p, ext);
        const Vec3 x(0.3 * normal_vec(rng, 1)(0), 0.3 * normal_vec(rng, 1)(0),
                     4.0 + std::abs(normal_vec(rng, 1)(0)));
        const Vec3 f = cam.R * x + cam.p;
        const auto jac = clone_measurement_jacobians(kind, c, f, ext, model);
        const auto perturbed = [&](const VecX& d) {
          ClonePose q = c;
          const Vec3 th = d.head<3>();
          if (invariant) {
            const SEnElement dx = exp(SEnTangent(1, VecX(d)));
            q.R = Rotation::unchecked(dx.R() * c.R.matrix());
            q.p = dx.R() * c.p + dx.column(0);
          } else if (kind == FilterKind::QEKF) {
            q.R = Rotation::unchecked(c.R.matrix() * so3_exp(th));
            q.p += d.tail<3>();
          } else {
            q.R = Rotation::unchecked(so3_exp(th) * c.R.matrix());
            q.p += d.tail<3>();
          }
          return VecX(project(camera_pose(q.R, q.p, ext), f, model));
        };
        const MatX fdX = oracle::numerical_jacobian(perturbed, VecX::Zero(6));
        const MatX fdf = oracle::numerical_jacobian(
            [&](const VecX& d) { return VecX(project(cam, f + Vec3(d), model)); }, VecX::Zero(3));
        const double scale = std::max(1.0, MatX(jac.H_X).cwiseAbs().maxCoeff());
        worst = std::max(worst, (fdX - MatX(jac.H_X)).cwiseAbs().maxCoeff() / scale);
        worst = std::max(worst, (fdf - MatX(jac.H_f)).cwiseAbs().maxCoeff() / scale);
      }
    }
  }
  return worst;
}

NullspaceStudy study_nullspace(int tracks, std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.finalize();
  const TrajectorySpec& spec = s.trajectory;
  const double frame_dt = 1.0 / spec.cam_rate;
  const int window = static_cast<int>(s.msckf.max_clones);
  NullspaceStudy out;
  for (double t0 = 1.0; out.tracks < tracks && t0 + window * frame_dt < spec.duration; t0 += 3.0) {
    std::vector<ClonePose> clones;
    std::vector<CameraPose> cams;
    for (int i = 0; i < window; ++i) {
      clones.push_back(truth_clone(spec, t0 + i * frame_dt, i));
      cams.push_back(camera_pose(clones.back().R, clones.back().p, s.extrinsics));
    }
    for (const Vec3& landmark : s.landmarks) {
      if (out.tracks >= tracks) break;
      std::vector<FeatureObservation> obs;
      std::vector<CameraPose> seen_by;
      std::vector<int> idx;
      for (int i = 0; i < window; ++i) {
        const Vec3 x = cams[i].to_camera(landmark);
        if (!s.camera.visible(x)) continue;
        obs.push_back({i, project_camera_frame(x, s.camera)});
        seen_by.push_back(cams[i]);
        idx.push_back(i);
      }
      if (obs.size() < 3) continue;
      Vec3 f;
      try {
        f = triangulate(obs, seen_by, s.camera, s.msckf.triangulation);
      } catch (const Error&) {
        continue;
      }
      const Eigen::Index m = 2 * static_cast<Eigen::Index>(obs.size());
      MatX HX = MatX::Zero(m, 6 * window);
      MatX Hf(m, 3);
      VecX r(m);
      for (std::size_t j = 0; j < obs.size(); ++j) {
        const auto jac =
            clone_measurement_jacobians(FilterKind::IEKF, clones[idx[j]], f, s.extrinsics, s.camera);
        const Eigen::Index row = 2 * static_cast<Eigen::Index>(j);
        HX.block<2, 6>(row, 6 * idx[j]) = jac.H_X;
        Hf.middleRows<2>(row) = jac.H_f;
        r.segment<2>(row) = obs[j].uv - jac.predicted;
      }
      const MatX N = s.camera.sigma_px * s.camera.sigma_px * MatX::Identity(m, m);
      const ProjectedResidual p = nullspace_project(HX, Hf, r, N);
      const Eigen::HouseholderQR<MatX> qr(Hf);
      const MatX Q2 = MatX(qr.householderQ()).rightCols(m - 3);
      out.worst_annihilation = std::max(out.worst_annihilation, (Q2.transpose() * Hf).norm());
      out.worst_residual = std::max(out.worst_residual, p.r.cwiseAbs().maxCoeff());
      ++out.tracks;
    }
  }
  return out;
}

bool ObservabilityStudy::uniform() const {
  if (dims.empty() || dims.front().empty()) return false;
  const int first = dims.front().front();
  for (const auto& row : dims) {
    for (int d : row) {
      if (d != first) return false;
    }
  }
  return true;
}

ObservabilityStudy study_observability(const std::vector<double>& dts, const std::vector<int>& ks) {
  ObservabilityStudy out;
  out.dts = dts;
  out.ks = ks;
  const Vec3 g(0.0, 0.0, -9.81);
  for (double dt : dts) {
    std::vector<int> row;
    for (int k : ks) row.push_back(observability_matrix(dt, k, g).nullspace_dim);
    out.dims.push_back(row);
  }
  return out;
}

const std::vector<NamedCheck>& selfcheck_registry() {
  static const std::vector<NamedCheck> checks = {
      {"lie_roundtrip",
       [] {
         const auto r = study_lie_roundtrip(1000, 3.0, 1);
         return CheckResult{"lie_roundtrip", r.worst < 1e-9 && r.seconds < 1.0,
                            fmt("worst %.3e, %.3f s", r.worst, r.seconds)};
       }},
      {"jacobian",
       [] {
         const auto r = study_left_jacobian(500, 2.0, 2);
         return CheckResult{"jacobian", r.worst_series < 1e-10 && r.worst_inverse < 1e-9,
                            fmt("series rel %.3e, inverse %.3e", r.worst_series, r.worst_inverse)};
       }},
      {"conjugation",
       [] {
         const double e = study_conjugation_identity(200, 3);
         return CheckResult{"conjugation", e < 1e-9, fmt("worst %.3e", e)};
       }},
      {"group_vs_log_flow",
       [] {
         const auto r = study_group_vs_log_flow(5.0, 1e-3);
         return CheckResult{"group_vs_log_flow", r.sup_error < 1e-5 && r.order >= 2.0,
                            fmt("sup %.3e, order %.2f", r.sup_error, r.order)};
       }},
      {"loglinear",
       [] {
         const double e = study_loglinear(10.0);
         return CheckResult{"loglinear", e < 1e-8, fmt("worst %.3e", e)};
       }},
      {"nees_calibration",
       [] {
         const double m = study_nees_calibration(500, 4);
         return CheckResult{"nees_calibration", m >= 0.9 && m <= 1.1, fmt("mean %.4f", m)};
       }},
      {"measurement_jacobian",
       [] {
         const double e = study_measurement_jacobian(50, 5);
         return CheckResult{"measurement_jacobian", e < 1e-5, fmt("worst scaled %.3e", e)};
       }},
      {"nullspace",
       [] {
         const auto r = study_nullspace(100, 6);
         return CheckResult{"nullspace",
                            r.tracks == 100 && r.worst_annihilation < 1e-10 && r.worst_residual < 1e-8,
                            fmt("|Q2'Hf| %.3e, residual %.3e", r.worst_annihilation, r.worst_residual)};
       }},
      {"observability",
       [] {
         const auto r = study_observability({0.01, 0.1, 1.0}, {4, 5, 6, 7, 8, 9, 10});
         return CheckResult{"observability", r.uniform(),
                            fmt("nullspace dim %.0f, uniform %.0f", r.dims[0][0], r.uniform())};
       }},
  };
  return checks;
}

std::vector<CheckResult> run_selfchecks(const std::string& filter) {
  std::vector<CheckResult> out;
  for (const auto& c : selfcheck_registry()) {
    if (!filter.empty() && c.name.rfind(filter, 0) != 0) continue;
    const auto t0 = Clock::now();
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {c.name, false, std::string("threw: ") + e.what()};
    }
    r.seconds = seconds_since(t0);
    out.push_back(r);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no self-check matches '" + filter + "'");
  return out;
}

}  // namespace iekf
