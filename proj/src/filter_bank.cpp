#include "iekf/filter_bank.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "iekf/io.hpp"
#include "iekf/van_loan.hpp"
#include "iekf/vins_jacobians.hpp"

namespace iekf {
namespace {

// Removes `count` rows and columns starting at `start`.
void erase_block(MatX& P, Eigen::Index start, Eigen::Index count) {
  const Eigen::Index n = P.rows();
  const Eigen::Index tail = n - start - count;
  MatX out(n - count, n - count);
  out.topLeftCorner(start, start) = P.topLeftCorner(start, start);
  out.topRightCorner(start, tail) = P.topRightCorner(start, tail);
  out.bottomLeftCorner(tail, start) = P.bottomLeftCorner(tail, start);
  out.bottomRightCorner(tail, tail) = P.bottomRightCorner(tail, tail);
  P = std::move(out);
}

}  // namespace

void FilterVariant::validate() const {
  if (!(r >= 0.0)) throw Error(ErrorCode::NegativeRange, "imitation range must be >= 0");
  if (kind != FilterKind::IJ_IEKF && r != 0.0) {
    throw Error(ErrorCode::InvalidArgument, "imitation range only applies to IJ-IEKF");
  }
}

std::string FilterVariant::label() const {
  switch (kind) {
    case FilterKind::EKF: return "EKF";
    case FilterKind::QEKF: return "QEKF";
    case FilterKind::FEJ: return "FEJ";
    case FilterKind::IEKF: return "IEKF";
    case FilterKind::IJ_IEKF: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "IJIEKF-%g", r);
      return buf;
    }
  }
  return "?";
}

FilterVariant FilterVariant::parse(const std::string& text) {
  FilterVariant v;
  if (text == "EKF") {
    v.kind = FilterKind::EKF;
  } else if (text == "QEKF") {
    v.kind = FilterKind::QEKF;
  } else if (text == "FEJ") {
    v.kind = FilterKind::FEJ;
  } else if (text == "IEKF") {
    v.kind = FilterKind::IEKF;
  } else if (text == "IJ_IEKF" || text == "IJIEKF") {
    v.kind = FilterKind::IJ_IEKF;
  } else if (text.rfind("IJIEKF-", 0) == 0) {
    v.kind = FilterKind::IJ_IEKF;
    v.r = parse_double(text.substr(7), "filter variant");
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown filter variant '" + text + "'");
  }
  v.validate();
  return v;
}

ErrorJacobians variant_jacobians(const FilterVariant& variant, const ImuState& s,
                                 const ImuMeasurement& meas, const Vec3& gravity,
                                 const std::optional<SEnTangent>& xi_delta) {
  if (variant.invariant()) return error_jacobians(s, gravity, xi_delta);

  const Mat3& R = s.R.matrix();
  const Vec3 a_hat = meas.a_m - s.b_a;
  ErrorJacobians j;
  j.F.setZero();
  j.G.setZero();
  j.F.block<3, 3>(3, 6).setIdentity();
  j.F.block<3, 3>(6, 12) = -R;
  j.G.block<3, 3>(6, 3) = R;
  j.G.bottomRightCorner<6, 6>().setIdentity();
  if (variant.kind == FilterKind::QEKF) {
    j.F.block<3, 3>(0, 0) = -skew(meas.omega_m - s.b_omega);
    j.F.block<3, 3>(0, 9) = -Mat3::Identity();
    j.F.block<3, 3>(6, 0) = -R * skew(a_hat);
    j.G.block<3, 3>(0, 0).setIdentity();
  } else {
    j.F.block<3, 3>(0, 9) = -R;
    j.F.block<3, 3>(6, 0) = -skew(R * a_hat);
    j.G.block<3, 3>(0, 0) = R;
  }
  return j;
}

Mat15 covariance_in_variant(const FilterVariant& variant, const ImuState& s, const Mat15& P) {
  Mat15 T = Mat15::Identity();
  if (variant.invariant()) {
    T.block<3, 3>(3, 0) = skew(s.p);
    T.block<3, 3>(6, 0) = skew(s.v);
  } else if (variant.kind == FilterKind::QEKF) {
    T.block<3, 3>(0, 0) = s.R.matrix().transpose();
  }
  Mat15 out = T * P * T.transpose();
  symmetrize(out);
  return out;
}

FilterInstance::FilterInstance(const FilterVariant& variant, const ImuState& mean, const Mat15& P0,
                               const ImuNoiseSpec& noise, std::uint64_t seed)
    : variant_(variant), mean_(mean), P_(P0), noise_(noise), rng_(seed), fej_p_(mean.p),
      fej_v_(mean.v) {
  variant_.validate();
  noise_.validate(true);
  symmetrize(P_);
}

Eigen::Index FilterInstance::clone_offset(std::size_t i) const {
  return kImuDim + 3 * static_cast<Eigen::Index>(landmarks_.size()) +
         6 * static_cast<Eigen::Index>(i);
}

void FilterInstance::predict(const ImuMeasurement& meas, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "predict dt must be positive");
  const Vec3& g = noise_.gravity;
  std::optional<SEnTangent> xi_delta;
  if (variant_.kind == FilterKind::IJ_IEKF) xi_delta = sample_imitating_error(variant_.r, rng_);

  const ImuState next = propagate_mean(mean_, meas, dt, g);
  const Mat12 Q = noise_.q_imu();
  const Eigen::Index n = dim();

  if (landmarks_.empty() || !variant_.invariant()) {
    // Landmarks are static with additive errors outside the invariant family,
    // so only the 15-dimensional IMU block moves.
    const ErrorJacobians j = variant_jacobians(variant_, mean_, meas, g, xi_delta);
    const Mat15 W = j.G * Q * j.G.transpose();
    auto d = van_loan<Mat15>(j.F, W, dt);
    if (variant_.kind == FilterKind::FEJ) {
      d.phi.block<3, 3>(3, 0) = -skew(next.p - fej_p_ - fej_v_ * dt - 0.5 * g * dt * dt);
      d.phi.block<3, 3>(6, 0) = -skew(next.v - fej_v_ - g * dt);
    }
    const Mat15 Pii = P_.topLeftCorner<15, 15>();
    P_.topLeftCorner<15, 15>() = d.phi * Pii * d.phi.transpose() + d.qd;
    if (n > kImuDim) {
      const MatX cross = d.phi * P_.topRightCorner(kImuDim, n - kImuDim);
      P_.topRightCorner(kImuDim, n - kImuDim) = cross;
      P_.bottomLeftCorner(n - kImuDim, kImuDim) = cross.transpose();
    }
  } else {
    const FullStateJacobians j = full_state_jacobians(mean_, landmarks_, g, xi_delta);
    const Eigen::Index m = j.F.rows();
    const MatX W = j.G * Q * j.G.transpose();
    const auto d = van_loan<MatX>(j.F, W, dt);
    const MatX Pmm = P_.topLeftCorner(m, m);
    P_.topLeftCorner(m, m) = d.phi * Pmm * d.phi.transpose() + d.qd;
    if (n > m) {
      const MatX cross = d.phi * P_.topRightCorner(m, n - m);
      P_.topRightCorner(m, n - m) = cross;
      P_.bottomLeftCorner(n - m, m) = cross.transpose();
    }
  }
  symmetrize(P_);
  mean_ = next;
  fej_p_ = next.p;
  fej_v_ = next.v;
}

KalmanStep kalman_update(const MatX& P, const LinearMeasurement& m) {
  const Eigen::Index rows = m.residual.size();
  if (m.H.rows() != rows || m.H.cols() != P.rows() || m.N.rows() != rows || m.N.cols() != rows) {
    throw Error(ErrorCode::DimensionMismatch, "measurement does not match the filter state");
  }
  const MatX PHt = P * m.H.transpose();
  MatX S = m.H * PHt + m.N;
  symmetrize(S);
  const Eigen::LLT<MatX> llt(S);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance is not positive definite");
  }
  // Squared spread of the Cholesky diagonal bounds cond(S) from below.
  const VecX diag = llt.matrixLLT().diagonal();
  const double cond = std::pow(diag.maxCoeff() / diag.minCoeff(), 2);
  if (!(cond <= 1e12)) {
    throw Error(ErrorCode::SingularInnovation,
                "innovation covariance condition number " + std::to_string(cond));
  }
  KalmanStep out;
  const MatX Kt = llt.solve(PHt.transpose());
  out.K = Kt.transpose();
  out.delta = out.K * m.residual;
  out.P = P;
  out.P.noalias() -= out.K * PHt.transpose();
  symmetrize(out.P);
  return out;
}

void FilterInstance::update(const LinearMeasurement& m) {
  if (m.residual.size() == 0 && m.H.rows() == 0) return;
  KalmanStep step = kalman_update(P_, m);
  apply_increment(step.delta);
  P_ = std::move(step.P);
}

void FilterInstance::apply_increment(const VecX& delta) {
  const int L = static_cast<int>(landmarks_.size());
  const Vec3 dth = delta.segment<3>(0);
  if (variant_.invariant()) {
    const auto k = trig_coefficients(dth.norm());
    const Mat3 W = skew(dth);
    const Mat3 W2 = W * W;
    const Mat3 Rd = Mat3::Identity() + k.a * W + k.b * W2;
    const Mat3 J = Mat3::Identity() + k.b * W + k.c * W2;
    mean_.R = Rotation::unchecked(Rd * mean_.R.matrix());
    mean_.p = Rd * mean_.p + J * delta.segment<3>(3);
    mean_.v = Rd * mean_.v + J * delta.segment<3>(6);
    for (int j = 0; j < L; ++j) {
      landmarks_[j] = Rd * landmarks_[j] + J * delta.segment<3>(landmark_offset(j));
    }
    for (std::size_t i = 0; i < clones_.size(); ++i) {
      const Eigen::Index o = clone_offset(i);
      const SEnElement dx = exp(SEnTangent(1, VecX(delta.segment<6>(o))));
      clones_[i].R = Rotation::unchecked(dx.R() * clones_[i].R.matrix());
      clones_[i].p = dx.R() * clones_[i].p + dx.column(0);
    }
  } else {
    const bool local = variant_.kind == FilterKind::QEKF;
    const Mat3 Rd = so3_exp(dth);
    mean_.R = Rotation::unchecked(local ? Mat3(mean_.R.matrix() * Rd) : Mat3(Rd * mean_.R.matrix()));
    mean_.p += delta.segment<3>(3);
    mean_.v += delta.segment<3>(6);
    for (int j = 0; j < L; ++j) landmarks_[j] += delta.segment<3>(landmark_offset(j));
    for (std::size_t i = 0; i < clones_.size(); ++i) {
      const Eigen::Index o = clone_offset(i);
      const Mat3 Rc = so3_exp(delta.segment<3>(o));
      clones_[i].R = Rotation::unchecked(local ? Mat3(clones_[i].R.matrix() * Rc)
                                               : Mat3(Rc * clones_[i].R.matrix()));
      clones_[i].p += delta.segment<3>(o + 3);
    }
  }
  mean_.b_omega += delta.segment<3>(9);
  mean_.b_a += delta.segment<3>(12);
}

void FilterInstance::augment_clone(double t, long frame) {
  const Eigen::Index n = dim();
  ClonePose c;
  c.t = t;
  c.frame = frame;
  c.R = mean_.R;
  c.p = mean_.p;
  c.R_fej = mean_.R;
  c.p_fej = mean_.p;
  // The clone error is the (θ, p) slice of the IMU error in every variant.
  MatX P(n + 6, n + 6);
  P.topLeftCorner(n, n) = P_;
  P.block(0, n, n, 6) = P_.leftCols<6>();
  P.block(n, 0, 6, n) = P_.topRows<6>();
  P.bottomRightCorner<6, 6>() = P_.topLeftCorner<6, 6>();
  P_ = std::move(P);
  clones_.push_back(c);
}

void FilterInstance::marginalize_clone(std::size_t index) {
  if (index >= clones_.size()) throw Error(ErrorCode::InvalidArgument, "no such clone");
  erase_block(P_, clone_offset(index), 6);
  clones_.erase(clones_.begin() + static_cast<long>(index));
}

void FilterInstance::add_landmark(const Vec3& f, const Mat3& cov) {
  if (!clones_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "landmarks must be added before any clone");
  }
  const Eigen::Index n = dim();
  MatX P = MatX::Zero(n + 3, n + 3);
  P.topLeftCorner(n, n) = P_;
  P.bottomRightCorner<3, 3>() = cov;
  P_ = std::move(P);
  landmarks_.push_back(f);
}

PoseError pose_error(const FilterVariant& variant, const ImuState& est, const ImuState& truth) {
  const Mat3 Rt = est.R.matrix() * truth.R.matrix().transpose();
  PoseError e;
  e.pos_plain = est.p - truth.p;
  const Vec3 inv = est.p - Rt * truth.p;
  if (variant.kind == FilterKind::QEKF) {
    e.ang = so3_log(truth.R.matrix().transpose() * est.R.matrix());
  } else {
    e.ang = so3_log(Rt);
  }
  if (variant.invariant()) {
    e.pos = inv;
    e.pos_alt = e.pos_plain;
  } else {
    e.pos = e.pos_plain;
    e.pos_alt = inv;
  }
  return e;
}

double nees3(const Vec3& e, const Mat3& P) {
  if (!(P.determinant() >= 1e-30)) {
    throw Error(ErrorCode::SingularCovariance, "covariance block is singular");
  }
  return e.dot(P.ldlt().solve(e)) / 3.0;
}

NeesValue FilterInstance::nees(const ImuState& truth) const {
  const PoseError e = pose_error(variant_, mean_, truth);
  const Mat3 Pa = P_.block<3, 3>(0, 0);
  const Mat3 Pp = P_.block<3, 3>(3, 3);
  return {nees3(e.pos, Pp), nees3(e.ang, Pa), nees3(e.pos_alt, Pp)};
}

std::string snapshot_csv_header() {
  return "t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,bgx,bgy,bgz,bax,bay,baz,trace_P_pos,trace_P_ang\n";
}

std::string snapshot_csv_row(double t, const FilterInstance& f) {
  const ImuState& s = f.mean();
  Eigen::Quaterniond q(s.R.matrix());
  q.normalize();
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  std::string row = fmt_double(t);
  for (double x : {q.w(), q.x(), q.y(), q.z()}) row += "," + fmt_double(x);
  for (const Vec3* v : {&s.p, &s.v, &s.b_omega, &s.b_a}) {
    for (int i = 0; i < 3; ++i) row += "," + fmt_double((*v)(i));
  }
  row += "," + fmt_double(f.cov().block<3, 3>(3, 3).trace());
  row += "," + fmt_double(f.cov().block<3, 3>(0, 0).trace());
  return row + "\n";
}

}  // namespace iekf
