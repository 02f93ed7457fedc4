#include "iekf/imu_model.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "iekf/io.hpp"
#include "iekf/van_loan.hpp"

namespace iekf {

SEnElement ImuState::pose() const {
  Mat3X cols(3, 2);
  cols.col(0) = p;
  cols.col(1) = v;
  return SEnElement(R, cols);
}

void ImuState::set_pose(const SEnElement& x) {
  if (x.n() != 2) throw Error(ErrorCode::DimensionMismatch, "IMU pose lives on SE_2(3)");
  R = x.rotation();
  p = x.column(0);
  v = x.column(1);
}

void ImuNoiseSpec::validate(bool allow_zero) const {
  for (double s : {sigma_gw, sigma_aw, sigma_gbw, sigma_abw}) {
    if (!(s > 0.0) && !(allow_zero && s == 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "IMU noise densities must be positive");
    }
  }
  if (!gravity.allFinite()) throw Error(ErrorCode::InvalidArgument, "gravity is not finite");
}

Mat12 ImuNoiseSpec::q_imu() const {
  Eigen::Matrix<double, 12, 1> d;
  d << Vec3::Constant(sigma_gw * sigma_gw), Vec3::Constant(sigma_aw * sigma_aw),
      Vec3::Constant(sigma_gbw * sigma_gbw), Vec3::Constant(sigma_abw * sigma_abw);
  return d.asDiagonal();
}

void ErrorCovariance::check() const {
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(ErrorCode::SingularCovariance, "covariance is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Mat15> es(P, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw Error(ErrorCode::SingularCovariance, "covariance has a negative eigenvalue");
  }
}

ImuState propagate_mean(const ImuState& state, const ImuMeasurement& meas, double dt,
                        const Vec3& gravity) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "propagation dt must be positive");
  const Vec3 phi = (meas.omega_m - state.b_omega) * dt;
  const Vec3 a = meas.a_m - state.b_a;
  const auto k = trig_coefficients(phi.norm());
  const Mat3 W = skew(phi);
  const Mat3 W2 = W * W;
  const Mat3 dR = Mat3::Identity() + k.a * W + k.b * W2;
  const Mat3 J = Mat3::Identity() + k.b * W + k.c * W2;
  const Mat3 N = 0.5 * Mat3::Identity() + k.c * W + k.c2 * W2;
  const Mat3& R = state.R.matrix();

  ImuState out = state;
  out.R = Rotation::unchecked(R * dR);
  out.v = state.v + R * (J * a) * dt + gravity * dt;
  out.p = state.p + state.v * dt + R * (N * a) * (dt * dt) + 0.5 * gravity * (dt * dt);
  return out;
}

Mat9 imu_a_matrix(const Vec3& gravity) {
  Mat9 A = Mat9::Zero();
  A.block<3, 3>(3, 6) = Mat3::Identity();
  A.block<3, 3>(6, 0) = skew(gravity);
  return A;
}

Mat9x6 imu_b_matrix(const ImuState& s) {
  const Mat3& R = s.R.matrix();
  Mat9x6 B = Mat9x6::Zero();
  B.block<3, 3>(0, 0) = R;
  B.block<3, 3>(3, 0) = skew(s.p) * R;
  B.block<3, 3>(6, 0) = skew(s.v) * R;
  B.block<3, 3>(6, 3) = R;
  return B;
}

ErrorJacobians error_jacobians(const ImuState& state, const Vec3& gravity,
                               const std::optional<SEnTangent>& xi_delta) {
  Mat9x6 B = imu_b_matrix(state);
  if (xi_delta) {
    if (xi_delta->n() != 2) {
      throw Error(ErrorCode::DimensionMismatch, "imitated error must live in se_2(3)");
    }
    if (!xi_delta->coords().isZero(0.0)) {
      const Mat9 Jinv = left_jacobian_inverse(*xi_delta);
      B = (Jinv * B).eval();
    }
  }
  ErrorJacobians j;
  j.F.setZero();
  j.F.topLeftCorner<9, 9>() = imu_a_matrix(gravity);
  j.F.topRightCorner<9, 6>() = -B;
  j.G.setZero();
  j.G.topLeftCorner<9, 6>() = B;
  j.G.bottomRightCorner<6, 6>().setIdentity();
  return j;
}

ErrorCovariance propagate_covariance(const ErrorCovariance& P, const Mat15& F,
                                     const Mat15x12& G, const Mat12& Q, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "propagation dt must be positive");
  const Mat15 W = G * Q * G.transpose();
  const auto d = van_loan<Mat15>(F, W, dt);
  ErrorCovariance out;
  out.P = d.phi * P.P * d.phi.transpose() + d.qd;
  symmetrize(out.P);
  return out;
}

SEnTangent sample_imitating_error(double r, std::mt19937_64& rng) {
  if (!(r >= 0.0)) throw Error(ErrorCode::NegativeRange, "imitation range must be >= 0");
  SEnTangent xi(2);
  if (r == 0.0) return xi;
  std::uniform_real_distribution<double> u(-r, r);
  for (int i = 0; i < 3; ++i) xi.omega()(i) = u(rng);
  return xi;
}

std::vector<ImuMeasurement> read_imu_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) !=
                                     std::vector<std::string>{"t", "wx", "wy", "wz", "ax", "ay",
                                                              "az"}) {
    throw Error(ErrorCode::IoError, path + ": expected header t,wx,wy,wz,ax,ay,az");
  }
  std::vector<ImuMeasurement> out;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(row);
    if (f.size() != 7) throw Error(ErrorCode::IoError, ctx + ": expected 7 fields");
    ImuMeasurement m;
    m.t = parse_double(f[0], ctx);
    for (int i = 0; i < 3; ++i) {
      m.omega_m(i) = parse_double(f[1 + i], ctx);
      m.a_m(i) = parse_double(f[4 + i], ctx);
    }
    if (!out.empty() && !(m.t > out.back().t)) {
      throw Error(ErrorCode::IoError, ctx + ": timestamps must be strictly increasing");
    }
    out.push_back(m);
  }
  return out;
}

void write_imu_csv(const std::string& path, const std::vector<ImuMeasurement>& stream) {
  std::string s = "t,wx,wy,wz,ax,ay,az\n";
  for (const auto& m : stream) {
    s += fmt_double(m.t);
    for (int i = 0; i < 3; ++i) s += "," + fmt_double(m.omega_m(i));
    for (int i = 0; i < 3; ++i) s += "," + fmt_double(m.a_m(i));
    s += "\n";
  }
  write_file_atomic(path, s);
}

}  // namespace iekf
