#include <cstdio>
#include <filesystem>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "iekf/error_propagation.hpp"
#include "iekf/imu_model.hpp"
#include "iekf/oracles.hpp"
#include "test_util.hpp"

using namespace iekf;
using iekf::testing::random_rotation;
using iekf::testing::random_tangent;
using iekf::testing::random_vec;

namespace {

const Vec3 kGravity(0.0, 0.0, -9.81);

ImuState random_state(std::mt19937_64& rng) {
  ImuState s;
  s.R = random_rotation(rng);
  s.p = random_vec(rng, 3, 10.0);
  s.v = random_vec(rng, 3, 2.0);
  s.b_omega = random_vec(rng, 3, 0.01);
  s.b_a = random_vec(rng, 3, 0.1);
  return s;
}

double max_abs(const MatX& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(PropagateMean, ZeroInputsNoGravity) {
  ImuState s;
  s.p = Vec3(1, 2, 3);
  const ImuState out = propagate_mean(s, ImuMeasurement{}, 0.5, Vec3::Zero());
  EXPECT_EQ(out.p, s.p);
  EXPECT_EQ(out.v, s.v);
  EXPECT_EQ(out.R.matrix(), s.R.matrix());
}

TEST(PropagateMean, FreeFall) {
  const ImuState out = propagate_mean(ImuState{}, ImuMeasurement{}, 1.0, kGravity);
  EXPECT_LT((out.v - Vec3(0, 0, -9.81)).norm(), 1e-15);
  EXPECT_LT((out.p - Vec3(0, 0, -4.905)).norm(), 1e-15);
}

TEST(PropagateMean, RejectsNonPositiveDt) {
  try {
    propagate_mean(ImuState{}, ImuMeasurement{}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveDt);
  }
}

TEST(PropagateMean, MatchesFineIntegration) {
  // Inputs held for 1 ms each; the oracle integrates Ṙ = Rω^, v̇ = Ra + g,
  // ṗ = v on the embedding with RK4 at 10 µs.
  std::mt19937_64 rng(1);
  ImuState s = random_state(rng);
  s.b_omega.setZero();
  s.b_a.setZero();
  VecX y(15);
  y << Eigen::Map<const VecX>(s.R.matrix().data(), 9), s.p, s.v;
  const double dt = 1e-3;
  const int fine = 100;
  for (int k = 0; k < 1000; ++k) {
    ImuMeasurement m;
    m.omega_m = Vec3(std::sin(0.01 * k), 0.5 * std::cos(0.02 * k), 0.3) ;
    m.a_m = Vec3(1.0 + std::sin(0.03 * k), -0.5, 9.81 + 0.2 * std::cos(0.01 * k));
    s = propagate_mean(s, m, dt, kGravity);
    const auto f = [&](const VecX& x) {
      const Eigen::Map<const Mat3> R(x.data());
      VecX d(15);
      const Mat3 Rd = R * skew(m.omega_m);
      d << Eigen::Map<const VecX>(Rd.data(), 9), x.tail<3>(), R * m.a_m + kGravity;
      return d;
    };
    const double h = dt / fine;
    for (int j = 0; j < fine; ++j) {
      const VecX k1 = f(y), k2 = f(y + 0.5 * h * k1), k3 = f(y + 0.5 * h * k2), k4 = f(y + h * k3);
      y += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  EXPECT_LT((s.p - y.segment<3>(9)).norm(), 1e-6);
  EXPECT_LT((s.v - y.tail<3>()).norm(), 1e-6);
  EXPECT_LT(max_abs(s.R.matrix() - Eigen::Map<const Mat3>(y.data())), 1e-9);
}

TEST(PropagateMean, TimeReversalRecoversStart) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    ImuState s0 = random_state(rng);
    s0.b_omega.setZero();
    s0.b_a.setZero();
    ImuMeasurement m;
    m.omega_m = random_vec(rng, 3, 2.0);
    m.a_m = random_vec(rng, 3, 5.0);
    ImuState s1 = propagate_mean(s0, m, 0.05, kGravity);
    s1.v = -s1.v;
    ImuMeasurement back = m;
    back.omega_m = -m.omega_m;
    ImuState s2 = propagate_mean(s1, back, 0.05, kGravity);
    s2.v = -s2.v;
    EXPECT_LT(max_abs(s2.R.matrix() - s0.R.matrix()), 1e-10);
    EXPECT_LT((s2.p - s0.p).norm(), 1e-10);
    EXPECT_LT((s2.v - s0.v).norm(), 1e-10);
  }
}

TEST(PropagateMean, BiasesUnchanged) {
  std::mt19937_64 rng(3);
  const ImuState s = random_state(rng);
  const ImuState out = propagate_mean(s, ImuMeasurement{0.0, Vec3(1, 2, 3), Vec3(4, 5, 6)}, 0.01);
  EXPECT_EQ(out.b_omega, s.b_omega);
  EXPECT_EQ(out.b_a, s.b_a);
}

TEST(LogLinear, GroupErrorFollowsPolynomialTransition) {
  // Noise-free truth and estimate driven by the same inputs: log(X̂X⁻¹) must
  // equal Φ(t)ξ₀ at every step.
  ImuState truth;
  truth.p = Vec3(50, 0, 20 * std::sin(1.0));
  truth.v = Vec3(0, 2, 1);
  const SEnTangent xi0 = SEnTangent::from_parts(Vec3(0.05, -0.08, 0.1),
                                                {Vec3(0.5, -0.3, 0.4), Vec3(0.1, 0.2, -0.1)});
  ImuState est = truth;
  est.set_pose(exp(xi0) * truth.pose());
  const MatX A = imu_a_matrix(kGravity);
  const double dt = 1.0 / 200.0;
  double worst = 0.0;
  for (int k = 1; k <= 2000; ++k) {
    ImuMeasurement m;
    m.omega_m = Vec3(0.1 * std::sin(0.3 * k * dt), 0.05, -0.2 * std::cos(0.2 * k * dt));
    m.a_m = Vec3(0.3 * std::cos(0.5 * k * dt), 0.2, 9.81);
    truth = propagate_mean(truth, m, dt, kGravity);
    est = propagate_mean(est, m, dt, kGravity);
    const VecX xi = log(est.pose() * truth.pose().inverse()).coords();
    const VecX ref = loglinear_transition({A}, k * dt) * xi0.coords();
    worst = std::max(worst, (xi - ref).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(ErrorJacobians, ZeroImitationIsBitIdentical) {
  std::mt19937_64 rng(4);
  const ImuState s = random_state(rng);
  const auto a = error_jacobians(s, kGravity);
  const auto b = error_jacobians(s, kGravity, SEnTangent(2));
  EXPECT_EQ(a.F, b.F);
  EXPECT_EQ(a.G, b.G);
}

TEST(ErrorJacobians, GravityBlockAndStructure) {
  const auto j = error_jacobians(ImuState{}, kGravity);
  EXPECT_EQ(Mat3(j.F.block<3, 3>(6, 0)), skew(kGravity));
  EXPECT_EQ(Mat9(j.F.topLeftCorner<9, 9>()), imu_a_matrix(kGravity));
  EXPECT_EQ(Mat3(j.F.block<3, 3>(3, 6)), Mat3::Identity());
  EXPECT_TRUE(j.F.bottomRows<6>().isZero(0.0));
  EXPECT_EQ(MatX(j.G.bottomRightCorner<6, 6>()), MatX::Identity(6, 6));
}

TEST(ErrorJacobians, UpperLeftIsStateIndependent) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto j = error_jacobians(random_state(rng), kGravity, random_tangent(rng, 2, 0.5));
    EXPECT_EQ(Mat9(j.F.topLeftCorner<9, 9>()), imu_a_matrix(kGravity));
  }
}

TEST(ErrorJacobians, ImitationPremultipliesB) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const ImuState s = random_state(rng);
    const SEnTangent xd = random_tangent(rng, 2, 1.0);
    const auto j = error_jacobians(s, kGravity, xd);
    const MatX expected = left_jacobian_inverse(xd) * imu_b_matrix(s);
    EXPECT_LT(max_abs(MatX(j.G.topLeftCorner<9, 6>()) - expected), 1e-12);
    EXPECT_LT(max_abs(MatX(j.F.topRightCorner<9, 6>()) + expected), 1e-12);
  }
}

TEST(ErrorJacobians, AccelNoiseOnlyDrivesVelocity) {
  std::mt19937_64 rng(7);
  const Mat9x6 B = imu_b_matrix(random_state(rng));
  EXPECT_TRUE((B.block<6, 3>(0, 3).isZero(0.0)));
  EXPECT_FALSE((B.block<3, 3>(6, 3).isZero(0.0)));
}

TEST(ErrorJacobians, RejectsSingularImitation) {
  const SEnTangent xd = SEnTangent::from_parts(Vec3(2 * M_PI, 0, 0), {Vec3::Zero(), Vec3::Zero()});
  EXPECT_THROW(error_jacobians(ImuState{}, kGravity, xd), Error);
}

TEST(PropagateCovariance, NoDynamicsNoNoise) {
  std::mt19937_64 rng(8);
  ErrorCovariance P{Mat15(iekf::testing::random_spd(rng, 15))};
  const auto out = propagate_covariance(P, Mat15::Zero(), Mat15x12::Zero(), Mat12::Zero(), 0.01);
  EXPECT_LT(max_abs(out.P - P.P), 1e-15);
}

TEST(PropagateCovariance, PureDiffusion) {
  ImuNoiseSpec spec;
  Mat15x12 G = Mat15x12::Zero();
  G.topLeftCorner<12, 12>().setIdentity();
  const double dt = 0.005;
  const auto out = propagate_covariance(ErrorCovariance{}, Mat15::Zero(), G, spec.q_imu(), dt);
  Mat15 expected = Mat15::Zero();
  expected.topLeftCorner<12, 12>() = dt * spec.q_imu();
  EXPECT_EQ(out.P, expected);
}

TEST(PropagateCovariance, MatchesFineOdeIntegration) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 5; ++i) {
    const Mat15 F = random_vec(rng, 225, 1.0).reshaped(15, 15);
    const Mat15x12 G = random_vec(rng, 180, 1.0).reshaped(15, 12);
    const Mat12 Q = iekf::testing::random_spd(rng, 12);
    const Mat15 P0 = iekf::testing::random_spd(rng, 15);
    const double dt = 0.005;
    const auto out = propagate_covariance(ErrorCovariance{P0}, F, G, Q, dt);
    const MatX W = G * Q * G.transpose();
    const MatX ref = oracle::rk4_matrix(
        [&](double, const MatX& P) { return MatX(F * P + P * F.transpose() + W); }, P0, 0.0, 1e-5,
        500);
    EXPECT_LT(iekf::testing::rel_frobenius(out.P, ref), 1e-8);
  }
}

TEST(PropagateCovariance, StaysSymmetricPsdOverLongSequences) {
  std::mt19937_64 rng(10);
  const ImuNoiseSpec spec;
  ErrorCovariance P;
  P.P.diagonal().setConstant(1e-4);
  ImuState s = random_state(rng);
  for (int k = 0; k < 10000; ++k) {
    if (k % 100 == 0) s = random_state(rng);
    const auto j = error_jacobians(s, spec.gravity, sample_imitating_error(0.5, rng));
    P = propagate_covariance(P, j.F, j.G, spec.q_imu(), 0.005);
  }
  EXPECT_NO_THROW(P.check());
  const Eigen::SelfAdjointEigenSolver<Mat15> es(P.P);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  EXPECT_EQ(P.P, Mat15(P.P.transpose()));
}

TEST(ImitatingError, ZeroRange) {
  std::mt19937_64 rng(11);
  const auto before = rng;
  EXPECT_TRUE(sample_imitating_error(0.0, rng).coords().isZero(0.0));
  EXPECT_EQ(rng, before);
}

TEST(ImitatingError, Deterministic) {
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(sample_imitating_error(0.5, a).coords(), sample_imitating_error(0.5, b).coords());
  }
}

TEST(ImitatingError, UniformMoments) {
  std::mt19937_64 rng(12);
  const int n = 100000;
  Vec3 sum = Vec3::Zero(), sq = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    const SEnTangent x = sample_imitating_error(1.0, rng);
    EXPECT_TRUE(x.coords().tail<6>().isZero(0.0));
    sum += x.omega();
    sq += x.omega().cwiseAbs2();
  }
  const Vec3 mean = sum / n;
  const Vec3 var = sq / n - mean.cwiseAbs2();
  const double sigma_mean = std::sqrt(1.0 / 3.0 / n);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT(std::abs(mean(i)), 3 * sigma_mean);
    EXPECT_NEAR(var(i), 1.0 / 3.0, 0.05 / 3.0);
  }
}

TEST(ImitatingError, NegativeRangeThrows) {
  std::mt19937_64 rng(13);
  try {
    sample_imitating_error(-0.1, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeRange);
  }
}

TEST(NoiseSpec, Validation) {
  ImuNoiseSpec spec;
  EXPECT_NO_THROW(spec.validate());
  spec.sigma_aw = 0.0;
  EXPECT_THROW(spec.validate(), Error);
  EXPECT_NO_THROW(spec.validate(true));
  EXPECT_EQ(ImuNoiseSpec{}.q_imu()(0, 0), 1.6968e-4 * 1.6968e-4);
  EXPECT_EQ(ImuNoiseSpec{}.q_imu()(11, 11), 3e-3 * 3e-3);
}

TEST(ImuCsv, Roundtrip) {
  const std::string path = std::filesystem::temp_directory_path() / "iekf_imu_roundtrip.csv";
  std::vector<ImuMeasurement> stream;
  for (int k = 0; k < 5; ++k) {
    stream.push_back({0.005 * k, Vec3(0.1 * k, 1.0 / 3.0, -2), Vec3(1e-17, 9.81, k)});
  }
  write_imu_csv(path, stream);
  const auto back = read_imu_csv(path);
  ASSERT_EQ(back.size(), stream.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].t, stream[i].t);
    EXPECT_EQ(back[i].omega_m, stream[i].omega_m);
    EXPECT_EQ(back[i].a_m, stream[i].a_m);
  }
  std::filesystem::remove(path);
}

TEST(ImuCsv, RejectsBadHeaderAndTimestamps) {
  const std::string path = std::filesystem::temp_directory_path() / "iekf_imu_bad.csv";
  {
    std::ofstream(path) << "t,gx,gy,gz,ax,ay,az\n";
  }
  EXPECT_THROW(read_imu_csv(path), Error);
  {
    std::ofstream(path) << "t,wx,wy,wz,ax,ay,az\n1,0,0,0,0,0,0\n1,0,0,0,0,0,0\n";
  }
  EXPECT_THROW(read_imu_csv(path), Error);
  std::filesystem::remove(path);
}
