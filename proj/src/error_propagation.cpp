#include "iekf/error_propagation.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "iekf/van_loan.hpp"

namespace iekf {
namespace {

SEnElement random_element(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VecX c(3 * (n + 1));
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = normal(rng);
  c.head<3>() *= 0.8;
  return exp(SEnTangent(n, c));
}

void require_dim(const SEnTangent& a, Eigen::Index d, const char* what) {
  if (a.dim() != d) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has length " + std::to_string(a.dim()) + ", expected " +
                    std::to_string(d));
  }
}

void check_stage(const VecX& xi, double t) {
  if (xi.head<3>().norm() >= 2.0 * std::numbers::pi - kAngleMargin || !xi.allFinite()) {
    throw Error(ErrorCode::StepRejected,
                "rotation error left the Jacobian domain at t=" + std::to_string(t));
  }
}

}  // namespace

InvariantError InvariantError::between(const SEnElement& x, const SEnElement& xbar,
                                       ErrorSide side) {
  if (side == ErrorSide::Left) return {x.inverse() * xbar, side};
  return {xbar * x.inverse(), side};
}

SEnElement InvariantError::apply(const SEnElement& x) const {
  return side == ErrorSide::Left ? x * eta : eta * x;
}

GroupVectorField::GroupVectorField(VectorFieldFn f0, int n, int trials, double tol,
                                   std::uint64_t seed)
    : f0_(std::move(f0)), n_(n) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < trials; ++i) {
    const SEnElement x1 = random_element(n, rng);
    const SEnElement x2 = random_element(n, rng);
    const MatX lhs = f0_(x1 * x2);
    const MatX rhs = f0_(x1) * x2.matrix() + x1.matrix() * f0_(x2);
    if (lhs.rows() != 3 + n || lhs.cols() != 3 + n) {
      throw Error(ErrorCode::DimensionMismatch, "f0 returned a matrix of the wrong size");
    }
    const double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
    residual_ = std::max(residual_, (lhs - rhs).cwiseAbs().maxCoeff() / scale);
  }
  if (!(residual_ <= tol)) {
    throw Error(ErrorCode::F0NotCompatible,
                "f0 violates the product rule: residual " + std::to_string(residual_));
  }
}

GroupVectorField GroupVectorField::zero(int n) {
  return GroupVectorField([n](const SEnElement&) { return MatX::Zero(3 + n, 3 + n); }, n);
}

GroupVectorField GroupVectorField::imu_autonomous() {
  return GroupVectorField(
      [](const SEnElement& x) {
        if (x.n() != 2) throw Error(ErrorCode::DimensionMismatch, "f0 = MXN needs SE_2(3)");
        MatX m = MatX::Zero(5, 5);
        m.block<3, 1>(0, 3) = x.column(1);
        return m;
      },
      2);
}

LinearPart LinearPart::linearize(const GroupVectorField& f0, double h) {
  const int n = f0.n();
  const Eigen::Index d = 3 * (n + 1);
  auto g = [&](const VecX& c) {
    const SEnTangent xi(n, c);
    return vee(f0(exp(xi)) * exp(-xi).matrix()).coords();
  };
  MatX A(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    VecX e = VecX::Zero(d);
    e(j) = h;
    A.col(j) = (g(e) - g(-e)) / (2.0 * h);
  }
  return {A};
}

VecX left_error_rate(const SEnTangent& xi, const SEnTangent& vb, const SEnTangent& w,
                     const LinearPart& A) {
  require_dim(vb, xi.dim(), "v_b");
  require_dim(w, xi.dim(), "w");
  if (A.A.rows() != xi.dim() || A.A.cols() != xi.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "A does not match the tangent dimension");
  }
  return -ad(vb) * xi.coords() + left_jacobian_inverse(-xi) * w.coords() + A.A * xi.coords();
}

VecX right_error_rate(const SEnTangent& xi, const SEnTangent& vg, const SEnTangent& w,
                      const MatX& adjoint_of_estimate, const LinearPart& A) {
  require_dim(vg, xi.dim(), "v_g");
  require_dim(w, xi.dim(), "w");
  if (A.A.rows() != xi.dim() || adjoint_of_estimate.rows() != xi.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "A or Ad does not match the tangent dimension");
  }
  return ad(vg) * xi.coords() + left_jacobian_inverse(xi) * (adjoint_of_estimate * w.coords()) +
         A.A * xi.coords();
}

MatX group_error_rate(const InvariantError& eta, const BodyFixedInput& input, const SEnTangent& w,
                      const GroupVectorField& f0, const MatX* adjoint_of_estimate) {
  const MatX e = eta.eta.matrix();
  if (eta.side == ErrorSide::Left) {
    const MatX vb = hat(input.vb);
    return -vb * e + e * vb + e * hat(w) + f0(eta.eta);
  }
  if (adjoint_of_estimate == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "right error rate needs Ad of the estimate");
  }
  const MatX vg = hat(input.vg);
  const MatX transported = hat(SEnTangent(eta.eta.n(), VecX(*adjoint_of_estimate * w.coords())));
  return vg * e - e * vg + transported * e + f0(eta.eta);
}

ErrorTrajectory integrate_error(const ErrorRateFn& rate, const VecX& xi0, double horizon,
                                double step, const NoisePathFn& noise, NoiseInjection mode) {
  if (!(step > 0.0)) throw Error(ErrorCode::NonPositiveDt, "integration step must be positive");
  if (!(horizon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative horizon");
  const long steps = static_cast<long>(std::ceil(horizon / step - 1e-9));
  const VecX zero = VecX::Zero(xi0.size());

  ErrorTrajectory out;
  out.t.reserve(steps + 1);
  out.xi.reserve(steps + 1);
  out.t.push_back(0.0);
  out.xi.push_back(xi0);
  check_stage(xi0, 0.0);

  VecX xi = xi0;
  for (long k = 0; k < steps; ++k) {
    const double t = k * step;
    const double h = std::min(step, horizon - t);
    const VecX w = noise ? noise(k) : zero;
    const VecX& wd = mode == NoiseInjection::Frozen ? w : zero;

    const VecX k1 = rate(t, xi, wd);
    const VecX x2 = xi + 0.5 * h * k1;
    check_stage(x2, t);
    const VecX k2 = rate(t + 0.5 * h, x2, wd);
    const VecX x3 = xi + 0.5 * h * k2;
    check_stage(x3, t);
    const VecX k3 = rate(t + 0.5 * h, x3, wd);
    const VecX x4 = xi + h * k3;
    check_stage(x4, t);
    const VecX k4 = rate(t + h, x4, wd);
    VecX next = xi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (mode == NoiseInjection::EulerMaruyama && noise) {
      next += h * (rate(t, xi, w) - k1);
    }
    check_stage(next, t + h);
    xi = std::move(next);
    out.t.push_back(k + 1 == steps ? horizon : t + h);
    out.xi.push_back(xi);
  }
  return out;
}

MatX loglinear_transition(const LinearPart& A, double dt) { return transition_matrix(A.A, dt); }

}  // namespace iekf
