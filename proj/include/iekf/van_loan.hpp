#pragma once

#include <cmath>

#include "iekf/common.hpp"

namespace iekf {

template <typename Mat>
struct Discretization {
  Mat phi;  // e^{F dt}
  Mat qd;   // ∫₀^dt e^{Fτ} W e^{Fᵀτ} dτ
};

/// Discretizes Ṗ = FP + PFᵀ + W over dt.
///
/// Evaluates the Van Loan block exponential exp([[F, W], [0, -Fᵀ]] h) by its
/// Taylor series block-wise (never forming the 2n-square matrix), on a step h
/// scaled so that ‖F‖h ≤ 1/2, then squares back up to dt. For nilpotent F the
/// series terminates exactly.
template <typename Mat>
Discretization<Mat> van_loan(const Mat& F, const Mat& W, double dt) {
  const Eigen::Index n = F.rows();
  const double norm = F.template lpNorm<Eigen::Infinity>() * dt;
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const double h = std::ldexp(dt, -squarings);

  Mat phi = Mat::Identity(n, n);
  Mat qd = h * W;
  Mat phi_term = Mat::Identity(n, n);
  Mat c = W;  // C_k = F C_{k-1} + C_{k-1} Fᵀ
  double q_scale = h;
  constexpr int kMaxTerms = 40;
  for (int k = 1; k < kMaxTerms; ++k) {
    phi_term = (phi_term * F) * (h / k);
    c = F * c + c * F.transpose();
    q_scale *= h / (k + 1);
    const Mat q_term = q_scale * c;
    phi += phi_term;
    qd += q_term;
    const double phi_small = phi_term.template lpNorm<Eigen::Infinity>();
    const double q_small = q_term.template lpNorm<Eigen::Infinity>();
    if (phi_small <= 1e-18 * phi.template lpNorm<Eigen::Infinity>() &&
        q_small <= 1e-18 * qd.template lpNorm<Eigen::Infinity>()) {
      break;
    }
  }
  for (int s = 0; s < squarings; ++s) {
    qd = phi * qd * phi.transpose() + qd;
    phi = phi * phi;
  }
  qd = 0.5 * (qd + qd.transpose()).eval();
  return {phi, qd};
}

/// e^{A dt}: exact finite polynomial when A is nilpotent, otherwise scaling
/// and squaring (Padé). `nilpotent_index` receives the smallest k with A^k = 0,
/// or 0 when A is not nilpotent.
MatX transition_matrix(const MatX& A, double dt, int* nilpotent_index = nullptr);

/// General matrix exponential.
MatX expm(const MatX& m);

template <typename Mat>
void symmetrize(Mat& m) {
  m = 0.5 * (m + m.transpose()).eval();
}

}  // namespace iekf
