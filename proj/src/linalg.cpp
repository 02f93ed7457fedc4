#include <unsupported/Eigen/MatrixFunctions>

#include "iekf/van_loan.hpp"

namespace iekf {

MatX expm(const MatX& m) { return m.exp(); }

MatX transition_matrix(const MatX& A, double dt, int* nilpotent_index) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw Error(ErrorCode::DimensionMismatch, "transition of a non-square matrix");
  const MatX Adt = A * dt;
  // Powers of a nilpotent matrix vanish by index n at the latest.
  MatX power = MatX::Identity(n, n);
  MatX sum = power;
  for (Eigen::Index k = 1; k <= n; ++k) {
    power = power * A;
    if (power.isZero(0.0)) {
      if (nilpotent_index) *nilpotent_index = static_cast<int>(k);
      // Σ_{j<k} (A dt)^j / j!
      MatX poly = MatX::Identity(n, n);
      MatX term = poly;
      for (Eigen::Index j = 1; j < k; ++j) {
        term = term * Adt / static_cast<double>(j);
        poly += term;
      }
      return poly;
    }
  }
  if (nilpotent_index) *nilpotent_index = 0;
  return expm(Adt);
}

}  // namespace iekf
