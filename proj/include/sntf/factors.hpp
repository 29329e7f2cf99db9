#pragma once

#include <Eigen/Dense>

namespace sntf {

/// Nonnegative CP factors. For the smooth model A(i, r) = a_r(u_i),
/// B(k, r) = b_r(t_k) and C((e-1)N + n, r) = c_{n,r}^{(e)}; for the baseline
/// NTF, B holds day activations and C site activations.
struct FactorSet {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;

  Eigen::Index rank() const { return A.cols(); }
};

}  // namespace sntf
