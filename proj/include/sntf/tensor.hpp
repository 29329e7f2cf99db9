#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

namespace sntf {

using Eigen::Index;

/// Dense I x K x M tensor. Entry (i, k, m) lives at i + I * (k + K * m), so
/// mode-1 fibers are contiguous and the raw buffer is the mode-1 unfolding in
/// column-major order.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Index dim1, Index dim2, Index dim3, double fill = 0.0);

  Index dim1() const { return dims_[0]; }
  Index dim2() const { return dims_[1]; }
  Index dim3() const { return dims_[2]; }
  const std::array<Index, 3>& dims() const { return dims_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  double& operator()(Index i, Index k, Index m) { return data_[offset(i, k, m)]; }
  double operator()(Index i, Index k, Index m) const { return data_[offset(i, k, m)]; }

  Index offset(Index i, Index k, Index m) const { return i + dims_[0] * (k + dims_[1] * m); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Tensor3& other) const { return dims_ == other.dims_; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::array<Index, 3> dims_{0, 0, 0};
  std::vector<double> data_;
};

/// Mode-n matricization: mode-n fibers become columns, remaining indices
/// ordered with the earlier mode varying fastest. Mode 1 gives I x (K*M) with
/// column k + K*m.
Eigen::MatrixXd unfold(const Tensor3& t, int mode);

/// Inverse of unfold for the given target dims.
Tensor3 refold(const Eigen::MatrixXd& matrix, int mode, const std::array<Index, 3>& dims);

/// out(i, k, m) = a_i * b_k * c_m.
Tensor3 rank1(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c);

/// Kronecker product c (x) b: out[m*K + k] = c_m * b_k.
Eigen::VectorXd kron_vec(const Eigen::VectorXd& c, const Eigen::VectorXd& b);

/// sum over entries of (W .* R)^2.
double weighted_sq_norm(const Tensor3& weights, const Tensor3& residual);

}  // namespace sntf
