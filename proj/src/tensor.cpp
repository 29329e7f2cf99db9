#include "sntf/tensor.hpp"

#include <string>

#include "sntf/errors.hpp"

namespace sntf {

namespace {

void check_mode(int mode) {
  if (mode < 1 || mode > 3) throw InputError("invalid unfolding mode " + std::to_string(mode));
}

// (row, column) of entry (i, k, m) in the mode-n unfolding.
std::pair<Index, Index> unfolded_position(int mode, const std::array<Index, 3>& d, Index i, Index k,
                                          Index m) {
  switch (mode) {
    case 1: return {i, k + d[1] * m};
    case 2: return {k, i + d[0] * m};
    default: return {m, i + d[0] * k};
  }
}

}  // namespace

Tensor3::Tensor3(Index dim1, Index dim2, Index dim3, double fill) : dims_{dim1, dim2, dim3} {
  if (dim1 < 0 || dim2 < 0 || dim3 < 0) throw DimensionError("tensor dimensions must be nonnegative");
  data_.assign(static_cast<std::size_t>(dim1 * dim2 * dim3), fill);
}

Eigen::MatrixXd unfold(const Tensor3& t, int mode) {
  check_mode(mode);
  const auto& d = t.dims();
  const Index rows = d[mode - 1];
  const Index cols = rows == 0 ? 0 : t.size() / rows;
  Eigen::MatrixXd out(rows, cols);
  for (Index m = 0; m < d[2]; ++m)
    for (Index k = 0; k < d[1]; ++k)
      for (Index i = 0; i < d[0]; ++i) {
        const auto [r, c] = unfolded_position(mode, d, i, k, m);
        out(r, c) = t(i, k, m);
      }
  return out;
}

Tensor3 refold(const Eigen::MatrixXd& matrix, int mode, const std::array<Index, 3>& dims) {
  check_mode(mode);
  Tensor3 t(dims[0], dims[1], dims[2]);
  if (matrix.rows() != dims[mode - 1] || matrix.size() != t.size())
    throw DimensionError("refold: matrix shape does not match target dims");
  for (Index m = 0; m < dims[2]; ++m)
    for (Index k = 0; k < dims[1]; ++k)
      for (Index i = 0; i < dims[0]; ++i) {
        const auto [r, c] = unfolded_position(mode, dims, i, k, m);
        t(i, k, m) = matrix(r, c);
      }
  return t;
}

Tensor3 rank1(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  Tensor3 t(a.size(), b.size(), c.size());
  for (Index m = 0; m < c.size(); ++m)
    for (Index k = 0; k < b.size(); ++k) {
      const double bc = b(k) * c(m);
      for (Index i = 0; i < a.size(); ++i) t(i, k, m) = a(i) * bc;
    }
  return t;
}

Eigen::VectorXd kron_vec(const Eigen::VectorXd& c, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(c.size() * b.size());
  for (Index m = 0; m < c.size(); ++m) out.segment(m * b.size(), b.size()) = c(m) * b;
  return out;
}

double weighted_sq_norm(const Tensor3& weights, const Tensor3& residual) {
  if (!weights.same_shape(residual)) throw DimensionError("weighted_sq_norm: shape mismatch");
  const auto w = weights.data();
  const auto r = residual.data();
  double sum = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const double e = w[n] * r[n];
    sum += e * e;
  }
  return sum;
}

}  // namespace sntf
