#include "sntf/spline.hpp"

#include <cmath>
#include <string>

#include "sntf/errors.hpp"

namespace sntf {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_increasing(const std::vector<double>& grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]))
      throw InvalidGridError("spline grid contains a non-finite knot");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw InvalidGridError("spline grid must be strictly increasing (knot " +
                             std::to_string(i) + ")");
  }
}

// Second derivatives at the knots are gamma = G g, where
//   R gamma = D' g
// is the usual spline continuity system: R holds the h/6, (h+h')/3 overlaps and
// D' the divided second differences. The penalty is then gamma' R gamma, i.e.
// Q = D R^{-1} D', and each interval [t_i, t_i + h_i] contributes
//   h_i (g_i + g_{i+1}) / 2 - h_i^3 (gamma_i + gamma_{i+1}) / 24
// to the integral.
struct Assembled {
  MatrixXd penalty;
  VectorXd weights;
};

// `spacing[j]` joins knot j to knot (j+1) mod n; `unknowns` lists the knots
// whose second derivative is free (the rest are pinned to zero).
Assembled assemble(const std::vector<double>& spacing, Index n, const std::vector<Index>& unknowns) {
  const Index p = static_cast<Index>(unknowns.size());
  const Index intervals = static_cast<Index>(spacing.size());

  MatrixXd penalty = MatrixXd::Zero(n, n);
  VectorXd weights = VectorXd::Zero(n);
  for (Index j = 0; j < intervals; ++j) {
    const Index next = (j + 1) % n;
    weights(j) += spacing[j] / 2.0;
    weights(next) += spacing[j] / 2.0;
  }
  if (p == 0) return {penalty, weights};

  MatrixXd r = MatrixXd::Zero(p, p);
  MatrixXd dt = MatrixXd::Zero(p, n);  // D'
  for (Index row = 0; row < p; ++row) {
    const Index i = unknowns[row];
    const Index prev = (i - 1 + n) % n;
    const double h_prev = spacing[prev];
    const double h_next = spacing[i];
    r(row, row) += (h_prev + h_next) / 3.0;
    for (Index col = 0; col < p; ++col) {
      if (col == row) continue;
      if (unknowns[col] == prev) r(row, col) += h_prev / 6.0;
      if (unknowns[col] == (i + 1) % n) r(row, col) += h_next / 6.0;
    }
    dt(row, prev) += 1.0 / h_prev;
    dt(row, i) -= 1.0 / h_prev + 1.0 / h_next;
    dt(row, (i + 1) % n) += 1.0 / h_next;
  }

  Eigen::LDLT<MatrixXd> ldlt(r);
  const MatrixXd gamma_free = ldlt.solve(dt);  // p x n
  penalty = dt.transpose() * gamma_free;
  penalty = 0.5 * (penalty + penalty.transpose()).eval();

  MatrixXd gamma = MatrixXd::Zero(n, n);
  for (Index row = 0; row < p; ++row) gamma.row(unknowns[row]) = gamma_free.row(row);

  for (Index j = 0; j < intervals; ++j) {
    const double c = spacing[j] * spacing[j] * spacing[j] / 24.0;
    weights -= c * (gamma.row(j) + gamma.row((j + 1) % n)).transpose();
  }
  return {penalty, weights};
}

}  // namespace

SplineSystem natural_spline_system(std::vector<double> grid) {
  if (grid.size() < 2) throw InvalidGridError("natural spline grid needs at least 2 knots");
  require_increasing(grid);

  const Index n = static_cast<Index>(grid.size());
  std::vector<double> spacing(grid.size() - 1);
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) spacing[j] = grid[j + 1] - grid[j];
  std::vector<Index> unknowns;
  for (Index i = 1; i + 1 < n; ++i) unknowns.push_back(i);

  auto assembled = assemble(spacing, n, unknowns);
  SplineSystem s;
  s.kind_ = SplineKind::natural;
  s.grid_ = std::move(grid);
  s.weights_ = std::move(assembled.weights);
  s.penalty_ = std::move(assembled.penalty);
  return s;
}

SplineSystem periodic_spline_system(std::vector<double> grid, double period) {
  if (!(period > 0.0) || !std::isfinite(period))
    throw InvalidGridError("periodic spline period must be positive");
  if (grid.size() < 3) throw InvalidGridError("periodic spline grid needs at least 3 knots");
  require_increasing(grid);
  if (grid.front() < 0.0 || grid.back() >= period)
    throw InvalidGridError("periodic spline knots must lie in [0, period)");

  const Index n = static_cast<Index>(grid.size());
  std::vector<double> spacing(grid.size());
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) spacing[j] = grid[j + 1] - grid[j];
  spacing.back() = period - grid.back() + grid.front();
  std::vector<Index> unknowns(grid.size());
  for (Index i = 0; i < n; ++i) unknowns[i] = i;

  auto assembled = assemble(spacing, n, unknowns);
  SplineSystem s;
  s.kind_ = SplineKind::periodic;
  s.period_ = period;
  s.grid_ = std::move(grid);
  s.weights_ = std::move(assembled.weights);
  s.penalty_ = std::move(assembled.penalty);
  return s;
}

double SplineSystem::integral(const VectorXd& g) const {
  if (g.size() != size())
    throw DimensionError("integral: expected " + std::to_string(size()) + " samples, got " +
                         std::to_string(g.size()));
  return weights_.dot(g);
}

double SplineSystem::penalty(const VectorXd& g) const {
  if (g.size() != size())
    throw DimensionError("penalty: expected " + std::to_string(size()) + " samples, got " +
                         std::to_string(g.size()));
  const double value = g.dot(penalty_ * g);
  if (value < 0.0) {
    const double threshold = 1e-12 * penalty_.norm() * g.squaredNorm();
    if (-value <= threshold) return 0.0;
  }
  return value;
}

}  // namespace sntf
