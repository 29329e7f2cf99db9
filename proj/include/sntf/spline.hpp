#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sntf {

enum class SplineKind { natural, periodic };

/// Quadrature weights and curvature penalty for cubic splines sampled on a grid.
///
/// For the interpolating spline s of the given kind through (grid, g):
///   integral(g) = v'g = \int s      and      penalty(g) = g'Qg = \int (s'')^2.
/// Natural splines live on [grid.front(), grid.back()]; periodic splines on
/// [0, period), with the wrap spacing period - grid.back() + grid.front().
class SplineSystem {
 public:
  SplineKind kind() const { return kind_; }
  double period() const { return period_; }
  const std::vector<double>& grid() const { return grid_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(grid_.size()); }

  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& penalty_matrix() const { return penalty_; }

  double integral(const Eigen::VectorXd& g) const;
  double penalty(const Eigen::VectorXd& g) const;

 private:
  friend SplineSystem natural_spline_system(std::vector<double> grid);
  friend SplineSystem periodic_spline_system(std::vector<double> grid, double period);

  SplineKind kind_ = SplineKind::natural;
  double period_ = 0.0;
  std::vector<double> grid_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd penalty_;
};

/// Throws InvalidGridError unless grid has >= 2 strictly increasing knots.
SplineSystem natural_spline_system(std::vector<double> grid);

/// Throws InvalidGridError unless grid has >= 3 strictly increasing knots in [0, period).
SplineSystem periodic_spline_system(std::vector<double> grid, double period);

inline double integral(const SplineSystem& s, const Eigen::VectorXd& g) { return s.integral(g); }
inline double penalty(const SplineSystem& s, const Eigen::VectorXd& g) { return s.penalty(g); }

}  // namespace sntf
