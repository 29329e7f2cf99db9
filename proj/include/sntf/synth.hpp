#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sntf/factors.hpp"
#include "sntf/panel.hpp"

namespace sntf {

/// Parameters of a synthetic multi-site panel with planted smooth factors.
struct PlantSpec {
  int rank = 3;              // planted components
  int intraday_points = 24;  // uniform grid on [0, 24)
  int sites = 12;
  int days = 120;
  int regimes = 1;           // 2 gives a weekly opening/closing pattern
  int clusters = 3;
  double temp_min = 0.0;
  double temp_max = 20.0;
  double temp_resolution = 1.0;  // temperatures are drawn on this lattice
  double climate_spread = 0.0;   // +- per-site offset of the seasonal temperature
  bool shuffle_seasons = false;  // permute days so day order says nothing about season
  double jitter = 0.02;          // per-site deviation from the cluster template (per entry)
  double noise_sd = 0.0;         // relative to the mean clean load
  std::uint64_t seed = 1;
  /// clusters x (regimes * rank) activation templates; drawn at random when empty.
  Eigen::MatrixXd templates;

  void validate() const;
};

struct PlantedTruth {
  /// A (I x R), B (K x R on `temp_grid`) with unit spline integrals, and C
  /// (E*N x R) rescaled so the product matches the generated loads.
  FactorSet factors;
  TemperatureGrid temp_grid;
  std::vector<int> cluster_labels;     // per site, 0-based
  Eigen::MatrixXd cluster_templates;   // clusters x (E*R)
};

struct SyntheticPanel {
  LoadPanel panel;
  PlantedTruth truth;
};

/// Deterministic in `spec.seed`. Loads follow
/// X_{j,n}(u) = sum_r a_r(u) b_r(T_{j,n}) c_{n,r}^{(e_{j,n})} plus Gaussian noise
/// clipped at zero.
SyntheticPanel generate(const PlantSpec& spec);

/// Raised-cosine bump on the 24 h circle, 1 at `center`, 0 beyond `half_width`.
double circular_bump(double hour, double center, double half_width);

}  // namespace sntf
