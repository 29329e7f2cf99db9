#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sntf/factors.hpp"
#include "sntf/spline.hpp"
#include "sntf/tensor.hpp"

namespace sntf {

/// Daily load curves X_{j,n}(u_i) for J days, N sites and I intra-day times,
/// with a per-(day, site) temperature and consumption regime. Unobserved
/// (day, site) cells are masked and excluded from every aggregate.
class LoadPanel {
 public:
  LoadPanel() = default;
  LoadPanel(std::vector<double> intraday_grid, std::vector<std::string> sites,
            std::vector<std::string> days, int regime_count, bool has_temperatures);

  Index intraday_size() const { return static_cast<Index>(intraday_grid_.size()); }
  Index site_count() const { return static_cast<Index>(sites_.size()); }
  Index day_count() const { return static_cast<Index>(days_.size()); }
  int regime_count() const { return regime_count_; }
  bool has_temperatures() const { return has_temperatures_; }

  const std::vector<double>& intraday_grid() const { return intraday_grid_; }
  const std::vector<std::string>& sites() const { return sites_; }
  const std::vector<std::string>& days() const { return days_; }

  bool observed(Index day, Index site) const { return observed_[cell(day, site)] != 0; }
  double temperature(Index day, Index site) const { return temps_[cell(day, site)]; }
  int regime(Index day, Index site) const { return regimes_[cell(day, site)]; }
  double load(Index day, Index site, Index i) const { return loads_[cell(day, site) * intraday_size() + i]; }

  /// Read-only view of one day's curve (length I).
  Eigen::Map<const Eigen::VectorXd> curve(Index day, Index site) const {
    return {loads_.data() + cell(day, site) * intraday_size(), intraday_size()};
  }

  /// Marks (day, site) observed with the given curve. `temperature` is ignored
  /// for panels without temperatures. A curve containing NaN invalidates the day.
  void set_day(Index day, Index site, std::span<const double> curve, double temperature, int regime);
  void mask_day(Index day, Index site);
  void divide_site(Index site, double divisor);

  /// Throws InputError if an observed cell has a non-finite temperature or an out-of-range regime.
  void validate() const;

 private:
  Index cell(Index day, Index site) const { return day * site_count() + site; }

  std::vector<double> intraday_grid_;
  std::vector<std::string> sites_;
  std::vector<std::string> days_;
  int regime_count_ = 1;
  bool has_temperatures_ = true;
  std::vector<char> observed_;
  std::vector<double> temps_;
  std::vector<int> regimes_;
  std::vector<double> loads_;
};

struct NormalizedPanel {
  LoadPanel panel;
  /// Per-site average daily consumption; multiply to undo the normalization.
  std::vector<double> scales;
};

/// Divides each site by its average daily consumption (mean over observed days
/// of the day's mean load). Throws DegenerateDataError naming the site when a
/// site has no observed day or a zero average.
NormalizedPanel normalize_by_daily_mean(const LoadPanel& panel);

/// Temperatures quantized to multiples of `resolution`.
class TemperatureGrid {
 public:
  TemperatureGrid() = default;
  TemperatureGrid(double resolution, std::vector<long long> steps);

  double resolution() const { return resolution_; }
  const std::vector<double>& knots() const { return knots_; }
  Index size() const { return static_cast<Index>(knots_.size()); }

  /// Bin of a temperature, or nullopt if its rounded value is not a knot.
  std::optional<Index> bin_of(double temperature) const;

 private:
  double resolution_ = 1.0;
  std::vector<long long> steps_;
  std::vector<double> knots_;
};

/// Sorted unique rounded temperatures over observed cells. Throws InputError
/// for a non-positive resolution and DegenerateDataError when fewer than two
/// bins remain.
TemperatureGrid build_temperature_grid(const LoadPanel& panel, double resolution = 1.0);

struct WeightedTensorPair {
  Tensor3 W;  // sqrt of day counts per (temperature bin, regime, site), constant in i
  Tensor3 X;  // bin average of the load curves; 0 where W is 0
  TemperatureGrid temp_grid;
  /// sum over bins of the squared deviations of member days from the bin
  /// average. F = L_W + within_bin_variance for any factors.
  double within_bin_variance = 0.0;
};

/// Slab index of (site, regime) in the third mode: (regime - 1) * N + site.
inline Index slab_index(int regime, Index site, Index site_count) {
  return static_cast<Index>(regime - 1) * site_count + site;
}

WeightedTensorPair assemble_tensors(const LoadPanel& panel, const TemperatureGrid& temp_grid);

/// F + P evaluated directly over observed (i, j, n), with b_r looked up at the
/// bin of T_{j,n}. Used as an independent check on the tensor objective.
double functional_objective(const LoadPanel& panel, const FactorSet& factors,
                            const TemperatureGrid& temp_grid, const SplineSystem& intraday,
                            const SplineSystem& thermal, double alpha, double beta);

/// The I x J x N tensor of raw daily curves used by the baseline NTF, and the
/// matching 0/1 observation mask.
struct DayTensor {
  Tensor3 loads;
  Tensor3 mask;
};
DayTensor day_tensor(const LoadPanel& panel);

// CSV panel format: loads `site,day,time,load` (time HH:MM), temperatures
// `site,day,temp`, regimes `site,day,regime` (1-based). A (site, day) pair is
// observed only if it has a load at every intra-day time seen in the file and,
// when the corresponding files are given, a temperature and a regime.
struct PanelFiles {
  std::filesystem::path loads;
  std::optional<std::filesystem::path> temps;
  std::optional<std::filesystem::path> regimes;
};

LoadPanel read_panel_csv(const PanelFiles& files);
void write_panel_csv(const LoadPanel& panel, const PanelFiles& files);

/// "HH:MM" <-> hours. Throws InputError on malformed text.
double parse_clock(const std::string& text);
std::string format_clock(double hours);

}  // namespace sntf
