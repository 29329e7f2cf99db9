#include "sntf/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sntf/errors.hpp"

namespace sntf {

LoadPanel::LoadPanel(std::vector<double> intraday_grid, std::vector<std::string> sites,
                     std::vector<std::string> days, int regime_count, bool has_temperatures)
    : intraday_grid_(std::move(intraday_grid)),
      sites_(std::move(sites)),
      days_(std::move(days)),
      regime_count_(regime_count),
      has_temperatures_(has_temperatures) {
  if (regime_count_ < 1) throw InputError("regime count must be at least 1");
  for (std::size_t i = 0; i < intraday_grid_.size(); ++i) {
    const double u = intraday_grid_[i];
    if (!(u >= 0.0 && u < 24.0)) throw InvalidGridError("intra-day times must lie in [0, 24)");
    if (i > 0 && !(u > intraday_grid_[i - 1]))
      throw InvalidGridError("intra-day times must be strictly increasing");
  }
  const std::size_t cells = sites_.size() * days_.size();
  observed_.assign(cells, 0);
  temps_.assign(cells, std::numeric_limits<double>::quiet_NaN());
  regimes_.assign(cells, 0);
  loads_.assign(cells * intraday_grid_.size(), 0.0);
}

void LoadPanel::set_day(Index day, Index site, std::span<const double> curve, double temperature,
                        int regime) {
  if (static_cast<Index>(curve.size()) != intraday_size())
    throw DimensionError("day curve length does not match the intra-day grid");
  if (std::any_of(curve.begin(), curve.end(), [](double x) { return !std::isfinite(x); })) {
    mask_day(day, site);
    return;
  }
  const Index c = cell(day, site);
  observed_[c] = 1;
  temps_[c] = has_temperatures_ ? temperature : std::numeric_limits<double>::quiet_NaN();
  regimes_[c] = regime;
  std::copy(curve.begin(), curve.end(), loads_.begin() + c * intraday_size());
}

void LoadPanel::mask_day(Index day, Index site) {
  const Index c = cell(day, site);
  observed_[c] = 0;
  temps_[c] = std::numeric_limits<double>::quiet_NaN();
  regimes_[c] = 0;
  std::fill_n(loads_.begin() + c * intraday_size(), intraday_size(), 0.0);
}

void LoadPanel::divide_site(Index site, double divisor) {
  for (Index j = 0; j < day_count(); ++j) {
    const Index c = cell(j, site);
    for (Index i = 0; i < intraday_size(); ++i) loads_[c * intraday_size() + i] /= divisor;
  }
}

void LoadPanel::validate() const {
  for (Index j = 0; j < day_count(); ++j)
    for (Index n = 0; n < site_count(); ++n) {
      if (!observed(j, n)) continue;
      if (has_temperatures_ && !std::isfinite(temperature(j, n)))
        throw InputError("site " + sites_[n] + " day " + days_[j] + ": missing temperature");
      const int e = regime(j, n);
      if (e < 1 || e > regime_count_)
        throw InputError("site " + sites_[n] + " day " + days_[j] + ": regime out of range");
    }
}

NormalizedPanel normalize_by_daily_mean(const LoadPanel& panel) {
  NormalizedPanel out{panel, std::vector<double>(panel.site_count(), 0.0)};
  const Index I = panel.intraday_size();
  for (Index n = 0; n < panel.site_count(); ++n) {
    double sum_of_means = 0.0;
    Index days = 0;
    for (Index j = 0; j < panel.day_count(); ++j) {
      if (!panel.observed(j, n)) continue;
      sum_of_means += panel.curve(j, n).sum() / static_cast<double>(I);
      ++days;
    }
    if (days == 0) throw DegenerateDataError("site " + panel.sites()[n] + " has no observed day");
    const double scale = sum_of_means / static_cast<double>(days);
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw DegenerateDataError("site " + panel.sites()[n] + " has zero average daily consumption");
    out.scales[n] = scale;
    out.panel.divide_site(n, scale);
  }
  return out;
}

TemperatureGrid::TemperatureGrid(double resolution, std::vector<long long> steps)
    : resolution_(resolution), steps_(std::move(steps)) {
  std::sort(steps_.begin(), steps_.end());
  steps_.erase(std::unique(steps_.begin(), steps_.end()), steps_.end());
  knots_.reserve(steps_.size());
  for (long long s : steps_) knots_.push_back(static_cast<double>(s) * resolution_);
}

std::optional<Index> TemperatureGrid::bin_of(double temperature) const {
  if (!std::isfinite(temperature)) return std::nullopt;
  const long long step = std::llround(temperature / resolution_);
  const auto it = std::lower_bound(steps_.begin(), steps_.end(), step);
  if (it == steps_.end() || *it != step) return std::nullopt;
  return static_cast<Index>(it - steps_.begin());
}

TemperatureGrid build_temperature_grid(const LoadPanel& panel, double resolution) {
  if (!(resolution > 0.0) || !std::isfinite(resolution))
    throw InputError("temperature resolution must be positive");
  if (!panel.has_temperatures()) throw InputError("panel has no temperatures");
  std::vector<long long> steps;
  for (Index j = 0; j < panel.day_count(); ++j)
    for (Index n = 0; n < panel.site_count(); ++n)
      if (panel.observed(j, n)) steps.push_back(std::llround(panel.temperature(j, n) / resolution));
  TemperatureGrid grid(resolution, std::move(steps));
  if (grid.size() < 2)
    throw DegenerateDataError("temperature grid too coarse: " + std::to_string(grid.size()) +
                              " distinct value(s) at resolution " + std::to_string(resolution));
  return grid;
}

WeightedTensorPair assemble_tensors(const LoadPanel& panel, const TemperatureGrid& temp_grid) {
  if (!panel.has_temperatures()) throw InputError("panel has no temperatures");
  const Index I = panel.intraday_size();
  const Index K = temp_grid.size();
  const Index N = panel.site_count();
  const Index M = N * panel.regime_count();

  // Bin of each observed cell, -1 when masked.
  std::vector<Index> bin(panel.day_count() * N, -1);
  std::vector<double> counts(K * M, 0.0);
  Tensor3 sums(I, K, M);
  for (Index j = 0; j < panel.day_count(); ++j)
    for (Index n = 0; n < N; ++n) {
      if (!panel.observed(j, n)) continue;
      const auto k = temp_grid.bin_of(panel.temperature(j, n));
      if (!k)
        throw InputError("internal inconsistency: temperature " +
                         std::to_string(panel.temperature(j, n)) + " is not on the grid");
      const Index m = slab_index(panel.regime(j, n), n, N);
      bin[j * N + n] = *k;
      counts[*k + K * m] += 1.0;
      const auto curve = panel.curve(j, n);
      for (Index i = 0; i < I; ++i) sums(i, *k, m) += curve(i);
    }

  WeightedTensorPair out{Tensor3(I, K, M), Tensor3(I, K, M), temp_grid, 0.0};
  for (Index m = 0; m < M; ++m)
    for (Index k = 0; k < K; ++k) {
      const double count = counts[k + K * m];
      if (count == 0.0) continue;
      const double w = std::sqrt(count);
      for (Index i = 0; i < I; ++i) {
        out.W(i, k, m) = w;
        out.X(i, k, m) = sums(i, k, m) / count;
      }
    }

  double variance = 0.0;
  for (Index j = 0; j < panel.day_count(); ++j)
    for (Index n = 0; n < N; ++n) {
      const Index k = bin[j * N + n];
      if (k < 0) continue;
      const Index m = slab_index(panel.regime(j, n), n, N);
      const auto curve = panel.curve(j, n);
      for (Index i = 0; i < I; ++i) {
        const double d = curve(i) - out.X(i, k, m);
        variance += d * d;
      }
    }
  out.within_bin_variance = variance;
  return out;
}

double functional_objective(const LoadPanel& panel, const FactorSet& f,
                            const TemperatureGrid& temp_grid, const SplineSystem& intraday,
                            const SplineSystem& thermal, double alpha, double beta) {
  const Index N = panel.site_count();
  const Index R = f.rank();
  if (f.A.rows() != panel.intraday_size() || f.B.rows() != temp_grid.size() ||
      f.C.rows() != N * panel.regime_count() || f.B.cols() != R || f.C.cols() != R)
    throw DimensionError("functional_objective: factor dimensions do not match the panel");
  if (intraday.size() != f.A.rows() || thermal.size() != f.B.rows())
    throw DimensionError("functional_objective: spline systems do not match the factors");

  double loss = 0.0;
  for (Index j = 0; j < panel.day_count(); ++j)
    for (Index n = 0; n < N; ++n) {
      if (!panel.observed(j, n)) continue;
      const auto k = temp_grid.bin_of(panel.temperature(j, n));
      if (!k) throw InputError("internal inconsistency: temperature is not on the grid");
      const Index m = slab_index(panel.regime(j, n), n, N);
      for (Index i = 0; i < panel.intraday_size(); ++i) {
        double model = 0.0;
        for (Index r = 0; r < R; ++r) model += f.A(i, r) * f.B(*k, r) * f.C(m, r);
        const double d = panel.load(j, n, i) - model;
        loss += d * d;
      }
    }

  double pen = 0.0;
  for (Index r = 0; r < R; ++r)
    pen += alpha * intraday.penalty(f.A.col(r)) + beta * thermal.penalty(f.B.col(r));
  return loss + pen;
}

DayTensor day_tensor(const LoadPanel& panel) {
  const Index I = panel.intraday_size();
  DayTensor out{Tensor3(I, panel.day_count(), panel.site_count()),
                Tensor3(I, panel.day_count(), panel.site_count())};
  for (Index n = 0; n < panel.site_count(); ++n)
    for (Index j = 0; j < panel.day_count(); ++j) {
      if (!panel.observed(j, n)) continue;
      const auto curve = panel.curve(j, n);
      for (Index i = 0; i < I; ++i) {
        out.loads(i, j, n) = curve(i);
        out.mask(i, j, n) = 1.0;
      }
    }
  return out;
}

}  // namespace sntf
