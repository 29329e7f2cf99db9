#include "sntf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "sntf/errors.hpp"
#include "sntf/spline.hpp"

namespace sntf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void PlantSpec::validate() const {
  if (rank < 1 || intraday_points < 3 || sites < 1 || days < 1 || regimes < 1 || clusters < 1)
    throw InputError("plant spec: sizes must be positive (intraday_points >= 3)");
  if (clusters > sites) throw InputError("plant spec: more clusters than sites");
  if (!(temp_max > temp_min)) throw InputError("plant spec: temp_max must exceed temp_min");
  if (!(temp_resolution > 0.0)) throw InputError("plant spec: temp_resolution must be positive");
  if (noise_sd < 0.0 || jitter < 0.0 || climate_spread < 0.0)
    throw InputError("plant spec: noise_sd, jitter and climate_spread must be nonnegative");
  if (templates.size() != 0 && (templates.rows() != clusters || templates.cols() != regimes * rank))
    throw InputError("plant spec: templates must be clusters x (regimes * rank)");
}

double circular_bump(double hour, double center, double half_width) {
  double d = std::fmod(std::abs(hour - center), 24.0);
  d = std::min(d, 24.0 - d);
  if (d >= half_width) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * d / half_width));
}

namespace {

struct Signature {
  std::vector<double> centers, widths, heights;
  double base = 0.05;
  double operator()(double hour) const {
    double v = base;
    for (std::size_t b = 0; b < centers.size(); ++b) v += heights[b] * circular_bump(hour, centers[b], widths[b]);
    return v;
  }
};

// Heating ramps (falling with temperature), cooling ramps (rising), U-shapes
// and flat responses, cycled over components.
struct Thermal {
  int shape = 0;
  double low = 0.0, high = 0.0, slope = 1.0, base = 0.1;
  double operator()(double t) const {
    auto logistic = [&](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    switch (shape) {
      case 0: return base + logistic((t - high) * slope);
      case 1: return base + logistic((low - t) * slope);
      case 2: {
        // Quadratic bowl with its minimum between low and high; not a
        // combination of the two ramps.
        const double u = (t - 0.5 * (low + high)) * slope / 4.0;
        return base + u * u;
      }
      default: return base + 0.5;
    }
  }
};

std::string padded(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, value);
  return buf;
}

int digits(int n) { return static_cast<int>(std::to_string(std::max(n, 1)).size()); }

MatrixXd draw_templates(const PlantSpec& spec, std::mt19937_64& rng) {
  const int dim = spec.regimes * spec.rank;
  std::uniform_real_distribution<double> entry(0.1, 1.2);
  const double spread = spec.jitter * std::sqrt(static_cast<double>(dim));
  const double min_distance = std::max(5.0 * spread, 0.3);
  MatrixXd t(spec.clusters, dim);
  for (int q = 0; q < spec.clusters; ++q) {
    for (int attempt = 0;; ++attempt) {
      for (int d = 0; d < dim; ++d) t(q, d) = entry(rng);
      bool ok = true;
      for (int p = 0; p < q && ok; ++p) ok = (t.row(q) - t.row(p)).norm() >= min_distance;
      if (ok) break;
      if (attempt > 10000) throw InputError("plant spec: cannot separate cluster templates");
    }
  }
  return t;
}

}  // namespace

SyntheticPanel generate(const PlantSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int R = spec.rank, I = spec.intraday_points, N = spec.sites, J = spec.days, E = spec.regimes;

  std::vector<Signature> signatures(R);
  for (int r = 0; r < R; ++r) {
    auto& s = signatures[r];
    const int bumps = 1 + static_cast<int>(unit(rng) < 0.5);
    for (int b = 0; b < bumps; ++b) {
      s.centers.push_back(24.0 * (r + unit(rng)) / R + 12.0 * b);
      s.widths.push_back(3.0 + 3.0 * unit(rng));
      s.heights.push_back(0.5 + unit(rng));
    }
  }
  const double span = spec.temp_max - spec.temp_min;
  std::vector<Thermal> thermals(R);
  for (int r = 0; r < R; ++r) {
    auto& th = thermals[r];
    th.shape = r % 4;
    th.low = spec.temp_min + span * (0.25 + 0.1 * unit(rng));
    th.high = spec.temp_min + span * (0.65 + 0.1 * unit(rng));
    th.slope = 8.0 / span;
  }

  const MatrixXd templates = spec.templates.size() != 0 ? spec.templates : draw_templates(spec, rng);
  std::vector<int> labels(N);
  for (int n = 0; n < N; ++n) labels[n] = n % spec.clusters;
  std::shuffle(labels.begin(), labels.end(), rng);

  // c(slab, r) before normalization, slab = (e-1)N + n.
  MatrixXd activations(E * N, R);
  for (int n = 0; n < N; ++n)
    for (int e = 0; e < E; ++e)
      for (int r = 0; r < R; ++r) {
        const double c = templates(labels[n], e * R + r) + spec.jitter * (2.0 * unit(rng) - 1.0);
        activations(e * N + n, r) = std::max(0.0, c);
      }

  std::vector<int> season(J);
  for (int j = 0; j < J; ++j) season[j] = j;
  if (spec.shuffle_seasons) std::shuffle(season.begin(), season.end(), rng);
  std::vector<double> climate(N);
  for (int n = 0; n < N; ++n) climate[n] = spec.climate_spread * (2.0 * unit(rng) - 1.0);

  std::vector<double> grid(I);
  for (int i = 0; i < I; ++i) grid[i] = 24.0 * i / I;
  std::vector<std::string> site_ids(N), day_ids(J);
  for (int n = 0; n < N; ++n) site_ids[n] = padded("s", n + 1, digits(N));
  for (int j = 0; j < J; ++j) day_ids[j] = padded("d", j + 1, digits(J));

  MatrixXd sig(I, R);
  for (int i = 0; i < I; ++i)
    for (int r = 0; r < R; ++r) sig(i, r) = signatures[r](grid[i]);

  // Clean loads and temperatures first so the noise level can be set relative to them.
  const double mid = 0.5 * (spec.temp_min + spec.temp_max);
  std::vector<double> temps(static_cast<std::size_t>(J) * N);
  std::vector<int> regimes(static_cast<std::size_t>(J) * N);
  std::vector<double> clean(static_cast<std::size_t>(J) * N * I);
  for (int j = 0; j < J; ++j)
    for (int n = 0; n < N; ++n) {
      const double phase = 2.0 * std::numbers::pi * season[j] / J;
      double t = mid - 0.5 * span * std::cos(phase) + climate[n] + 0.5 * gauss(rng);
      t = std::clamp(t, spec.temp_min, spec.temp_max);
      t = static_cast<double>(std::llround(t / spec.temp_resolution)) * spec.temp_resolution;
      const int e = E == 2 ? 1 + static_cast<int>(j % 7 >= 5) : 1 + j % E;
      const std::size_t cell = static_cast<std::size_t>(j) * N + n;
      temps[cell] = t;
      regimes[cell] = e;
      for (int i = 0; i < I; ++i) {
        double x = 0.0;
        for (int r = 0; r < R; ++r) x += sig(i, r) * thermals[r](t) * activations((e - 1) * N + n, r);
        clean[cell * I + i] = x;
      }
    }

  double mean_load = 0.0;
  for (double x : clean) mean_load += x;
  mean_load /= static_cast<double>(clean.size());
  const double sd = spec.noise_sd * mean_load;

  LoadPanel panel(grid, site_ids, day_ids, E, true);
  std::vector<double> curve(I);
  for (int j = 0; j < J; ++j)
    for (int n = 0; n < N; ++n) {
      const std::size_t cell = static_cast<std::size_t>(j) * N + n;
      for (int i = 0; i < I; ++i) {
        const double x = clean[cell * I + i];
        curve[i] = sd > 0.0 ? std::max(0.0, x + sd * gauss(rng)) : x;
      }
      panel.set_day(j, n, curve, temps[cell], regimes[cell]);
    }

  SyntheticPanel out{std::move(panel), {}};
  auto& truth = out.truth;
  truth.temp_grid = build_temperature_grid(out.panel, spec.temp_resolution);
  const auto intraday = periodic_spline_system(grid, 24.0);
  const auto thermal = natural_spline_system(truth.temp_grid.knots());
  const Eigen::Index K = truth.temp_grid.size();
  truth.factors.A = sig;
  truth.factors.B.resize(K, R);
  for (Eigen::Index k = 0; k < K; ++k)
    for (int r = 0; r < R; ++r) truth.factors.B(k, r) = thermals[r](truth.temp_grid.knots()[k]);
  truth.factors.C = activations;
  for (int r = 0; r < R; ++r) {
    const double sa = intraday.integral(truth.factors.A.col(r));
    const double sb = thermal.integral(truth.factors.B.col(r));
    truth.factors.A.col(r) /= sa;
    truth.factors.B.col(r) /= sb;
    truth.factors.C.col(r) *= sa * sb;
  }
  truth.cluster_labels = labels;
  truth.cluster_templates = templates;
  return out;
}

}  // namespace sntf
