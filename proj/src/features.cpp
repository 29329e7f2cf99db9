#include "sntf/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "sntf/errors.hpp"

namespace sntf {

using Eigen::Index;
using Eigen::MatrixXd;

MatrixXd site_features(const MatrixXd& C, int regime_count, Index site_count) {
  if (regime_count < 1 || C.rows() != regime_count * site_count)
    throw DimensionError("site_features: C has " + std::to_string(C.rows()) + " rows, expected " +
                         std::to_string(regime_count * site_count));
  const Index R = C.cols();
  MatrixXd out(site_count, regime_count * R);
  for (Index n = 0; n < site_count; ++n)
    for (int e = 0; e < regime_count; ++e) out.row(n).segment(e * R, R) = C.row(e * site_count + n);
  return out;
}

namespace {

struct Lloyd {
  std::vector<int> labels;
  MatrixXd centroids;
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
};

MatrixXd plus_plus_seeds(const MatrixXd& points, int k, std::mt19937_64& rng) {
  const Index n = points.rows();
  MatrixXd centroids(k, points.cols());
  std::uniform_int_distribution<Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));
  std::vector<double> d2(n);
  for (Index p = 0; p < n; ++p) d2[p] = (points.row(p) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Index pick = 0;
    if (total > 0.0) {
      std::discrete_distribution<Index> draw(d2.begin(), d2.end());
      pick = draw(rng);
    } else {
      pick = first(rng);
    }
    centroids.row(c) = points.row(pick);
    for (Index p = 0; p < n; ++p)
      d2[p] = std::min(d2[p], (points.row(p) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

Lloyd run_lloyd(const MatrixXd& points, int k, std::mt19937_64& rng, int max_iterations) {
  const Index n = points.rows();
  Lloyd out;
  out.centroids = plus_plus_seeds(points, k, rng);
  out.labels.assign(n, -1);
  std::vector<double> dist(n);

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (Index p = 0; p < n; ++p) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.row(p) - out.centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (out.labels[p] != best) changed = true;
      out.labels[p] = best;
      dist[p] = best_d;
      inertia += best_d;
    }
    out.inertia = inertia;
    out.trace.push_back(inertia);
    if (!changed && iter > 0) break;

    MatrixXd sums = MatrixXd::Zero(k, points.cols());
    std::vector<Index> counts(k, 0);
    for (Index p = 0; p < n; ++p) {
      sums.row(out.labels[p]) += points.row(p);
      ++counts[out.labels[p]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        out.centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      const Index far = std::max_element(dist.begin(), dist.end()) - dist.begin();
      out.centroids.row(c) = points.row(far);
      dist[far] = 0.0;
    }
  }
  return out;
}

}  // namespace

KMeansResult kmeans(const MatrixXd& points, int k, std::uint64_t seed, int restarts,
                    int max_iterations) {
  if (k < 1) throw InputError("kmeans: k must be at least 1");
  if (k > points.rows())
    throw InputError("kmeans: k = " + std::to_string(k) + " exceeds the number of points (" +
                     std::to_string(points.rows()) + ")");
  if (restarts < 1) throw InputError("kmeans: restarts must be at least 1");

  Lloyd best;
  for (int s = 0; s < restarts; ++s) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(s));
    Lloyd trial = run_lloyd(points, k, rng, max_iterations);
    if (trial.inertia < best.inertia) best = std::move(trial);
  }
  return {std::move(best.labels), std::move(best.centroids), best.inertia, std::move(best.trace)};
}

double silhouette(const MatrixXd& points, const std::vector<int>& labels) {
  const Index n = points.rows();
  if (static_cast<Index>(labels.size()) != n) throw DimensionError("silhouette: label count mismatch");
  std::map<int, Index> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw InputError("silhouette needs at least two clusters");

  double total = 0.0;
  for (Index p = 0; p < n; ++p) {
    if (sizes[labels[p]] == 1) continue;
    std::map<int, double> sum_to;
    for (Index q = 0; q < n; ++q) {
      if (q == p) continue;
      sum_to[labels[q]] += (points.row(p) - points.row(q)).norm();
    }
    const double a = sum_to[labels[p]] / static_cast<double>(sizes[labels[p]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, size] : sizes)
      if (label != labels[p]) b = std::min(b, sum_to[label] / static_cast<double>(size));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double adjusted_rand_index(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw DimensionError("adjusted_rand_index: labelings have different lengths");
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t p = 0; p < labels_a.size(); ++p) {
    table[{labels_a[p], labels_b[p]}] += 1.0;
    rows[labels_a[p]] += 1.0;
    cols[labels_b[p]] += 1.0;
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [cell, count] : table) index += choose2(count);
  for (const auto& [label, count] : rows) sum_rows += choose2(count);
  for (const auto& [label, count] : cols) sum_cols += choose2(count);
  const double pairs = choose2(static_cast<double>(labels_a.size()));
  // Scaled by the pair count so numerator and denominator stay exact integers
  // (or halves); the ratio is then correctly rounded.
  const double num = pairs * index - sum_rows * sum_cols;
  const double den = 0.5 * pairs * (sum_rows + sum_cols) - sum_rows * sum_cols;
  if (den == 0.0) return 1.0;
  return num / den;
}

KSelection select_k_by_silhouette(const MatrixXd& points, int k_min, int k_max, std::uint64_t seed,
                                  int restarts) {
  if (k_min < 2 || k_max < k_min) throw InputError("select_k_by_silhouette: need 2 <= k_min <= k_max");
  if (k_max > points.rows())
    throw InputError("select_k_by_silhouette: k_max exceeds the number of points");
  KSelection out;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    auto km = kmeans(points, k, seed, restarts);
    // Identical points can leave fewer distinct clusters than k.
    std::vector<int> distinct = km.labels;
    std::sort(distinct.begin(), distinct.end());
    const bool usable = std::unique(distinct.begin(), distinct.end()) - distinct.begin() >= 2;
    const double score = usable ? silhouette(points, km.labels) : -1.0;
    out.scores.push_back(score);
    if (score > best) {
      best = score;
      out.k = k;
      out.labels = std::move(km.labels);
    }
  }
  return out;
}

}  // namespace sntf
