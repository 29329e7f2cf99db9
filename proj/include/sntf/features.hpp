#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sntf {

/// N x (E*R) matrix; row n is (c_{n,.}^{(1)}, ..., c_{n,.}^{(E)}).
Eigen::MatrixXd site_features(const Eigen::MatrixXd& C, int regime_count, Eigen::Index site_count);

struct KMeansResult {
  std::vector<int> labels;  // 0-based cluster per point
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  /// Inertia after each assignment step of the winning restart.
  std::vector<double> inertia_trace;
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` by inertia.
/// Points are rows. Restart s draws from a generator seeded with seed + s.
/// An empty cluster is re-seeded at the point farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts = 10,
                    int max_iterations = 300);

/// Mean silhouette with Euclidean distance; singleton clusters score 0 and
/// 0/0 is taken as 0. Throws InputError with fewer than two clusters.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels);

/// Pair-counting adjusted Rand index. Two trivial partitions compare as 1.
double adjusted_rand_index(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

struct KSelection {
  int k = 0;
  std::vector<int> labels;
  /// silhouette per candidate k, indexed from k_min.
  std::vector<double> scores;
};

/// k in [k_min, k_max] maximizing the silhouette of its k-means partition
/// (smallest k on ties).
KSelection select_k_by_silhouette(const Eigen::MatrixXd& points, int k_min, int k_max,
                                  std::uint64_t seed, int restarts = 10);

}  // namespace sntf
