#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "sntf/errors.hpp"
#include "sntf/features.hpp"

using namespace sntf;
using Eigen::MatrixXd;

namespace {

struct Blobs {
  MatrixXd points;
  std::vector<int> labels;
};

Blobs make_blobs(int clusters, int per_cluster, int dim, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Blobs b{MatrixXd(clusters * per_cluster, dim), {}};
  for (int c = 0; c < clusters; ++c)
    for (int p = 0; p < per_cluster; ++p) {
      const int row = c * per_cluster + p;
      for (int d = 0; d < dim; ++d) b.points(row, d) = n01(rng) + (d == c % dim ? separation * (1 + c / dim) : 0.0);
      b.labels.push_back(c);
    }
  return b;
}

std::vector<int> random_labels(std::mt19937_64& rng, int n, int k) {
  std::uniform_int_distribution<int> u(0, k - 1);
  std::vector<int> out(n);
  for (auto& l : out) l = u(rng);
  return out;
}

}  // namespace

TEST(SiteFeatures, Examples) {
  MatrixXd C(3, 2);
  C << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(site_features(C, 1, 3), C);

  MatrixXd C2(2, 3);
  C2 << 1, 2, 3, 4, 5, 6;
  const MatrixXd f = site_features(C2, 2, 1);
  ASSERT_EQ(f.rows(), 1);
  ASSERT_EQ(f.cols(), 6);
  for (int j = 0; j < 6; ++j) EXPECT_EQ(f(0, j), j + 1);

  const MatrixXd g = site_features(MatrixXd::Random(8, 3), 2, 4);
  EXPECT_EQ(g.rows(), 4);
  EXPECT_EQ(g.cols(), 6);
  EXPECT_THROW(site_features(C, 2, 2), DimensionError);
}

TEST(KMeans, DuplicatedPairs) {
  MatrixXd x(4, 2);
  x << 0, 0, 0, 0, 10, 10, 10, 10;
  const auto r = kmeans(x, 2, 1);
  EXPECT_EQ(r.inertia, 0.0);
  EXPECT_EQ(r.labels[0], r.labels[1]);
  EXPECT_EQ(r.labels[2], r.labels[3]);
  EXPECT_NE(r.labels[0], r.labels[2]);
}

TEST(KMeans, OneClusterPerPoint) {
  std::mt19937_64 rng(2);
  const MatrixXd x = MatrixXd::Random(7, 3);
  EXPECT_EQ(kmeans(x, 7, 3).inertia, 0.0);
}

TEST(KMeans, TooManyClusters) { EXPECT_THROW(kmeans(MatrixXd::Zero(3, 2), 4, 0), InputError); }

TEST(KMeans, SeparatedBlobs) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto b = make_blobs(3, 15, 2, 12.0, seed);
    EXPECT_EQ(adjusted_rand_index(kmeans(b.points, 3, seed).labels, b.labels), 1.0);
  }
}

TEST(KMeans, InertiaNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    MatrixXd x(40, 3);
    for (double& v : x.reshaped()) v = n01(rng);
    const auto r = kmeans(x, 2 + static_cast<int>(seed % 5), seed, 3);
    for (std::size_t t = 1; t < r.inertia_trace.size(); ++t) EXPECT_LE(r.inertia_trace[t], r.inertia_trace[t - 1]);
    EXPECT_EQ(r.inertia, r.inertia_trace.back());
  }
}

TEST(KMeans, Deterministic) {
  const auto b = make_blobs(4, 10, 3, 3.0, 9);
  const auto r1 = kmeans(b.points, 4, 17), r2 = kmeans(b.points, 4, 17);
  EXPECT_EQ(r1.labels, r2.labels);
  EXPECT_EQ(r1.inertia, r2.inertia);
}

TEST(Silhouette, Examples) {
  const auto b = make_blobs(2, 20, 2, 50.0, 4);
  EXPECT_GE(silhouette(b.points, b.labels), 0.9);
  EXPECT_EQ(silhouette(b.points, b.labels), oracle::silhouette_direct(b.points, b.labels));

  EXPECT_EQ(silhouette(MatrixXd::Ones(5, 2), {0, 0, 1, 1, 1}), 0.0);

  MatrixXd x(4, 2);
  x << 0, 0, 0, 0, 3, 4, 3, 4;
  EXPECT_EQ(silhouette(x, {0, 0, 1, 1}), 1.0);
  EXPECT_THROW(silhouette(x, {0, 0, 0, 0}), InputError);
  EXPECT_THROW(silhouette(x, {0, 1}), DimensionError);
}

TEST(Silhouette, SingletonScoresZero) {
  MatrixXd x(3, 1);
  x << 0, 0, 10;
  EXPECT_DOUBLE_EQ(silhouette(x, {0, 0, 1}), 2.0 / 3.0);
}

TEST(Silhouette, BoundedAndMatchesDefinition) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 11, k = 2 + trial % 3;
    MatrixXd x = MatrixXd::Random(n, 2);
    auto labels = random_labels(rng, n, k);
    labels[0] = 0;
    labels[1] = 1;
    const double s = silhouette(x, labels);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
    EXPECT_EQ(s, oracle::silhouette_direct(x, labels));
  }
}

TEST(AdjustedRandIndex, Examples) {
  const std::vector<int> a{0, 0, 1, 1, 2, 2};
  EXPECT_EQ(adjusted_rand_index(a, a), 1.0);
  EXPECT_EQ(adjusted_rand_index(a, {5, 5, 3, 3, 9, 9}), 1.0);
  EXPECT_EQ(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}), oracle::ari_by_pairs({0, 0, 1, 1}, {0, 1, 0, 1}));
  EXPECT_EQ(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}), -0.5);
  EXPECT_EQ(adjusted_rand_index({0, 0, 0}, {1, 1, 1}), 1.0);
  EXPECT_THROW(adjusted_rand_index({0, 1}, {0}), DimensionError);
}

TEST(AdjustedRandIndex, MatchesPairCountingAndIsPermutationInvariant) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 12;
    const auto a = random_labels(rng, n, 1 + trial % 4), b = random_labels(rng, n, 1 + trial % 5);
    const double ari = adjusted_rand_index(a, b);
    EXPECT_EQ(ari, oracle::ari_by_pairs(a, b));
    EXPECT_LE(ari, 1.0);
    std::vector<int> relabel{3, 0, 4, 1, 2};
    std::vector<int> b2(b);
    for (auto& l : b2) l = relabel[l];
    EXPECT_EQ(adjusted_rand_index(a, b2), ari);
    EXPECT_EQ(adjusted_rand_index(b, a), ari);
  }
}

TEST(SelectK, PicksPlantedCount) {
  EXPECT_EQ(select_k_by_silhouette(make_blobs(3, 12, 2, 20.0, 7).points, 2, 9, 1).k, 3);
  EXPECT_EQ(select_k_by_silhouette(make_blobs(2, 12, 2, 20.0, 8).points, 2, 9, 1).k, 2);
  const auto sel = select_k_by_silhouette(make_blobs(4, 6, 3, 5.0, 9).points, 4, 4, 1);
  EXPECT_EQ(sel.k, 4);
  EXPECT_EQ(sel.scores.size(), 1u);
  EXPECT_THROW(select_k_by_silhouette(MatrixXd::Zero(3, 2), 2, 4, 0), InputError);
}
