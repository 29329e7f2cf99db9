#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sntf/errors.hpp"
#include "sntf/features.hpp"
#include "sntf/solver.hpp"
#include "sntf/synth.hpp"

using namespace sntf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Largest |X - model| over observed cells, relative to the largest |X|.
double planted_misfit(const WeightedTensorPair& pair, const FactorSet& f) {
  double worst = 0.0, scale = 0.0;
  for (Index m = 0; m < pair.X.dim3(); ++m)
    for (Index k = 0; k < pair.X.dim2(); ++k)
      for (Index i = 0; i < pair.X.dim1(); ++i) {
        if (pair.W(i, k, m) == 0.0) continue;
        double x = 0.0;
        for (Index r = 0; r < f.rank(); ++r) x += f.A(i, r) * f.B(k, r) * f.C(m, r);
        worst = std::max(worst, std::abs(pair.X(i, k, m) - x));
        scale = std::max(scale, std::abs(pair.X(i, k, m)));
      }
  return worst / scale;
}

}  // namespace

TEST(PlantSpec, Validation) {
  PlantSpec s;
  EXPECT_NO_THROW(s.validate());
  s.rank = 0;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.templates = MatrixXd::Ones(2, 2);
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.temp_max = s.temp_min;
  EXPECT_THROW(s.validate(), InputError);
}

TEST(CircularBump, Shape) {
  EXPECT_DOUBLE_EQ(circular_bump(7.0, 7.0, 3.0), 1.0);
  EXPECT_EQ(circular_bump(11.0, 7.0, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(circular_bump(23.0, 1.0, 4.0), circular_bump(3.0, 1.0, 4.0));
  EXPECT_NEAR(circular_bump(8.5, 7.0, 3.0), 0.5, 1e-15);
}

TEST(Generate, Deterministic) {
  PlantSpec s;
  s.noise_sd = 0.05;
  s.regimes = 2;
  s.seed = 11;
  const auto a = generate(s), b = generate(s);
  for (Index j = 0; j < a.panel.day_count(); ++j)
    for (Index n = 0; n < a.panel.site_count(); ++n) {
      ASSERT_EQ(a.panel.curve(j, n), b.panel.curve(j, n));
      ASSERT_EQ(a.panel.temperature(j, n), b.panel.temperature(j, n));
      ASSERT_EQ(a.panel.regime(j, n), b.panel.regime(j, n));
    }
  EXPECT_EQ(a.truth.cluster_labels, b.truth.cluster_labels);
  s.seed = 12;
  EXPECT_NE(generate(s).panel.curve(0, 0), a.panel.curve(0, 0));
}

TEST(Generate, NoiselessRankOneIsExact) {
  PlantSpec s;
  s.rank = 1;
  s.clusters = 2;
  const auto g = generate(s);
  const auto pair = assemble_tensors(g.panel, g.truth.temp_grid);
  EXPECT_LE(planted_misfit(pair, g.truth.factors), 1e-13);
}

TEST(Generate, NoiselessPanelMatchesPlantedFactors) {
  PlantSpec s;
  s.rank = 4;
  s.regimes = 2;
  s.seed = 5;
  const auto g = generate(s);
  const auto pair = assemble_tensors(g.panel, g.truth.temp_grid);
  EXPECT_LE(planted_misfit(pair, g.truth.factors), 1e-13);
  EXPECT_LE(pair.within_bin_variance, 1e-20 * weighted_sq_norm(pair.W, pair.X));

  const auto intraday = periodic_spline_system(g.panel.intraday_grid(), 24.0);
  const auto thermal = natural_spline_system(g.truth.temp_grid.knots());
  for (Index r = 0; r < 4; ++r) {
    EXPECT_NEAR(intraday.integral(g.truth.factors.A.col(r)), 1.0, 1e-12);
    EXPECT_NEAR(thermal.integral(g.truth.factors.B.col(r)), 1.0, 1e-12);
  }
  EXPECT_GE(g.truth.factors.A.minCoeff(), 0.0);
  EXPECT_GE(g.truth.factors.B.minCoeff(), 0.0);
  EXPECT_GE(g.truth.factors.C.minCoeff(), 0.0);
}

TEST(Generate, RegimesAndTemperatures) {
  PlantSpec s;
  s.regimes = 2;
  s.temp_min = 5.0;
  s.temp_max = 19.0;
  s.temp_resolution = 0.5;
  const auto g = generate(s);
  for (Index j = 0; j < g.panel.day_count(); ++j)
    for (Index n = 0; n < g.panel.site_count(); ++n) {
      EXPECT_EQ(g.panel.regime(j, n), j % 7 >= 5 ? 2 : 1);
      const double t = g.panel.temperature(j, n);
      EXPECT_GE(t, 5.0);
      EXPECT_LE(t, 19.0);
      EXPECT_EQ(t / 0.5, std::round(t / 0.5));
    }
}

TEST(Generate, NoisyLoadsStayNonnegative) {
  PlantSpec s;
  s.noise_sd = 0.5;
  const auto g = generate(s);
  for (Index j = 0; j < g.panel.day_count(); ++j)
    for (Index n = 0; n < g.panel.site_count(); ++n) EXPECT_GE(g.panel.curve(j, n).minCoeff(), 0.0);
}

TEST(Generate, SignaturesAreSmooth) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PlantSpec s;
    s.rank = 4;
    s.seed = seed;
    const auto g = generate(s);
    const auto intraday = periodic_spline_system(g.panel.intraday_grid(), 24.0);
    for (Index r = 0; r < 4; ++r) {
      const VectorXd a = g.truth.factors.A.col(r);
      VectorXd noise(a.size());
      for (auto& x : noise) x = n01(rng);
      noise *= a.norm() / noise.norm();
      EXPECT_LE(intraday.penalty(a), 0.1 * intraday.penalty(noise));
    }
  }
}

TEST(Generate, TemplatesAreSeparated) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PlantSpec s;
    s.clusters = 5;
    s.regimes = 2;
    s.jitter = 0.05;
    s.seed = seed;
    const auto g = generate(s);
    const MatrixXd& t = g.truth.cluster_templates;
    ASSERT_EQ(t.rows(), 5);
    ASSERT_EQ(t.cols(), 6);
    for (Index p = 0; p < 5; ++p)
      for (Index q = p + 1; q < 5; ++q) EXPECT_GE((t.row(p) - t.row(q)).norm(), 5.0 * s.jitter);
    std::vector<int> count(5, 0);
    for (int l : g.truth.cluster_labels) ++count[l];
    for (int c : count) EXPECT_GT(c, 0);
  }
}

TEST(Generate, IdentityTemplatesAreRecovered) {
  PlantSpec s;
  s.rank = 3;
  s.clusters = 3;
  s.sites = 3;
  s.jitter = 0.0;
  s.templates = MatrixXd::Identity(3, 3);
  s.seed = 4;
  const auto g = generate(s);
  const auto pair = assemble_tensors(g.panel, g.truth.temp_grid);
  SolverConfig cfg;
  cfg.rank = 3;
  const auto res = fit(pair, periodic_spline_system(g.panel.intraday_grid(), 24.0),
                       natural_spline_system(g.truth.temp_grid.knots()), cfg);
  ASSERT_LE(res.report.trace.back().loss, 1e-6 * res.report.data_norm);

  const MatrixXd feats = site_features(res.factors.C, 1, 3);
  MatrixXd planted(3, 3);
  for (int n = 0; n < 3; ++n) planted.row(n) = s.templates.row(g.truth.cluster_labels[n]);
  // Columns of the features are the fitted components; match them to the
  // planted template columns.
  for (double c : oracle::matched_cosines(feats, planted)) EXPECT_GE(c, 0.999);
}
