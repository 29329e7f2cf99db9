#include <gtest/gtest.h>

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "sntf/panel.hpp"
#include "sntf/solver.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sntf;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("sntf_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "sntf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  json read_json(const std::string& name) const {
    std::ifstream in(dir_ / name);
    return json::parse(in);
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  int synth(const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"synth", "--out", path(out), "--sites", "8", "--days", "90", "--rank", "3"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SynthIsDeterministic) {
  ASSERT_EQ(synth("a", {"--seed", "3", "--noise_sd", "0.05"}), cli::kOk);
  ASSERT_EQ(synth("b", {"--seed", "3", "--noise_sd", "0.05"}), cli::kOk);
  for (const char* f : {"loads.csv", "temps.csv", "regimes.csv", "truth_labels.csv", "truth_C.csv"})
    EXPECT_EQ(slurp(std::string("a/") + f), slurp(std::string("b/") + f)) << f;
}

TEST_F(CliTest, NoiselessFitReachesZeroLoss) {
  ASSERT_EQ(synth("data"), cli::kOk);
  ASSERT_EQ(run({"fit", "--loads", path("data/loads.csv"), "--temps", path("data/temps.csv"), "--regimes",
                 path("data/regimes.csv"), "-R", "3", "--alpha", "0", "--beta", "0", "--out", path("fit")}),
            cli::kOk);
  const json report = read_json("fit/report.json");
  EXPECT_LE(report["final_relative_loss"].get<double>(), 1e-6);
  EXPECT_EQ(report["mode"], "smooth");
  EXPECT_EQ(report["config"]["rank"], 3);
  EXPECT_EQ(report["dims"]["N"], 8);
  for (const char* f : {"fit/A.csv", "fit/B.csv", "fit/C.csv", "fit/plotdata/signature_1.csv",
                        "fit/plotdata/thermal_3.csv"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  EXPECT_EQ(slurp("fit/C.csv").substr(0, 22), "site,regime,c1,c2,c3\ns");
}

TEST_F(CliTest, ReportTraceEqualsLibraryTrace) {
  ASSERT_EQ(synth("data", {"--noise_sd", "0.05", "--regimes", "2"}), cli::kOk);
  ASSERT_EQ(run({"fit", "--loads", path("data/loads.csv"), "--temps", path("data/temps.csv"), "--regimes",
                 path("data/regimes.csv"), "-R", "3", "--alpha", "20", "--beta", "10", "--seed", "4", "--out",
                 path("fit")}),
            cli::kOk);

  const LoadPanel raw = read_panel_csv({path("data/loads.csv"), path("data/temps.csv"), path("data/regimes.csv")});
  const LoadPanel panel = normalize_by_daily_mean(raw).panel;
  const auto grid = build_temperature_grid(panel, 1.0);
  SolverConfig cfg;
  cfg.rank = 3;
  cfg.alpha = 20;
  cfg.beta = 10;
  cfg.seed = 4;
  const auto res = fit(assemble_tensors(panel, grid), periodic_spline_system(panel.intraday_grid(), 24.0),
                       natural_spline_system(grid.knots()), cfg);

  const json report = read_json("fit/report.json");
  const auto& total = report["objective"]["total"];
  const auto& loss = report["objective"]["loss"];
  ASSERT_EQ(total.size(), res.report.trace.size());
  for (std::size_t s = 0; s < total.size(); ++s) {
    EXPECT_EQ(total[s].get<double>(), res.report.trace[s].total);
    EXPECT_EQ(loss[s].get<double>(), res.report.trace[s].loss);
  }
  EXPECT_EQ(report["sweeps"], res.report.sweeps);
  EXPECT_EQ(report["termination"], to_string(res.report.termination));
  EXPECT_EQ(report["within_bin_variance"].get<double>(), res.report.within_bin_variance);
}

TEST_F(CliTest, SmoothModeNeedsTemperatures) {
  ASSERT_EQ(synth("data"), cli::kOk);
  EXPECT_EQ(run({"fit", "--loads", path("data/loads.csv"), "--out", path("fit")}), cli::kInputError);
  EXPECT_EQ(run({"fit", "--loads", path("data/loads.csv"), "--temps", path("nope.csv"), "--out", path("fit")}),
            cli::kInputError);
}

TEST_F(CliTest, BaselineModeIgnoresTemperatures) {
  ASSERT_EQ(synth("data"), cli::kOk);
  ASSERT_EQ(run({"fit", "--loads", path("data/loads.csv"), "--mode", "baseline", "-R", "2", "--out", path("fit")}),
            cli::kOk);
  const json report = read_json("fit/report.json");
  EXPECT_EQ(report["mode"], "baseline");
  EXPECT_EQ(report["config"]["alpha"], 0.0);
  EXPECT_EQ(report["dims"]["J"], 90);
  EXPECT_TRUE(fs::exists(dir_ / "fit/plotdata/day_activation_2.csv"));
}

TEST_F(CliTest, MalformedCsvIsAnInputError) {
  write("loads.csv", "site,day,time,load\ns1,d1,00:00,1.0\ns1,d1,01:00\n");
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"fit", "--loads", path("loads.csv"), "--mode", "baseline", "--out", path("fit")}),
            cli::kInputError);
  EXPECT_NE(testing::internal::GetCapturedStderr().find(":3:"), std::string::npos);
}

TEST_F(CliTest, DegenerateSiteExitCode) {
  write("loads.csv", "site,day,time,load\ns1,d1,00:00,1\ns1,d1,12:00,2\ns2,d1,00:00,0\ns2,d1,12:00,0\n");
  EXPECT_EQ(run({"fit", "--loads", path("loads.csv"), "--mode", "baseline", "-R", "1", "--out", path("fit")}),
            cli::kDegenerateData);
}

TEST_F(CliTest, BadArgumentsAreInputErrors) {
  EXPECT_EQ(run({}), cli::kInputError);
  EXPECT_EQ(run({"fit"}), cli::kInputError);
  EXPECT_EQ(run({"fit", "--loads", "x.csv", "--mode", "sideways"}), cli::kInputError);
  EXPECT_EQ(run({"fit", "--loads", "x.csv", "--rank", "0", "--mode", "baseline"}), cli::kInputError);
  EXPECT_EQ(run({"synth", "--clusters", "20", "--sites", "4", "--out", path("s")}), cli::kInputError);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  ASSERT_EQ(synth("data"), cli::kOk);
  write("run.cfg", "loads = " + path("data/loads.csv") + "\ntemps = " + path("data/temps.csv") +
                       "\nrank = 2\nalpha = 5\nmax_sweeps = 3\n");
  ASSERT_EQ(run({"fit", "--config", path("run.cfg"), "--max_sweeps", "4", "--out", path("fit")}), cli::kOk);
  const json report = read_json("fit/report.json");
  EXPECT_EQ(report["config"]["rank"], 2);
  EXPECT_EQ(report["config"]["alpha"], 5.0);
  EXPECT_EQ(report["config"]["beta"], 3000.0);
  EXPECT_EQ(report["config"]["max_sweeps"], 4);
  EXPECT_LE(report["sweeps"].get<int>(), 4);
}

TEST_F(CliTest, SynthConfigFile) {
  write("spec.cfg", "# planted panel\nsites = 5\ndays = 14\nclusters = 2\nshuffle_seasons = true\n");
  ASSERT_EQ(run({"synth", "--config", path("spec.cfg"), "--days", "10", "--out", path("s")}), cli::kOk);
  const LoadPanel p = read_panel_csv({path("s/loads.csv"), path("s/temps.csv"), path("s/regimes.csv")});
  EXPECT_EQ(p.site_count(), 5);
  EXPECT_EQ(p.day_count(), 10);
  write("bad.cfg", "sites 5\n");
  EXPECT_EQ(run({"synth", "--config", path("bad.cfg"), "--out", path("s")}), cli::kInputError);
  write("unknown.cfg", "colour = red\n");
  EXPECT_EQ(run({"synth", "--config", path("unknown.cfg"), "--out", path("s")}), cli::kInputError);
  EXPECT_EQ(run({"synth", "--config", path("missing.cfg"), "--out", path("s")}), cli::kInputError);
}

TEST_F(CliTest, ClusterDuplicatedRows) {
  write("C.csv", "site,c1,c2\na,1,0\nb,1,0\nc,0,1\nd,0,1\n");
  write("truth.csv", "site,label\na,7\nb,7\nc,3\nd,3\n");
  ASSERT_EQ(run({"cluster", "--factors", path("C.csv"), "--k", "2", "--truth", path("truth.csv"), "--out",
                 path("cl")}),
            cli::kOk);
  const json summary = read_json("cl/silhouette.json");
  EXPECT_EQ(summary["ari"].get<double>(), 1.0);
  EXPECT_EQ(summary["silhouette"].get<double>(), 1.0);
  EXPECT_EQ(summary["inertia"].get<double>(), 0.0);
  const std::string labels = slurp("cl/labels.csv");
  EXPECT_EQ(labels.substr(0, 11), "site,label\n");
}

TEST_F(CliTest, ClusterRejectsTooLargeK) {
  write("C.csv", "site,c1\na,1\nb,2\n");
  EXPECT_EQ(run({"cluster", "--factors", path("C.csv"), "--k", "3", "--out", path("cl")}), cli::kInputError);
  EXPECT_EQ(run({"cluster", "--factors", path("C.csv"), "--out", path("cl")}), cli::kInputError);
}

TEST_F(CliTest, ClusterRangePicksPlantedK) {
  // Three far blobs of site activations over two regimes.
  std::string text = "site,regime,c1,c2\n";
  const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  for (int e = 1; e <= 2; ++e)
    for (int n = 0; n < 12; ++n) {
      const auto& c = centers[n % 3];
      text += "s" + std::to_string(n) + "," + std::to_string(e) + "," + std::to_string(c[0] + 0.1 * (n % 4)) +
              "," + std::to_string(c[1] + 0.05 * (n % 5) + e) + "\n";
    }
  write("C.csv", text);
  ASSERT_EQ(run({"cluster", "--factors", path("C.csv"), "--k_min", "2", "--k_max", "9", "--out", path("cl")}),
            cli::kOk);
  const json summary = read_json("cl/silhouette.json");
  EXPECT_EQ(summary["k"], 3);
  EXPECT_EQ(summary["scores"].size(), 8u);
}

TEST_F(CliTest, FitThenClusterAgainstTruth) {
  ASSERT_EQ(run({"synth", "--out", path("data"), "--noise_sd", "0.02", "--sites", "12", "--days", "90", "--seed", "8"}),
            cli::kOk);
  ASSERT_EQ(run({"fit", "--loads", path("data/loads.csv"), "--temps", path("data/temps.csv"), "-R", "3",
                 "--alpha", "10", "--beta", "10", "--out", path("fit")}),
            cli::kOk);
  ASSERT_EQ(run({"cluster", "--factors", path("fit/C.csv"), "--k", "3", "--truth", path("data/truth_labels.csv"),
                 "--out", path("cl")}),
            cli::kOk);
  EXPECT_EQ(read_json("cl/silhouette.json")["ari"].get<double>(), 1.0);
}
