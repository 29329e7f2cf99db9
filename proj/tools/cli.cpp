#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "sntf/errors.hpp"
#include "sntf/features.hpp"
#include "sntf/panel.hpp"
#include "sntf/solver.hpp"
#include "sntf/spline.hpp"

namespace sntf::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const DegenerateDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDegenerateData;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

std::string component_header(const char* prefix, Index rank) {
  std::string h;
  for (Index r = 0; r < rank; ++r) h += std::string(",") + prefix + std::to_string(r + 1);
  return h;
}

void write_rows(std::ofstream& out, const std::vector<std::string>& keys, const MatrixXd& m) {
  for (Index row = 0; row < m.rows(); ++row) {
    out << keys[row];
    for (Index r = 0; r < m.cols(); ++r) out << ',' << m(row, r);
    out << '\n';
  }
}

std::vector<std::string> numbers(const std::vector<double>& xs) {
  std::vector<std::string> out;
  for (double x : xs) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    out.push_back(os.str());
  }
  return out;
}

void write_series(const fs::path& path, const char* x_name, const std::vector<std::string>& xs,
                  const Eigen::VectorXd& ys) {
  auto out = open_out(path);
  out << x_name << ",value\n";
  for (Index i = 0; i < ys.size(); ++i) out << xs[i] << ',' << ys(i) << '\n';
}

json trace_json(const FitReport& report) {
  json loss = json::array(), penalty = json::array(), total = json::array();
  for (const auto& t : report.trace) {
    loss.push_back(t.loss);
    penalty.push_back(t.penalty);
    total.push_back(t.total);
  }
  return {{"loss", loss}, {"penalty", penalty}, {"total", total}};
}

std::string mode_name(Mode m) { return m == Mode::smooth ? "smooth" : "baseline"; }

}  // namespace

int cmd_fit(const RunConfig& cfg) {
  return guarded([&] {
    if (cfg.mode == Mode::smooth && !cfg.temps)
      throw InputError("smooth mode needs a temperature file (--temps)");
    SolverConfig solver{cfg.rank, cfg.alpha, cfg.beta, cfg.tol, cfg.max_sweeps, cfg.seed, 1e-12};
    if (cfg.mode == Mode::baseline) solver.alpha = solver.beta = 0.0;
    solver.validate();

    PanelFiles files{cfg.loads, cfg.mode == Mode::smooth ? cfg.temps : std::nullopt, cfg.regimes};
    const LoadPanel raw = read_panel_csv(files);
    raw.validate();
    const NormalizedPanel normalized = normalize_by_daily_mean(raw);
    const LoadPanel& panel = normalized.panel;
    const Index N = panel.site_count();

    fs::create_directories(cfg.out / "plotdata");
    const auto hours = numbers(panel.intraday_grid());
    FitResult result;
    json dims;

    if (cfg.mode == Mode::smooth) {
      const TemperatureGrid grid = build_temperature_grid(panel, cfg.temp_resolution);
      const WeightedTensorPair pair = assemble_tensors(panel, grid);
      const auto intraday = periodic_spline_system(panel.intraday_grid(), 24.0);
      const auto thermal = natural_spline_system(grid.knots());
      result = fit(pair, intraday, thermal, solver);
      dims = {{"I", pair.X.dim1()}, {"K", pair.X.dim2()}, {"E", panel.regime_count()}, {"N", N}};

      const auto temps = numbers(grid.knots());
      auto b_out = open_out(cfg.out / "B.csv");
      b_out << "temp" << component_header("b", solver.rank) << '\n';
      write_rows(b_out, temps, result.factors.B);

      std::vector<std::string> keys;
      for (int e = 1; e <= panel.regime_count(); ++e)
        for (Index n = 0; n < N; ++n) keys.push_back(panel.sites()[n] + "," + std::to_string(e));
      auto c_out = open_out(cfg.out / "C.csv");
      c_out << "site,regime" << component_header("c", solver.rank) << '\n';
      write_rows(c_out, keys, result.factors.C);

      for (int r = 0; r < solver.rank; ++r)
        write_series(cfg.out / "plotdata" / ("thermal_" + std::to_string(r + 1) + ".csv"), "temp",
                     temps, result.factors.B.col(r));
    } else {
      const DayTensor days = day_tensor(panel);
      result = fit_baseline_ntf(days.loads, solver, days.mask);
      dims = {{"I", days.loads.dim1()}, {"J", days.loads.dim2()}, {"N", N}};

      auto b_out = open_out(cfg.out / "B.csv");
      b_out << "day" << component_header("b", solver.rank) << '\n';
      write_rows(b_out, panel.days(), result.factors.B);
      auto c_out = open_out(cfg.out / "C.csv");
      c_out << "site" << component_header("c", solver.rank) << '\n';
      write_rows(c_out, panel.sites(), result.factors.C);

      for (int r = 0; r < solver.rank; ++r)
        write_series(cfg.out / "plotdata" / ("day_activation_" + std::to_string(r + 1) + ".csv"),
                     "day", panel.days(), result.factors.B.col(r));
    }

    auto a_out = open_out(cfg.out / "A.csv");
    a_out << "hour" << component_header("a", solver.rank) << '\n';
    write_rows(a_out, hours, result.factors.A);
    for (int r = 0; r < solver.rank; ++r)
      write_series(cfg.out / "plotdata" / ("signature_" + std::to_string(r + 1) + ".csv"), "hour",
                   hours, result.factors.A.col(r));

    const FitReport& rep = result.report;
    json scales = json::object();
    for (Index n = 0; n < N; ++n) scales[panel.sites()[n]] = normalized.scales[n];
    json report = {
        {"mode", mode_name(cfg.mode)},
        {"termination", to_string(rep.termination)},
        {"sweeps", rep.sweeps},
        {"best_sweep", rep.best_sweep},
        {"objective", trace_json(rep)},
        {"within_bin_variance", rep.within_bin_variance},
        {"data_norm", rep.data_norm},
        {"final_relative_loss", rep.final_relative_loss()},
        {"column_resets", rep.column_resets},
        {"frozen_components", rep.frozen_components},
        {"dims", dims},
        {"site_scales", scales},
        {"config",
         {{"loads", cfg.loads.string()},
          {"temps", cfg.temps ? json(cfg.temps->string()) : json(nullptr)},
          {"regimes", cfg.regimes ? json(cfg.regimes->string()) : json(nullptr)},
          {"rank", solver.rank},
          {"alpha", solver.alpha},
          {"beta", solver.beta},
          {"temp_resolution", cfg.temp_resolution},
          {"tol", solver.tol},
          {"max_sweeps", solver.max_sweeps},
          {"seed", solver.seed},
          {"mode", mode_name(cfg.mode)}}},
    };
    open_out(cfg.out / "report.json") << report.dump(2) << '\n';
    std::cout << "fit " << mode_name(cfg.mode) << ": " << to_string(rep.termination) << " after "
              << rep.sweeps << " sweeps, relative loss " << rep.final_relative_loss() << '\n';
    return kOk;
  });
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  return out;
}

struct SiteActivations {
  std::vector<std::string> sites;
  int regime_count = 1;
  MatrixXd C;  // rows (e-1)N + n
};

SiteActivations read_activations(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw CsvError(path.string(), 1, "missing header");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "site") throw CsvError(path.string(), 1, "first column must be 'site'");
  const bool has_regime = header.size() > 1 && header[1] == "regime";
  const std::size_t first = has_regime ? 2 : 1;
  if (header.size() <= first) throw CsvError(path.string(), 1, "no activation columns");
  const Index R = static_cast<Index>(header.size() - first);

  SiteActivations out;
  std::unordered_map<std::string, Index> index;
  std::map<std::pair<int, Index>, Eigen::VectorXd> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw CsvError(path.string(), line_no,
                     "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(f.size()));
    auto [it, inserted] = index.try_emplace(f[0], static_cast<Index>(out.sites.size()));
    if (inserted) out.sites.push_back(f[0]);
    int e = 1;
    Eigen::VectorXd v(R);
    try {
      if (has_regime) e = std::stoi(f[1]);
      for (Index r = 0; r < R; ++r) v(r) = std::stod(f[first + r]);
    } catch (const std::exception&) {
      throw CsvError(path.string(), line_no, "malformed number");
    }
    if (e < 1) throw CsvError(path.string(), line_no, "regime must be >= 1");
    out.regime_count = std::max(out.regime_count, e);
    if (!rows.emplace(std::pair{e, it->second}, v).second)
      throw CsvError(path.string(), line_no, "duplicate (site, regime) row");
  }
  const Index N = static_cast<Index>(out.sites.size());
  out.C = MatrixXd::Zero(out.regime_count * N, R);
  for (const auto& [key, v] : rows) out.C.row((key.first - 1) * N + key.second) = v.transpose();
  return out;
}

std::unordered_map<std::string, int> read_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (split_csv(line) != std::vector<std::string>{"site", "label"})
    throw CsvError(path.string(), 1, "expected header 'site,label'");
  std::unordered_map<std::string, int> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() != 2) throw CsvError(path.string(), line_no, "expected 2 columns");
    try {
      out[f[0]] = std::stoi(f[1]);
    } catch (const std::exception&) {
      throw CsvError(path.string(), line_no, "label must be an integer");
    }
  }
  return out;
}

}  // namespace

int cmd_cluster(const ClusterConfig& cfg) {
  return guarded([&] {
    const SiteActivations act = read_activations(cfg.factors);
    const Index N = static_cast<Index>(act.sites.size());
    const MatrixXd features = site_features(act.C, act.regime_count, N);

    std::vector<int> labels;
    json summary;
    if (cfg.k) {
      if (*cfg.k > N)
        throw InputError("k = " + std::to_string(*cfg.k) + " exceeds the number of sites (" +
                         std::to_string(N) + ")");
      auto km = kmeans(features, *cfg.k, cfg.seed, cfg.restarts);
      labels = km.labels;
      summary["k"] = *cfg.k;
      summary["inertia"] = km.inertia;
      std::vector<int> distinct = labels;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      summary["silhouette"] = distinct.size() >= 2 ? json(silhouette(features, labels)) : json(nullptr);
    } else {
      if (cfg.k_max > N)
        throw InputError("k_max = " + std::to_string(cfg.k_max) + " exceeds the number of sites (" +
                         std::to_string(N) + ")");
      auto sel = select_k_by_silhouette(features, cfg.k_min, cfg.k_max, cfg.seed, cfg.restarts);
      labels = sel.labels;
      summary["k"] = sel.k;
      summary["silhouette"] = sel.scores[static_cast<std::size_t>(sel.k - cfg.k_min)];
      json scores = json::object();
      for (std::size_t s = 0; s < sel.scores.size(); ++s)
        scores[std::to_string(cfg.k_min + static_cast<int>(s))] = sel.scores[s];
      summary["scores"] = scores;
    }

    if (cfg.truth) {
      const auto truth = read_truth(*cfg.truth);
      std::vector<int> reference;
      for (const auto& site : act.sites) {
        auto it = truth.find(site);
        if (it == truth.end()) throw InputError("truth file has no label for site " + site);
        reference.push_back(it->second);
      }
      summary["ari"] = adjusted_rand_index(labels, reference);
    }

    fs::create_directories(cfg.out);
    auto out = open_out(cfg.out / "labels.csv");
    out << "site,label\n";
    for (Index n = 0; n < N; ++n) out << act.sites[n] << ',' << labels[n] + 1 << '\n';
    open_out(cfg.out / "silhouette.json") << summary.dump(2) << '\n';
    std::cout << "cluster: k = " << summary["k"] << '\n';
    return kOk;
  });
}

int cmd_synth(const PlantSpec& spec, const fs::path& out) {
  return guarded([&] {
    const SyntheticPanel synth = generate(spec);
    fs::create_directories(out);
    write_panel_csv(synth.panel, {out / "loads.csv", out / "temps.csv", out / "regimes.csv"});

    const auto& panel = synth.panel;
    const auto& truth = synth.truth;
    auto labels = open_out(out / "truth_labels.csv");
    labels << "site,label\n";
    for (Index n = 0; n < panel.site_count(); ++n)
      labels << panel.sites()[n] << ',' << truth.cluster_labels[n] + 1 << '\n';

    auto a = open_out(out / "truth_A.csv");
    a << "hour" << component_header("a", spec.rank) << '\n';
    write_rows(a, numbers(panel.intraday_grid()), truth.factors.A);
    auto b = open_out(out / "truth_B.csv");
    b << "temp" << component_header("b", spec.rank) << '\n';
    write_rows(b, numbers(truth.temp_grid.knots()), truth.factors.B);
    std::vector<std::string> keys;
    for (int e = 1; e <= panel.regime_count(); ++e)
      for (Index n = 0; n < panel.site_count(); ++n) keys.push_back(panel.sites()[n] + "," + std::to_string(e));
    auto c = open_out(out / "truth_C.csv");
    c << "site,regime" << component_header("c", spec.rank) << '\n';
    write_rows(c, keys, truth.factors.C);
    std::cout << "synth: wrote " << panel.site_count() << " sites x " << panel.day_count() << " days to "
              << out.string() << '\n';
    return kOk;
  });
}

namespace {

// `--config FILE` holds flat `key = value` lines. They are spliced in as
// `--key=value` right after the subcommand, so later command-line flags win.
std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> out;
  std::vector<std::string> from_file;
  for (std::size_t a = 0; a < args.size(); ++a) {
    std::string file;
    if (args[a] == "--config") {
      if (a + 1 == args.size()) throw InputError("--config needs a file name");
      file = args[++a];
    } else if (args[a].rfind("--config=", 0) == 0) {
      file = args[a].substr(9);
    } else {
      out.push_back(args[a]);
      continue;
    }
    std::ifstream in(file);
    if (!in) throw InputError("cannot open config file " + file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CsvError(file, line_no, "expected 'key = value'");
      auto trim = [](std::string x) {
        const auto b = x.find_first_not_of(" \t\r\"");
        const auto e = x.find_last_not_of(" \t\r\"");
        return b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw CsvError(file, line_no, "empty key");
      from_file.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
  }
  if (!out.empty()) out.insert(out.begin() + 1, from_file.begin(), from_file.end());
  return out;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Smooth nonnegative tensor factorization of multi-site daily load curves"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_file;  // consumed by expand_config; declared for --help

  RunConfig run_cfg;
  std::string loads, temps, regimes, mode = "smooth", out = "out";
  auto* fit_cmd = app.add_subcommand("fit", "Fit factors to a load panel");
  fit_cmd->add_option("--config", config_file, "key = value file; command-line flags take precedence");
  fit_cmd->add_option("--loads", loads, "site,day,time,load CSV")->required();
  fit_cmd->add_option("--temps", temps, "site,day,temp CSV (smooth mode)");
  fit_cmd->add_option("--regimes", regimes, "site,day,regime CSV (default: one regime)");
  fit_cmd->add_option("-R,--rank", run_cfg.rank, "number of components")->capture_default_str();
  fit_cmd->add_option("--alpha", run_cfg.alpha, "signature curvature weight")->capture_default_str();
  fit_cmd->add_option("--beta", run_cfg.beta, "thermal curvature weight")->capture_default_str();
  fit_cmd->add_option("--temp_resolution", run_cfg.temp_resolution, "temperature bin width")
      ->capture_default_str();
  fit_cmd->add_option("--tol", run_cfg.tol, "relative-improvement stopping threshold")->capture_default_str();
  fit_cmd->add_option("--max_sweeps", run_cfg.max_sweeps)->capture_default_str();
  fit_cmd->add_option("--seed", run_cfg.seed)->capture_default_str();
  fit_cmd->add_option("--mode", mode, "smooth or baseline")
      ->check(CLI::IsMember({"smooth", "baseline"}))
      ->capture_default_str();
  fit_cmd->add_option("--out", out, "output directory")->capture_default_str();

  ClusterConfig cl_cfg;
  std::string factors, truth, cl_out = "out";
  int k = 0;
  auto* cl_cmd = app.add_subcommand("cluster", "K-means on site activations");
  cl_cmd->add_option("--config", config_file, "key = value file; command-line flags take precedence");
  cl_cmd->add_option("--factors", factors, "C.csv written by fit")->required();
  cl_cmd->add_option("--k", k, "fixed number of clusters (otherwise chosen by silhouette)");
  cl_cmd->add_option("--k_min", cl_cfg.k_min)->capture_default_str();
  cl_cmd->add_option("--k_max", cl_cfg.k_max)->capture_default_str();
  cl_cmd->add_option("--seed", cl_cfg.seed)->capture_default_str();
  cl_cmd->add_option("--restarts", cl_cfg.restarts)->capture_default_str();
  cl_cmd->add_option("--truth", truth, "site,label CSV; adds the adjusted Rand index");
  cl_cmd->add_option("--out", cl_out, "output directory")->capture_default_str();

  PlantSpec spec;
  std::string synth_out = "synth";
  auto* sy_cmd = app.add_subcommand("synth", "Write a synthetic panel with planted factors");
  sy_cmd->add_option("--config", config_file, "key = value spec file; command-line flags take precedence");
  sy_cmd->add_option("--rank", spec.rank)->capture_default_str();
  sy_cmd->add_option("--intraday_points", spec.intraday_points)->capture_default_str();
  sy_cmd->add_option("--sites", spec.sites)->capture_default_str();
  sy_cmd->add_option("--days", spec.days)->capture_default_str();
  sy_cmd->add_option("--regimes", spec.regimes)->capture_default_str();
  sy_cmd->add_option("--clusters", spec.clusters)->capture_default_str();
  sy_cmd->add_option("--temp_min", spec.temp_min)->capture_default_str();
  sy_cmd->add_option("--temp_max", spec.temp_max)->capture_default_str();
  sy_cmd->add_option("--temp_resolution", spec.temp_resolution)->capture_default_str();
  sy_cmd->add_option("--climate_spread", spec.climate_spread)->capture_default_str();
  sy_cmd->add_flag("--shuffle_seasons", spec.shuffle_seasons);
  sy_cmd->add_option("--jitter", spec.jitter)->capture_default_str();
  sy_cmd->add_option("--noise_sd", spec.noise_sd)->capture_default_str();
  sy_cmd->add_option("--seed", spec.seed)->capture_default_str();
  sy_cmd->add_option("--out", synth_out, "output directory")->capture_default_str();

  std::vector<std::string> args;
  if (const int code = guarded([&] {
        args = expand_config(argc, argv);
        return kOk;
      });
      code != kOk)
    return code;
  std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  if (*fit_cmd) {
    run_cfg.loads = loads;
    if (!temps.empty()) run_cfg.temps = temps;
    if (!regimes.empty()) run_cfg.regimes = regimes;
    run_cfg.mode = mode == "baseline" ? Mode::baseline : Mode::smooth;
    run_cfg.out = out;
    return cmd_fit(run_cfg);
  }
  if (*cl_cmd) {
    cl_cfg.factors = factors;
    if (cl_cmd->count("--k") > 0) cl_cfg.k = k;
    if (!truth.empty()) cl_cfg.truth = truth;
    cl_cfg.out = cl_out;
    return cmd_cluster(cl_cfg);
  }
  return cmd_synth(spec, synth_out);
}

}  // namespace sntf::cli
