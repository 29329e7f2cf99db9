#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sntf/synth.hpp"

namespace sntf::cli {

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kDegenerateData = 3;
inline constexpr int kNumericError = 4;

enum class Mode { smooth, baseline };

struct RunConfig {
  std::filesystem::path loads;
  std::optional<std::filesystem::path> temps;
  std::optional<std::filesystem::path> regimes;
  int rank = 6;
  double alpha = 3000.0;
  double beta = 3000.0;
  double temp_resolution = 1.0;
  double tol = 1e-5;
  int max_sweeps = 500;
  std::uint64_t seed = 0;
  Mode mode = Mode::smooth;
  std::filesystem::path out = "out";
};

struct ClusterConfig {
  std::filesystem::path factors;  // C.csv written by `fit`
  std::optional<int> k;           // fixed k; otherwise chosen by silhouette over [k_min, k_max]
  int k_min = 2;
  int k_max = 9;
  std::uint64_t seed = 0;
  int restarts = 10;
  std::optional<std::filesystem::path> truth;  // site,label
  std::filesystem::path out = "out";
};

int cmd_fit(const RunConfig& cfg);
int cmd_cluster(const ClusterConfig& cfg);
int cmd_synth(const PlantSpec& spec, const std::filesystem::path& out);

/// Full command line: `sntf <fit|cluster|synth> [options]`.
int run(int argc, const char* const* argv);

}  // namespace sntf::cli
