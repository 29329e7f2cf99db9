#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sntf/factors.hpp"
#include "sntf/panel.hpp"
#include "sntf/spline.hpp"
#include "sntf/tensor.hpp"

namespace sntf {

struct SolverConfig {
  int rank = 6;
  double alpha = 0.0;  // curvature weight on the intra-day signatures
  double beta = 0.0;   // curvature weight on the thermal activations
  double tol = 1e-5;   // stop once the relative improvement of the objective drops below this
  int max_sweeps = 500;
  std::uint64_t seed = 0;  // only used to jitter padding columns at initialization
  double eps_div = 1e-12;

  /// Throws InputError on rank < 1, tol <= 0, negative penalties, etc.
  void validate() const;
};

enum class Termination { converged, max_sweeps, stalled };
std::string to_string(Termination t);

struct ObjectiveTerms {
  double loss = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

struct FitReport {
  /// trace[0] is the objective at initialization, trace[s] after sweep s.
  std::vector<ObjectiveTerms> trace;
  int sweeps = 0;
  Termination termination = Termination::max_sweeps;
  /// Sweep whose factors are returned (differs from `sweeps` only when stalled).
  int best_sweep = 0;
  double within_bin_variance = 0.0;
  /// ||W .* X||_F^2, the loss of the all-zero model.
  double data_norm = 0.0;
  /// Columns that were clipped to zero and reset to a uniform profile.
  int column_resets = 0;
  /// Components switched off after exhausting their resets.
  std::vector<int> frozen_components;

  double final_relative_loss() const;
};

struct FitResult {
  FactorSet factors;
  FitReport report;
};

/// Called after every completed sweep with the sweep number, the current
/// factors and their objective.
using SweepObserver = std::function<void(int, const FactorSet&, const ObjectiveTerms&)>;

/// Positive part of the leading left singular vectors of each unfolding of X,
/// sign-fixed so the largest-magnitude entry is positive. A and B columns are
/// scaled to unit integral (v1'a = v2'b = 1) and the scale folded into C.
/// Components beyond the numerical rank (and clipped-to-zero columns) are
/// replaced by uniform positive columns.
FactorSet init_svd_positive(const Tensor3& X, int rank, const Eigen::VectorXd& v1,
                            const Eigen::VectorXd& v2, std::uint64_t seed = 0);

/// L = ||W .* (X - sum_r a_r o b_r o c_r)||^2 and P = alpha tr(A'Q1A) + beta tr(B'Q2B).
ObjectiveTerms objective(const Tensor3& W, const Tensor3& X, const FactorSet& f,
                         const Eigen::MatrixXd& Q1, const Eigen::MatrixXd& Q2, double alpha,
                         double beta);

/// The column subproblem for one mode: M x = rhs with
/// M = diag(sum W^2 p^2) + weight * Q and rhs = sum W^2 X^(r) p, where p is
/// the product of the other two factor columns. Zero diagonal entries are
/// lifted to eps_div.
struct ColumnSystem {
  Eigen::MatrixXd M;
  Eigen::VectorXd rhs;
};

struct ColumnUpdate {
  Eigen::VectorXd unclipped;  // solution of M x = rhs
  Eigen::VectorXd column;     // [x]_+ / (v'[x]_+), or uniform if `dead`
  double scale = 1.0;         // v'[x]_+, to be multiplied into c_r
  bool dead = false;          // [x]_+ had no mass
};

ColumnSystem column_system_a(const Tensor3& W, const Tensor3& partial_residual,
                             const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                             const Eigen::MatrixXd& Q1, double alpha, double eps_div);
ColumnSystem column_system_b(const Tensor3& W, const Tensor3& partial_residual,
                             const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                             const Eigen::MatrixXd& Q2, double beta, double eps_div);

/// One HALS step for a_r given X^(r) = X - sum_{s != r} a_s o b_s o c_s.
ColumnUpdate hals_update_a(const Tensor3& W, const Tensor3& partial_residual,
                           const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                           const Eigen::MatrixXd& Q1, double alpha, const Eigen::VectorXd& v1,
                           double eps_div);
ColumnUpdate hals_update_b(const Tensor3& W, const Tensor3& partial_residual,
                           const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                           const Eigen::MatrixXd& Q2, double beta, const Eigen::VectorXd& v2,
                           double eps_div);
/// c = [rhs / diag]_+ entrywise, with 0 where the diagonal vanishes.
Eigen::VectorXd hals_update_c(const Tensor3& W, const Tensor3& partial_residual,
                              const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Penalized weighted NTF by Fast HALS. `intraday` and `thermal` supply
/// (v1, Q1) and (v2, Q2); their sizes must match the first two tensor modes.
/// Throws NumericError if the objective becomes non-finite.
FitResult fit(const WeightedTensorPair& pair, const SplineSystem& intraday,
              const SplineSystem& thermal, const SolverConfig& cfg,
              const SweepObserver& observer = {});

/// Plain NTF of an I x J x N day tensor (no penalty, A and B columns summing
/// to one). `mask` defaults to all ones; pass the observation mask to ignore
/// unobserved days.
FitResult fit_baseline_ntf(const Tensor3& day_tensor, const SolverConfig& cfg,
                           const std::optional<Tensor3>& mask = std::nullopt,
                           const SweepObserver& observer = {});

}  // namespace sntf
