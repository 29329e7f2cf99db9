#include "sntf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sntf/errors.hpp"

namespace sntf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SolverConfig::validate() const {
  if (rank < 1) throw InputError("rank must be at least 1");
  if (!(tol > 0.0)) throw InputError("tol must be positive");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InputError("alpha and beta must be nonnegative");
  if (max_sweeps < 1) throw InputError("max_sweeps must be at least 1");
  if (!(eps_div > 0.0)) throw InputError("eps_div must be positive");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_sweeps: return "max_sweeps";
    case Termination::stalled: return "stalled";
  }
  return "unknown";
}

double FitReport::final_relative_loss() const {
  if (trace.empty() || data_norm <= 0.0) return 0.0;
  return trace[static_cast<std::size_t>(best_sweep)].loss / data_norm;
}

namespace {

Tensor3 squared(const Tensor3& t) {
  Tensor3 out = t;
  for (double& x : out.data()) x *= x;
  return out;
}

void check_factor_shapes(const Tensor3& X, const FactorSet& f) {
  if (f.A.rows() != X.dim1() || f.B.rows() != X.dim2() || f.C.rows() != X.dim3() ||
      f.B.cols() != f.A.cols() || f.C.cols() != f.A.cols())
    throw DimensionError("factor dimensions do not match the tensor");
}

// X - sum_r a_r o b_r o c_r
Tensor3 residual(const Tensor3& X, const FactorSet& f) {
  Tensor3 E = X;
  const Index I = X.dim1(), K = X.dim2(), M = X.dim3();
  for (Index r = 0; r < f.rank(); ++r)
    for (Index m = 0; m < M; ++m)
      for (Index k = 0; k < K; ++k) {
        const double bc = f.B(k, r) * f.C(m, r);
        if (bc == 0.0) continue;
        for (Index i = 0; i < I; ++i) E(i, k, m) -= f.A(i, r) * bc;
      }
  return E;
}

double weighted_loss_sq(const Tensor3& w2, const Tensor3& E) {
  const auto w = w2.data();
  const auto e = E.data();
  double sum = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) sum += w[n] * e[n] * e[n];
  return sum;
}

double penalty_term(const MatrixXd& F, const MatrixXd& Q, double weight) {
  if (weight == 0.0 || Q.size() == 0) return 0.0;
  return weight * (F.transpose() * Q * F).trace();
}

// diag(sum W^2 p^2) and sum W^2 E p over the two modes other than `mode`,
// where p is the product of the corresponding factor columns.
void accumulate(int mode, const Tensor3& w2, const Tensor3& E, const VectorXd& a,
                const VectorXd& b, const VectorXd& c, VectorXd& diag, VectorXd& rhs) {
  const Index I = E.dim1(), K = E.dim2(), M = E.dim3();
  diag.setZero(E.dims()[mode - 1]);
  rhs.setZero(E.dims()[mode - 1]);
  const double* w = w2.data().data();
  const double* e = E.data().data();
  for (Index m = 0; m < M; ++m)
    for (Index k = 0; k < K; ++k) {
      const Index base = I * (k + K * m);
      switch (mode) {
        case 1: {
          const double p = b(k) * c(m);
          if (p == 0.0) break;
          for (Index i = 0; i < I; ++i) {
            diag(i) += w[base + i] * p * p;
            rhs(i) += w[base + i] * e[base + i] * p;
          }
          break;
        }
        case 2: {
          double d = 0.0, s = 0.0;
          for (Index i = 0; i < I; ++i) {
            const double p = a(i) * c(m);
            d += w[base + i] * p * p;
            s += w[base + i] * e[base + i] * p;
          }
          diag(k) += d;
          rhs(k) += s;
          break;
        }
        default: {
          double d = 0.0, s = 0.0;
          for (Index i = 0; i < I; ++i) {
            const double p = a(i) * b(k);
            d += w[base + i] * p * p;
            s += w[base + i] * e[base + i] * p;
          }
          diag(m) += d;
          rhs(m) += s;
          break;
        }
      }
    }
}

MatrixXd system_matrix(const VectorXd& diag, const MatrixXd& Q, double weight, double eps_div) {
  const Index n = diag.size();
  MatrixXd M = MatrixXd::Zero(n, n);
  if (weight != 0.0 && Q.size() != 0) M = weight * Q;
  for (Index i = 0; i < n; ++i) M(i, i) += diag(i) > 0.0 ? diag(i) : eps_div;
  return M;
}

VectorXd solve_symmetric(const MatrixXd& M, const VectorXd& rhs) {
  return M.ldlt().solve(rhs);
}

ColumnUpdate finish_column(VectorXd x, const VectorXd& v) {
  ColumnUpdate out;
  out.unclipped = std::move(x);
  VectorXd clipped = out.unclipped.cwiseMax(0.0);
  const double s = v.dot(clipped);
  if (!(s > 0.0) || !std::isfinite(s)) {
    out.dead = true;
    out.scale = 1.0;
    out.column = VectorXd::Ones(v.size()) / v.sum();
  } else {
    out.scale = s;
    out.column = clipped / s;
  }
  return out;
}

VectorXd diagonal_solve(const VectorXd& diag, const VectorXd& rhs) {
  VectorXd c(diag.size());
  for (Index m = 0; m < diag.size(); ++m) c(m) = diag(m) > 0.0 ? std::max(0.0, rhs(m) / diag(m)) : 0.0;
  return c;
}

// E += a0 o b0 o c0 - a1 o b1 o c1
void replace_component(Tensor3& E, const VectorXd& a0, const VectorXd& b0, const VectorXd& c0,
                       const VectorXd& a1, const VectorXd& b1, const VectorXd& c1) {
  const Index I = E.dim1(), K = E.dim2(), M = E.dim3();
  for (Index m = 0; m < M; ++m)
    for (Index k = 0; k < K; ++k) {
      const double p0 = b0(k) * c0(m);
      const double p1 = b1(k) * c1(m);
      if (p0 == 0.0 && p1 == 0.0) continue;
      for (Index i = 0; i < I; ++i) E(i, k, m) += a0(i) * p0 - a1(i) * p1;
    }
}

VectorXd uniform_unit(const VectorXd& v) { return VectorXd::Ones(v.size()) / v.sum(); }

// Penalty data and integral weights for one smooth mode.
struct ModeTerms {
  VectorXd weights;
  MatrixXd Q;
  double strength = 0.0;
};

constexpr int kMaxResets = 2;

class HalsEngine {
 public:
  HalsEngine(const Tensor3& W, const Tensor3& X, FactorSet init, ModeTerms mode_a, ModeTerms mode_b,
             const SolverConfig& cfg)
      : X_(X),
        w2_(squared(W)),
        f_(std::move(init)),
        a_terms_(std::move(mode_a)),
        b_terms_(std::move(mode_b)),
        cfg_(cfg),
        resets_(static_cast<std::size_t>(cfg.rank), 0),
        frozen_(static_cast<std::size_t>(cfg.rank), false) {
    E_ = residual(X_, f_);
  }

  FitResult run(const SweepObserver& observer) {
    FitReport report;
    report.data_norm = weighted_loss_sq(w2_, X_);
    report.trace.push_back(evaluate(0));

    FactorSet best = f_;
    double best_total = report.trace[0].total;
    int increases = 0;
    report.termination = Termination::max_sweeps;

    for (int sweep = 1; sweep <= cfg_.max_sweeps; ++sweep) {
      for (Index r = 0; r < f_.rank(); ++r) update_a(r);
      for (Index r = 0; r < f_.rank(); ++r) update_b(r);
      for (Index r = 0; r < f_.rank(); ++r) update_c(r);

      // Fresh residual each sweep so the trace does not accumulate drift.
      E_ = residual(X_, f_);
      const ObjectiveTerms current = evaluate(sweep);
      const double previous = report.trace.back().total;
      report.trace.push_back(current);
      report.sweeps = sweep;
      if (observer) observer(sweep, f_, current);

      if (current.total <= best_total) {
        best_total = current.total;
        best = f_;
        report.best_sweep = sweep;
      }

      const double improvement = previous - current.total;
      if (improvement < 0.0) {
        if (++increases >= 2) {
          report.termination = Termination::stalled;
          break;
        }
        continue;
      }
      increases = 0;
      if (improvement / std::max(previous, cfg_.eps_div) < cfg_.tol) {
        report.termination = Termination::converged;
        break;
      }
    }

    if (report.termination != Termination::stalled) report.best_sweep = report.sweeps;
    else f_ = std::move(best);

    report.column_resets = total_resets_;
    for (std::size_t r = 0; r < frozen_.size(); ++r)
      if (frozen_[r]) report.frozen_components.push_back(static_cast<int>(r));
    return {std::move(f_), std::move(report)};
  }

 private:
  ObjectiveTerms evaluate(int sweep) const {
    ObjectiveTerms t;
    t.loss = weighted_loss_sq(w2_, E_);
    t.penalty = penalty_term(f_.A, a_terms_.Q, a_terms_.strength) +
                penalty_term(f_.B, b_terms_.Q, b_terms_.strength);
    t.total = t.loss + t.penalty;
    if (!std::isfinite(t.total)) throw NumericError(describe_non_finite(sweep));
    return t;
  }

  std::string describe_non_finite(int sweep) const {
    const std::pair<const char*, const MatrixXd*> mats[] = {{"A", &f_.A}, {"B", &f_.B}, {"C", &f_.C}};
    for (const auto& [name, mat] : mats)
      for (Index r = 0; r < mat->cols(); ++r)
        if (!mat->col(r).allFinite())
          return "non-finite objective after sweep " + std::to_string(sweep) + ": factor " + name +
                 " column " + std::to_string(r + 1) + " has non-finite entries";
    return "non-finite objective after sweep " + std::to_string(sweep) + " (input data not finite?)";
  }

  // Returns true if the component has been switched off.
  bool register_death(Index r) {
    ++total_resets_;
    if (++resets_[r] <= kMaxResets) return false;
    const VectorXd a0 = f_.A.col(r), b0 = f_.B.col(r), c0 = f_.C.col(r);
    f_.A.col(r) = uniform_unit(a_terms_.weights);
    f_.B.col(r) = uniform_unit(b_terms_.weights);
    f_.C.col(r).setZero();
    replace_component(E_, a0, b0, c0, f_.A.col(r), f_.B.col(r), f_.C.col(r));
    frozen_[r] = true;
    --total_resets_;
    return true;
  }

  void update_a(Index r) {
    if (frozen_[r]) return;
    const VectorXd a0 = f_.A.col(r), b = f_.B.col(r), c0 = f_.C.col(r);
    VectorXd diag, rhs;
    accumulate(1, w2_, E_, a0, b, c0, diag, rhs);
    rhs += diag.cwiseProduct(a0);  // E + a0 o b o c0 is the partial residual X^(r)
    const MatrixXd M = system_matrix(diag, a_terms_.Q, a_terms_.strength, cfg_.eps_div);
    const ColumnUpdate u = finish_column(solve_symmetric(M, rhs), a_terms_.weights);
    if (u.dead && register_death(r)) return;
    const VectorXd c1 = c0 * u.scale;
    replace_component(E_, a0, b, c0, u.column, b, c1);
    f_.A.col(r) = u.column;
    f_.C.col(r) = c1;
  }

  void update_b(Index r) {
    if (frozen_[r]) return;
    const VectorXd a = f_.A.col(r), b0 = f_.B.col(r), c0 = f_.C.col(r);
    VectorXd diag, rhs;
    accumulate(2, w2_, E_, a, b0, c0, diag, rhs);
    rhs += diag.cwiseProduct(b0);
    const MatrixXd M = system_matrix(diag, b_terms_.Q, b_terms_.strength, cfg_.eps_div);
    const ColumnUpdate u = finish_column(solve_symmetric(M, rhs), b_terms_.weights);
    if (u.dead && register_death(r)) return;
    const VectorXd c1 = c0 * u.scale;
    replace_component(E_, a, b0, c0, a, u.column, c1);
    f_.B.col(r) = u.column;
    f_.C.col(r) = c1;
  }

  void update_c(Index r) {
    if (frozen_[r]) return;
    const VectorXd a = f_.A.col(r), b = f_.B.col(r), c0 = f_.C.col(r);
    VectorXd diag, rhs;
    accumulate(3, w2_, E_, a, b, c0, diag, rhs);
    rhs += diag.cwiseProduct(c0);
    const VectorXd c1 = diagonal_solve(diag, rhs);
    replace_component(E_, a, b, c0, a, b, c1);
    f_.C.col(r) = c1;
  }

  const Tensor3& X_;
  Tensor3 w2_;
  Tensor3 E_;
  FactorSet f_;
  ModeTerms a_terms_;
  ModeTerms b_terms_;
  SolverConfig cfg_;
  std::vector<int> resets_;
  std::vector<bool> frozen_;
  int total_resets_ = 0;
};

// Leading `count` left singular vectors and values of U, via the smaller Gram matrix.
void leading_singular(const MatrixXd& U, Index count, MatrixXd& vectors, VectorXd& values) {
  const Index n = U.rows();
  vectors = MatrixXd::Zero(n, count);
  values = VectorXd::Zero(count);
  if (U.size() == 0) return;
  const bool tall = U.rows() > U.cols();
  const MatrixXd gram = tall ? MatrixXd(U.transpose() * U) : MatrixXd(U * U.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
  const VectorXd& lambda = eig.eigenvalues();  // ascending
  const Index dim = lambda.size();
  const double top = std::max(lambda(dim - 1), 0.0);
  for (Index r = 0; r < count && r < dim; ++r) {
    const double l = lambda(dim - 1 - r);
    if (!(top > 0.0) || l <= 1e-12 * top) break;
    const double sigma = std::sqrt(l);
    values(r) = sigma;
    if (tall) vectors.col(r) = U * eig.eigenvectors().col(dim - 1 - r) / sigma;
    else vectors.col(r) = eig.eigenvectors().col(dim - 1 - r);
    vectors.col(r).normalize();
  }
}

// Positive part of a singular vector after making its largest-magnitude entry positive.
VectorXd positive_direction(VectorXd u) {
  Index at = 0;
  u.cwiseAbs().maxCoeff(&at);
  if (u(at) < 0.0) u = -u;
  return u.cwiseMax(0.0);
}

}  // namespace

FactorSet init_svd_positive(const Tensor3& X, int rank, const VectorXd& v1, const VectorXd& v2,
                            std::uint64_t seed) {
  if (rank < 1) throw InputError("rank must be at least 1");
  if (v1.size() != X.dim1() || v2.size() != X.dim2())
    throw DimensionError("init_svd_positive: integral weights do not match the tensor");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 0.01);
  auto padding = [&](Index n) {
    VectorXd col(n);
    for (Index i = 0; i < n; ++i) col(i) = 1.0 + jitter(rng);
    return col;
  };

  std::array<MatrixXd, 3> dirs;
  std::array<VectorXd, 3> sigma;
  for (int mode = 1; mode <= 3; ++mode)
    leading_singular(unfold(X, mode), rank, dirs[mode - 1], sigma[mode - 1]);

  const double top = sigma[2].size() > 0 ? sigma[2](0) : 0.0;
  const double pad_level =
      top > 0.0 ? 1e-2 * top / std::sqrt(static_cast<double>(std::max<Index>(X.dim3(), 1))) : 1.0;

  FactorSet f{MatrixXd(X.dim1(), rank), MatrixXd(X.dim2(), rank), MatrixXd(X.dim3(), rank)};
  for (Index r = 0; r < rank; ++r) {
    std::array<VectorXd, 3> cols;
    for (int mode = 0; mode < 3; ++mode) {
      const Index n = X.dims()[mode];
      VectorXd col = sigma[mode](r) > 0.0 ? positive_direction(dirs[mode].col(r)) : VectorXd();
      if (col.size() == 0 || col.maxCoeff() <= 0.0) col = padding(n);
      cols[mode] = std::move(col);
    }
    const bool padded = sigma[2](r) <= 0.0;
    double c_scale = padded ? pad_level : sigma[2](r);

    double sa = v1.dot(cols[0]);
    if (!(sa > 0.0)) {
      cols[0] = padding(X.dim1());
      sa = v1.dot(cols[0]);
    }
    double sb = v2.dot(cols[1]);
    if (!(sb > 0.0)) {
      cols[1] = padding(X.dim2());
      sb = v2.dot(cols[1]);
    }
    f.A.col(r) = cols[0] / sa;
    f.B.col(r) = cols[1] / sb;
    f.C.col(r) = cols[2] * (padded ? c_scale / cols[2].norm() : c_scale) * sa * sb;
  }
  return f;
}

ObjectiveTerms objective(const Tensor3& W, const Tensor3& X, const FactorSet& f, const MatrixXd& Q1,
                         const MatrixXd& Q2, double alpha, double beta) {
  if (!W.same_shape(X)) throw DimensionError("objective: W and X shapes differ");
  check_factor_shapes(X, f);
  if ((alpha != 0.0 && Q1.rows() != f.A.rows()) || (beta != 0.0 && Q2.rows() != f.B.rows()))
    throw DimensionError("objective: penalty matrices do not match the factors");
  ObjectiveTerms t;
  t.loss = weighted_sq_norm(W, residual(X, f));
  t.penalty = penalty_term(f.A, Q1, alpha) + penalty_term(f.B, Q2, beta);
  t.total = t.loss + t.penalty;
  return t;
}

namespace {

ColumnSystem column_system(int mode, const Tensor3& W, const Tensor3& partial_residual,
                           const VectorXd& a, const VectorXd& b, const VectorXd& c,
                           const MatrixXd& Q, double weight, double eps_div) {
  if (!W.same_shape(partial_residual)) throw DimensionError("column system: W and X shapes differ");
  const Index n = W.dims()[mode - 1];
  if ((mode != 1 && a.size() != W.dim1()) || (mode != 2 && b.size() != W.dim2()) ||
      (mode != 3 && c.size() != W.dim3()))
    throw DimensionError("column system: factor columns do not match the tensor");
  if (weight != 0.0 && (Q.rows() != n || Q.cols() != n))
    throw DimensionError("column system: penalty matrix has the wrong size");
  VectorXd diag, rhs;
  accumulate(mode, squared(W), partial_residual, a, b, c, diag, rhs);
  return {system_matrix(diag, Q, weight, eps_div), rhs};
}

}  // namespace

ColumnSystem column_system_a(const Tensor3& W, const Tensor3& partial_residual, const VectorXd& b,
                             const VectorXd& c, const MatrixXd& Q1, double alpha, double eps_div) {
  return column_system(1, W, partial_residual, VectorXd(), b, c, Q1, alpha, eps_div);
}

ColumnSystem column_system_b(const Tensor3& W, const Tensor3& partial_residual, const VectorXd& a,
                             const VectorXd& c, const MatrixXd& Q2, double beta, double eps_div) {
  return column_system(2, W, partial_residual, a, VectorXd(), c, Q2, beta, eps_div);
}

ColumnUpdate hals_update_a(const Tensor3& W, const Tensor3& partial_residual, const VectorXd& b,
                           const VectorXd& c, const MatrixXd& Q1, double alpha, const VectorXd& v1,
                           double eps_div) {
  const auto sys = column_system_a(W, partial_residual, b, c, Q1, alpha, eps_div);
  if (v1.size() != sys.rhs.size()) throw DimensionError("hals_update_a: v1 has the wrong size");
  return finish_column(solve_symmetric(sys.M, sys.rhs), v1);
}

ColumnUpdate hals_update_b(const Tensor3& W, const Tensor3& partial_residual, const VectorXd& a,
                           const VectorXd& c, const MatrixXd& Q2, double beta, const VectorXd& v2,
                           double eps_div) {
  const auto sys = column_system_b(W, partial_residual, a, c, Q2, beta, eps_div);
  if (v2.size() != sys.rhs.size()) throw DimensionError("hals_update_b: v2 has the wrong size");
  return finish_column(solve_symmetric(sys.M, sys.rhs), v2);
}

VectorXd hals_update_c(const Tensor3& W, const Tensor3& partial_residual, const VectorXd& a,
                       const VectorXd& b) {
  const auto sys = column_system(3, W, partial_residual, a, b, VectorXd(), MatrixXd(), 0.0, 0.0);
  VectorXd diag(sys.M.rows());
  // system_matrix lifted zero diagonals to eps_div = 0, so they are still zero here.
  for (Index m = 0; m < diag.size(); ++m) diag(m) = sys.M(m, m);
  return diagonal_solve(diag, sys.rhs);
}

FitResult fit(const WeightedTensorPair& pair, const SplineSystem& intraday,
              const SplineSystem& thermal, const SolverConfig& cfg, const SweepObserver& observer) {
  cfg.validate();
  if (!pair.W.same_shape(pair.X)) throw DimensionError("fit: W and X shapes differ");
  if (intraday.size() != pair.X.dim1() || thermal.size() != pair.X.dim2())
    throw DimensionError("fit: spline systems do not match the tensor dimensions");

  ModeTerms a_terms{intraday.weights(), intraday.penalty_matrix(), cfg.alpha};
  ModeTerms b_terms{thermal.weights(), thermal.penalty_matrix(), cfg.beta};
  FactorSet init = init_svd_positive(pair.X, cfg.rank, a_terms.weights, b_terms.weights, cfg.seed);
  HalsEngine engine(pair.W, pair.X, std::move(init), std::move(a_terms), std::move(b_terms), cfg);
  FitResult result = engine.run(observer);
  result.report.within_bin_variance = pair.within_bin_variance;
  return result;
}

FitResult fit_baseline_ntf(const Tensor3& day_tensor, const SolverConfig& cfg,
                           const std::optional<Tensor3>& mask, const SweepObserver& observer) {
  cfg.validate();
  const Tensor3 W = mask ? *mask : Tensor3(day_tensor.dim1(), day_tensor.dim2(), day_tensor.dim3(), 1.0);
  if (!W.same_shape(day_tensor)) throw DimensionError("fit_baseline_ntf: mask shape differs");

  ModeTerms a_terms{VectorXd::Ones(day_tensor.dim1()), MatrixXd(), 0.0};
  ModeTerms b_terms{VectorXd::Ones(day_tensor.dim2()), MatrixXd(), 0.0};
  FactorSet init = init_svd_positive(day_tensor, cfg.rank, a_terms.weights, b_terms.weights, cfg.seed);
  HalsEngine engine(W, day_tensor, std::move(init), std::move(a_terms), std::move(b_terms), cfg);
  return engine.run(observer);
}

}  // namespace sntf
