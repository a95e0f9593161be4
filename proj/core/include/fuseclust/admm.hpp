#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "fuseclust/difference.hpp"
#include "fuseclust/glm.hpp"
#include "fuseclust/types.hpp"
#include "fuseclust/weights.hpp"

namespace fuseclust {

struct SolverOptions {
  double rho = 1.0;
  double tol_abs = 1e-6;
  double tol_rel = 1e-4;
  int max_iter = 10000;
  bool adapt_rho = true;    // residual balancing, factor 2 at 10x imbalance
  bool record_objective = true;
};

// Solver state. The splitting variable V and dual Q stack the theta block
// first: V = [V_theta V_U] with |E| rows and q + p columns.
struct FitState {
  Matrix U;      // n x p
  Matrix theta;  // n x q (q = K for multinomial, else 1)
  Matrix beta;   // d x q (0 x q without covariates)
  Matrix V;      // |E| x (q + p)
  Matrix Q;      // |E| x (q + p)
  double rho = 1.0;
  double step = 0.0;
};

struct SolveReport {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<double> objective_trace;
  bool converged = false;
  bool eta_clipped = false;

  double final_objective() const {
    return objective_trace.empty() ? 0.0 : objective_trace.back();
  }
};

// Rowwise block soft-threshold: V_l <- max(0, 1 - tau w_l / ||V_l||) V_l.
Matrix prox_group_lasso(const Matrix& V, const Vector& weights, double tau);

// Reusable solver for (pi_x I + rho D^T D) x = b; positive definite for
// pi_x > 0. Factored once, reused across iterations and lambda values.
class USystemFactor {
 public:
  USystemFactor(const SparseMatrix& D, double pi_x, double rho);
  Matrix solve(const Matrix& rhs) const;
  double pi_x() const { return pi_x_; }
  double rho() const { return rho_; }

 private:
  double pi_x_;
  double rho_;
  SparseMatrix DtD_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
};

// Primal objective of the fused estimation problem, with the penalty
// evaluated on D [theta U] directly (not on V).
double objective(const Matrix& X, const SupervisingVariable& y,
                 const LossFamily& family, const Matrix& Z, const FitState& fit,
                 double lambda, std::pair<double, double> pi,
                 const WeightGraph& graph);

// Multi-block ADMM with closed-form U update, linearized one-step theta and
// beta updates, group-lasso prox for V, and dual ascent. Non-convergence
// within max_iter is reported, not thrown.
std::pair<FitState, SolveReport> scc_solve(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const WeightGraph& graph, double lambda,
    std::pair<double, double> pi, const SolverOptions& opts = {},
    const FitState* warm_start = nullptr);

}  // namespace fuseclust
