#pragma once

// Test-only reference solvers, independent of the ADMM implementation they
// check. The fusion penalty has no closed-form prox, so the primal oracle
// minimizes a smoothed surrogate sqrt(||.||^2 + eps^2) by accelerated
// gradient descent with an eps continuation schedule; the smoothing bias is
// bounded by lambda * sum(w) * eps and driven below the comparison tolerance.

#include "fuseclust/glm.hpp"
#include "fuseclust/types.hpp"
#include "fuseclust/weights.hpp"

namespace oracle {

struct PrimalSolution {
  fuseclust::Matrix U;
  fuseclust::Matrix theta;
  fuseclust::Matrix beta;
  double objective = 0.0;  // unsmoothed primal value at the final point
};

PrimalSolution solve_scc_primal(const fuseclust::Matrix& X,
                                const fuseclust::SupervisingVariable& y,
                                const fuseclust::LossFamily& family,
                                const fuseclust::Matrix& Z,
                                const fuseclust::WeightGraph& graph,
                                double lambda, std::pair<double, double> pi);

// Biclustering primal with a column fusion penalty on U (and theta_tilde
// when feature-side supervision is present).
PrimalSolution solve_biclust_primal(
    const fuseclust::Matrix& X, const fuseclust::SupervisingVariable& y,
    const fuseclust::LossFamily& family, const fuseclust::Matrix& Z,
    const fuseclust::WeightGraph& row_graph,
    const fuseclust::WeightGraph& col_graph, double lambda,
    std::pair<double, double> pi, double col_ratio = 1.0);

// Max relative discrepancy between eval_grad and central finite differences
// of eval_loss at the given point.
double fd_gradient_error(const fuseclust::LossFamily& family,
                         const fuseclust::SupervisingVariable& y,
                         const fuseclust::Matrix& eta, double h = 1e-5);

// 1-D grid search for the best constant predictor value (scalar families).
double grid_search_center(const fuseclust::LossFamily& family,
                          const fuseclust::SupervisingVariable& y, double lo,
                          double hi, int points = 200001);

}  // namespace oracle
