#pragma once

#include <optional>
#include <utility>

#include "fuseclust/admm.hpp"
#include "fuseclust/clusters.hpp"
#include "fuseclust/glm.hpp"
#include "fuseclust/types.hpp"
#include "fuseclust/weights.hpp"

namespace fuseclust {

// State of the biclustering ADMM. Row fusion acts on [theta U] through
// (V_row, Q_row); column fusion acts on the transposed copy M = U^T through
// (V_col, Q_col); N is the dual of the copy constraint. When feature-side
// supervision is present, the column fusion stacks theta_tilde in front of M
// exactly as theta stacks in front of U on the row side.
struct BiclustState {
  Matrix U;            // n x p
  Matrix theta;        // n x q
  Matrix beta;         // d x q
  Matrix M;            // p x n
  Matrix V_row, Q_row; // |E| x (q + p)
  Matrix V_col, Q_col; // |Ecol| x (qt + n), qt = 0 without feature supervision
  Matrix N;            // p x n
  Matrix theta_tilde;  // p x qt (empty without feature supervision)
  Matrix beta_tilde;   // dt x qt
  double rho = 1.0;
};

struct BiclustOptions {
  SolverOptions solver;
  double col_lambda_ratio = 1.0;  // column penalty = ratio * lambda
};

// Supervised convex biclustering: joint row fusion of [theta U] and column
// fusion of U under a single lambda.
std::pair<BiclustState, SolveReport> biclust_solve(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const WeightGraph& row_graph, const WeightGraph& col_graph,
    double lambda, std::pair<double, double> pi, const BiclustOptions& opts = {},
    const BiclustState* warm_start = nullptr);

// Doubly-supervised variant: a second supervising variable over the features
// attaches to the column fusion with weight pi_y_tilde. Setting
// pi_y_tilde = 0 reproduces biclust_solve.
std::pair<BiclustState, SolveReport> doubly_solve(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const SupervisingVariable& y_tilde,
    const LossFamily& family_tilde, const Matrix& Z_tilde,
    const WeightGraph& row_graph, const WeightGraph& col_graph, double lambda,
    std::pair<double, double> pi, double pi_y_tilde,
    const BiclustOptions& opts = {}, const BiclustState* warm_start = nullptr);

// Primal objective of the biclustering problem (penalties evaluated on the
// centroid differences directly).
double biclust_objective(const Matrix& X, const SupervisingVariable& y,
                         const LossFamily& family, const Matrix& Z,
                         const BiclustState& fit, double lambda,
                         std::pair<double, double> pi,
                         const WeightGraph& row_graph,
                         const WeightGraph& col_graph,
                         double col_lambda_ratio = 1.0);

// Cluster extraction from the zeroed rows of V_row / V_col.
ClusterAssignment biclust_row_clusters(const BiclustState& fit,
                                       const WeightGraph& row_graph, double tol);
ClusterAssignment biclust_col_clusters(const BiclustState& fit,
                                       const WeightGraph& col_graph, double tol);

struct BiclustTargetFit {
  double lambda = 0.0;
  BiclustState fit;
  SolveReport report;
  ClusterAssignment row_clusters;
  ClusterAssignment col_clusters;
  bool exact = false;
  std::vector<int> seen_K;
};

// Bisection on lambda for a target number of row clusters, warm-started.
BiclustTargetFit biclust_fit_for_row_count(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const WeightGraph& row_graph, const WeightGraph& col_graph,
    std::pair<double, double> pi, int k_target, const BiclustOptions& opts = {});

}  // namespace fuseclust
