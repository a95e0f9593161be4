#pragma once

#include <utility>
#include <vector>

#include "fuseclust/admm.hpp"
#include "fuseclust/glm.hpp"
#include "fuseclust/types.hpp"
#include "fuseclust/weights.hpp"

namespace fuseclust {

struct ClusterAssignment {
  std::vector<int> labels;  // cluster ids 1..K, relabeled by first occurrence
  int K = 0;
  double fusion_tol = 0.0;
};

// Connected components of the fusion edges whose V rows were zeroed by the
// prox (||V_l|| <= tol). Deterministic and independent of edge order.
ClusterAssignment extract_clusters(const FitState& fit, const WeightGraph& graph,
                                   double tol);

// Reference fusion tolerance: 1e-6 times the median nonzero row norm of
// D [theta U] at the unpenalized solution.
double default_fusion_tol(const Matrix& X, const SupervisingVariable& y,
                          const LossFamily& family, const WeightGraph& graph);

struct PathPoint {
  double lambda = 0.0;
  FitState fit;
  SolveReport report;
  ClusterAssignment clusters;
};

struct SolvePath {
  std::vector<PathPoint> points;  // strictly increasing lambda
  double fusion_tol = 0.0;
};

struct PathOptions {
  std::vector<double> grid;  // explicit grid; empty selects the auto grid
  int num_points = 50;
  SolverOptions solver;
};

// Warm-started regularization path. The auto grid is log-spaced from the
// first lambda showing any fusion (bisection) to the first lambda with a
// single cluster (doubling).
SolvePath solve_path(const Matrix& X, const SupervisingVariable& y,
                     const LossFamily& family, const Matrix& Z,
                     const WeightGraph& graph, std::pair<double, double> pi,
                     const PathOptions& opts = {});

// Bisection search for a lambda whose fit has exactly `k_target` clusters.
// Returns the closest achieved K when the path jumps over the target.
struct TargetFit {
  double lambda = 0.0;
  FitState fit;
  SolveReport report;
  ClusterAssignment clusters;
  bool exact = false;  // K == k_target achieved
  std::vector<int> seen_K;
};
TargetFit fit_for_cluster_count(const Matrix& X, const SupervisingVariable& y,
                                const LossFamily& family, const Matrix& Z,
                                const WeightGraph& graph,
                                std::pair<double, double> pi, int k_target,
                                const SolverOptions& opts = {});

struct StabilityResult {
  double lambda_star = 0.0;
  std::vector<double> lambdas;
  std::vector<double> scores;  // mean pairwise co-clustering agreement
  std::vector<int> K_full;     // cluster count of the full-data fit per lambda
};

struct StabilityOptions {
  int B = 20;               // subsample count
  double fraction = 0.8;    // subsample fraction, in (0.5, 1)
  int k_target = 0;         // restrict selection to this K when > 0
  unsigned long seed = 0;
  int jobs = 1;
  WeightConfig weights;
  PathOptions path;
};

// Stability selection over a lambda grid: B subsamples without replacement,
// weight graphs rebuilt per subsample, score = mean pairwise adjusted Rand
// index on shared observations. Trivial grid points (K in {1, n}) are
// excluded; throws when nothing remains. `weight_y` overrides the variable
// used for weight construction (covariate-adjusted refits); the model always
// fits `y`.
StabilityResult stability_select(const Matrix& X, const SupervisingVariable& y,
                                 const LossFamily& family, const Matrix& Z,
                                 const StabilityOptions& opts,
                                 const SupervisingVariable* weight_y = nullptr);

// Hubert-Arabie adjusted Rand index; 1 iff the partitions coincide up to
// relabeling (including the all-singletons / single-cluster degenerate cases).
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace fuseclust
