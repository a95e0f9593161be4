#pragma once

#include "fuseclust/clusters.hpp"
#include "fuseclust/glm.hpp"
#include "fuseclust/types.hpp"
#include "fuseclust/weights.hpp"

namespace fuseclust {

// Removes the covariate effect from the supervising variable through the
// link: y_hat_i = g^{-1}(g(y_i) - Z_i beta_hat). The gaussian case reduces
// to y - Z beta_hat. Cox has no link; adjusted times t exp(Z beta_hat) keep
// the censoring indicators. Boundary link values are clipped and flagged.
SupervisingVariable residualize_y(const LossFamily& family,
                                  const SupervisingVariable& y, const Matrix& Z,
                                  const Matrix& beta_hat, bool* clipped = nullptr);

struct AdaptiveResult {
  FitState fit;                 // stage-3 refit
  SolveReport report;
  ClusterAssignment clusters;
  double lambda = 0.0;          // stage-3 penalty level
  // stage-1 artifacts
  Matrix beta_hat;
  double lambda_stage1 = 0.0;
  SolveReport report_stage1;
  WeightGraph graph_stage1;
  // stage-2 artifacts
  WeightGraph graph_stage2;
  SupervisingVariable y_adjusted;
  double alpha_stage2 = 0.0;
  bool link_clipped = false;
};

struct AdaptiveOptions {
  WeightConfig weights;
  SolverOptions solver;
  int k_target = 0;          // 0: choose lambda by stability selection
  StabilityOptions stability;  // used when k_target == 0
};

// Two-stage adaptive fit: (1) fit with unadjusted weights and extract the
// covariate estimate at the lambda achieving the desired cluster count,
// (2) rebuild the fusion weights from the covariate-adjusted variable with a
// recomputed supervision level, (3) refit. Throws when no lambda achieves
// the target K, listing the cluster counts that were reachable.
AdaptiveResult adaptive_fit(const Matrix& X, const SupervisingVariable& y,
                            const LossFamily& family, const Matrix& Z,
                            const AdaptiveOptions& opts);

}  // namespace fuseclust
