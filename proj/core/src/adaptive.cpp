#include "fuseclust/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fuseclust {

SupervisingVariable residualize_y(const LossFamily& family,
                                  const SupervisingVariable& y, const Matrix& Z,
                                  const Matrix& beta_hat, bool* clipped) {
  if (family.kind != y.family.kind || family.classes != y.family.classes)
    throw std::invalid_argument("loss family does not match supervising variable");
  if (Z.rows() != y.size())
    throw std::invalid_argument("covariate rows do not match y");
  if (beta_hat.rows() != Z.cols() || beta_hat.cols() != family.predictor_cols())
    throw std::invalid_argument("beta_hat shape does not match Z and family");
  const Index n = y.size();
  const Matrix shift = Z * beta_hat;  // n x q
  bool clip = false;

  switch (family.kind) {
    case Family::gaussian: {
      Vector adj = y.values.col(0) - shift.col(0);
      if (clipped) *clipped = false;
      return SupervisingVariable::gaussian(std::move(adj));
    }
    case Family::bernoulli: {
      Vector adj(n);
      for (Index i = 0; i < n; ++i) {
        const double eta = link(family, y.values(i, 0), &clip) - shift(i, 0);
        adj[i] = inverse_link(family, eta);
      }
      if (clipped) *clipped = clip;
      return SupervisingVariable::bernoulli_mean(std::move(adj));
    }
    case Family::poisson: {
      Vector adj(n);
      for (Index i = 0; i < n; ++i) {
        const double eta = link(family, y.values(i, 0), &clip) - shift(i, 0);
        adj[i] = inverse_link(family, eta);
      }
      if (clipped) *clipped = clip;
      return SupervisingVariable::poisson(std::move(adj));
    }
    case Family::multinomial: {
      Matrix adj(n, family.classes);
      for (Index i = 0; i < n; ++i) {
        const Vector eta =
            link_probs(y.values.row(i).transpose(), &clip) - shift.row(i).transpose();
        adj.row(i) = inverse_link_probs(eta).transpose();
      }
      if (clipped) *clipped = clip;
      return SupervisingVariable::multinomial(std::move(adj));
    }
    case Family::cox: {
      // No link exists; rescale times by the estimated relative risk so the
      // weight-stage distances see the covariate-free ordering.
      Vector t(n);
      for (Index i = 0; i < n; ++i)
        t[i] = y.time[i] * std::exp(std::min(shift(i, 0), kEtaClip));
      if (clipped) *clipped = false;
      return SupervisingVariable::cox(std::move(t), y.event);
    }
  }
  throw std::logic_error("unreachable");
}

namespace {

struct StageFit {
  double lambda = 0.0;
  FitState fit;
  SolveReport report;
  ClusterAssignment clusters;
};

StageFit fit_stage(const Matrix& X, const SupervisingVariable& y,
                   const LossFamily& family, const Matrix& Z,
                   const WeightGraph& graph, const WeightConfig& cfg,
                   const SupervisingVariable* weight_y,
                   const AdaptiveOptions& opts) {
  const auto pi = default_pi(X, family, y);
  if (opts.k_target > 0) {
    TargetFit tf = fit_for_cluster_count(X, y, family, Z, graph, pi,
                                         opts.k_target, opts.solver);
    if (!tf.exact) {
      std::ostringstream msg;
      msg << "no penalty level achieves K = " << opts.k_target
          << "; reachable cluster counts:";
      std::vector<int> seen = tf.seen_K;
      std::sort(seen.begin(), seen.end());
      seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
      for (int k : seen) msg << ' ' << k;
      throw std::runtime_error(msg.str());
    }
    return {tf.lambda, std::move(tf.fit), std::move(tf.report), std::move(tf.clusters)};
  }
  StabilityOptions st = opts.stability;
  st.weights = cfg;
  st.path.solver = opts.solver;
  StabilityResult sel = stability_select(X, y, family, Z, st, weight_y);
  auto [fit, rep] = scc_solve(X, y, family, Z, graph, sel.lambda_star, pi, opts.solver);
  ClusterAssignment cl =
      extract_clusters(fit, graph, default_fusion_tol(X, y, family, graph));
  return {sel.lambda_star, std::move(fit), std::move(rep), std::move(cl)};
}

}  // namespace

AdaptiveResult adaptive_fit(const Matrix& X, const SupervisingVariable& y,
                            const LossFamily& family, const Matrix& Z,
                            const AdaptiveOptions& opts) {
  if (Z.cols() == 0)
    throw std::invalid_argument("adaptive fit requires covariates; use scc_solve otherwise");

  AdaptiveResult out;

  // Stage 1: unadjusted weights, estimate the covariate effect.
  out.graph_stage1 = build_weights(X, y, family, opts.weights);
  StageFit s1 = fit_stage(X, y, family, Z, out.graph_stage1, opts.weights, nullptr, opts);
  out.beta_hat = s1.fit.beta;
  out.lambda_stage1 = s1.lambda;
  out.report_stage1 = std::move(s1.report);

  // Stage 2: adjusted variable, recomputed supervision level, new weights.
  out.y_adjusted = residualize_y(family, y, Z, out.beta_hat, &out.link_clipped);
  out.alpha_stage2 = default_alpha(X, family, out.y_adjusted);
  WeightConfig cfg2 = opts.weights;
  cfg2.alpha = out.alpha_stage2;
  out.graph_stage2 = build_weights(X, out.y_adjusted, family, cfg2);

  // Stage 3: refit with the adjusted weights.
  StageFit s3 = fit_stage(X, y, family, Z, out.graph_stage2, cfg2, &out.y_adjusted, opts);
  out.lambda = s3.lambda;
  out.fit = std::move(s3.fit);
  out.report = std::move(s3.report);
  out.clusters = std::move(s3.clusters);
  return out;
}

}  // namespace fuseclust
