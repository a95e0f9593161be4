#include "fuseclust/admm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fuseclust {

namespace {

// Lipschitz bound on the loss gradient in eta. Poisson and cox return a
// local bound at the current eta; those families get a backtracking guard.
double grad_lipschitz(const LossFamily& family, const SupervisingVariable& y,
                      const Matrix& eta) {
  switch (family.kind) {
    case Family::gaussian: return 1.0;
    case Family::bernoulli: return 0.25;
    case Family::multinomial: return 0.5;
    case Family::poisson:
      return std::exp(std::min(eta.col(0).maxCoeff(), kEtaClip));
    case Family::cox: {
      // Diagonal bound of the partial-likelihood Hessian: the cumulative
      // relative risk per observation, floored for very small eta.
      const Matrix g = eval_grad(family, y, eta);
      double m = 0.25;
      for (Index i = 0; i < g.rows(); ++i)
        m = std::max(m, g(i, 0) + static_cast<double>(y.event[i]));
      return m;
    }
  }
  throw std::logic_error("unreachable");
}

bool needs_backtracking(const LossFamily& family) {
  return family.kind == Family::poisson || family.kind == Family::cox;
}

double penalty_value(const Matrix& DB, const Vector& w) {
  double total = 0.0;
  for (Index l = 0; l < DB.rows(); ++l) total += w[l] * DB.row(l).norm();
  return total;
}

}  // namespace

Matrix prox_group_lasso(const Matrix& V, const Vector& weights, double tau) {
  if (weights.size() != V.rows())
    throw std::invalid_argument("prox_group_lasso: one weight per row required");
  if (tau < 0.0) throw std::invalid_argument("prox_group_lasso: tau must be >= 0");
  Matrix out(V.rows(), V.cols());
  for (Index l = 0; l < V.rows(); ++l) {
    const double norm = V.row(l).norm();
    const double thresh = tau * weights[l];
    if (norm <= thresh) {
      out.row(l).setZero();
    } else {
      out.row(l) = (1.0 - thresh / norm) * V.row(l);
    }
  }
  return out;
}

USystemFactor::USystemFactor(const SparseMatrix& D, double pi_x, double rho)
    : pi_x_(pi_x), rho_(rho) {
  if (pi_x <= 0.0 && rho <= 0.0)
    throw std::invalid_argument("U system requires pi_x > 0 or rho > 0");
  const Index n = D.cols();
  DtD_ = SparseMatrix(D.transpose()) * D;
  SparseMatrix A = rho * DtD_;
  SparseMatrix eye(n, n);
  eye.setIdentity();
  A += pi_x * eye;
  llt_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(A);
  if (llt_->info() != Eigen::Success)
    throw std::runtime_error("U system factorization failed");
}

Matrix USystemFactor::solve(const Matrix& rhs) const { return llt_->solve(rhs); }

double objective(const Matrix& X, const SupervisingVariable& y,
                 const LossFamily& family, const Matrix& Z, const FitState& fit,
                 double lambda, std::pair<double, double> pi,
                 const WeightGraph& graph) {
  if (fit.U.rows() != X.rows() || fit.U.cols() != X.cols())
    throw std::invalid_argument("objective: U shape does not match X");
  if (fit.theta.rows() != X.rows())
    throw std::invalid_argument("objective: theta length does not match X");
  const Matrix eta = fit.theta + Z * fit.beta;
  double value = pi.first * 0.5 * (X - fit.U).squaredNorm() +
                 pi.second * eval_loss(family, y, eta);
  for (const auto& e : graph.edges) {
    double sq = (fit.theta.row(e.i) - fit.theta.row(e.j)).squaredNorm() +
                (fit.U.row(e.i) - fit.U.row(e.j)).squaredNorm();
    value += lambda * e.w * std::sqrt(sq);
  }
  return value;
}

std::pair<FitState, SolveReport> scc_solve(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const WeightGraph& graph, double lambda,
    std::pair<double, double> pi, const SolverOptions& opts,
    const FitState* warm_start) {
  const Index n = X.rows();
  const Index p = X.cols();
  const Index q = family.predictor_cols();
  const Index d = Z.cols();
  if (y.size() != n)
    throw std::invalid_argument("X and y disagree on the number of observations");
  if (Z.rows() != 0 && Z.rows() != n)
    throw std::invalid_argument("covariate matrix row count does not match X");
  if (graph.n != static_cast<int>(n))
    throw std::invalid_argument("weight graph node count does not match X");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  const double pi_x = pi.first, pi_y = pi.second;
  if (pi_x <= 0.0) throw std::invalid_argument("pi_x must be positive");

  const SparseMatrix D = build_difference_matrix(graph);
  const Vector w = edge_weights(graph);
  const Index E = D.rows();
  const double normD2 = spectral_norm_sq(D);

  double sigmaZ2 = 0.0;
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Z.transpose() * Z);
    sigmaZ2 = es.eigenvalues().maxCoeff();
  }

  FitState s;
  if (warm_start) {
    s = *warm_start;
    if (s.U.rows() != n || s.U.cols() != p || s.theta.rows() != n ||
        s.theta.cols() != q || s.V.rows() != E || s.V.cols() != q + p)
      throw std::invalid_argument("warm start state has incompatible shapes");
  } else {
    s.U = X;
    s.theta = loss_center(family, y).eta;
    s.beta = Matrix::Zero(d, q);
    s.V.resize(E, q + p);
    s.V.leftCols(q) = D * s.theta;
    s.V.rightCols(p) = D * s.U;
    s.Q = Matrix::Zero(E, q + p);
    s.rho = opts.rho;
  }

  SolveReport report;
  USystemFactor factor(D, pi_x, s.rho);

  bool residuals_ok = false;
  // Running curvature estimate for the locally-bounded families; kept
  // monotone so the step size settles instead of cycling.
  double L_run = 0.0;
  Matrix DB(E, q + p);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    // theta/beta gradient at the current point, shared by the convergence
    // check and the descent step.
    Matrix eta = s.theta + Z * s.beta;
    if (family.kind == Family::poisson && eta.maxCoeff() > kEtaClip)
      report.eta_clipped = true;
    const Matrix grad_eta = eval_grad(family, y, eta);

    // Convergence: split residuals from the previous sweep plus stationarity
    // of the linearized blocks at the current (V, Q). Small per-iteration
    // movement alone is not evidence of stationarity when rho is large.
    if (residuals_ok) {
      const Matrix a = pi_y * grad_eta;
      const Matrix b =
          s.rho * (D.transpose() * (D * s.theta - s.V.leftCols(q) + s.Q.leftCols(q)));
      const double eps_theta =
          std::sqrt(static_cast<double>(n * q)) * opts.tol_abs +
          opts.tol_rel * std::max(a.norm(), b.norm());
      bool stationary = (a + b).norm() <= eps_theta;
      if (stationary && d > 0 && pi_y > 0.0) {
        const Matrix gb = Z.transpose() * grad_eta;
        const double eps_beta =
            std::sqrt(static_cast<double>(d * q)) * opts.tol_abs +
            opts.tol_rel * std::sqrt(sigmaZ2) * grad_eta.norm();
        stationary = gb.norm() <= eps_beta;
      }
      if (stationary) {
        report.converged = true;
        break;
      }
    }

    // U block: exact ridge solve against the current split point.
    s.U = factor.solve(pi_x * X +
                       s.rho * (D.transpose() * (s.V.rightCols(p) - s.Q.rightCols(p))));

    // theta block: one linearized step on the augmented Lagrangian.
    L_run = std::max(L_run, grad_lipschitz(family, y, eta));
    const double L = L_run;
    const Matrix Dtheta_gap = D * s.theta - s.V.leftCols(q) + s.Q.leftCols(q);
    const Matrix g_theta =
        pi_y * grad_eta + s.rho * (D.transpose() * Dtheta_gap);
    const double theta_stat_gap = g_theta.norm();
    double t_theta = 1.0 / (pi_y * L + s.rho * normD2);
    Matrix theta_new = s.theta - t_theta * g_theta;
    if (needs_backtracking(family)) {
      const double f0 = pi_y * eval_loss(family, y, eta) + 0.5 * s.rho * Dtheta_gap.squaredNorm();
      for (int bt = 0; bt < 40; ++bt) {
        const Matrix gap_new = D * theta_new - s.V.leftCols(q) + s.Q.leftCols(q);
        const double f1 = pi_y * eval_loss(family, y, theta_new + Z * s.beta) +
                          0.5 * s.rho * gap_new.squaredNorm();
        if (f1 <= f0 + 1e-12 * (1.0 + std::abs(f0))) break;
        t_theta *= 0.5;
        theta_new = s.theta - t_theta * g_theta;
        if (pi_y > 0.0)
          L_run = std::max(L_run, (1.0 / t_theta - s.rho * normD2) / pi_y);
      }
    }
    s.theta = theta_new;
    s.step = t_theta;

    // beta block: gradient of the loss alone, as printed; the pi_y scaling
    // of the objective cancels against the step size, leaving 1/(L sigma^2)
    // on the unscaled gradient.
    double beta_stat_gap = 0.0;
    if (d > 0 && pi_y > 0.0 && sigmaZ2 > 0.0) {
      const Matrix grad_beta =
          Z.transpose() * eval_grad(family, y, s.theta + Z * s.beta);
      beta_stat_gap = pi_y * grad_beta.norm();
      double t_beta = 1.0 / (L * sigmaZ2);
      Matrix beta_new = s.beta - t_beta * grad_beta;
      if (needs_backtracking(family)) {
        const double f0 = eval_loss(family, y, s.theta + Z * s.beta);
        for (int bt = 0; bt < 40; ++bt) {
          const double f1 = eval_loss(family, y, s.theta + Z * beta_new);
          if (f1 <= f0 + 1e-12 * (1.0 + std::abs(f0))) break;
          t_beta *= 0.5;
          beta_new = s.beta - t_beta * grad_beta;
        }
      }
      if (family.kind == Family::multinomial)
        beta_new.colwise() -= beta_new.rowwise().mean().eval();
      s.beta = beta_new;
    }

    // V block: rowwise block soft-threshold; Q: dual ascent.
    DB.leftCols(q) = D * s.theta;
    DB.rightCols(p) = D * s.U;
    const Matrix V_prev = s.V;
    s.V = prox_group_lasso(DB + s.Q, w, lambda / s.rho);
    s.Q += DB - s.V;

    const double r_norm = (DB - s.V).norm();
    // The dual residual carries the V-change term plus the stationarity gaps
    // of the linearized blocks (their pre-step gradients); otherwise a large
    // rho freezes theta while the V-based residual reads as converged.
    const double s_norm = std::sqrt(
        std::pow(s.rho * (D.transpose() * (s.V - V_prev)).norm(), 2) +
        theta_stat_gap * theta_stat_gap + beta_stat_gap * beta_stat_gap);
    const double dim_pri = std::sqrt(static_cast<double>(E * (q + p)));
    const double dim_dua = std::sqrt(static_cast<double>(n * (q + p)));
    const double eps_pri =
        dim_pri * opts.tol_abs + opts.tol_rel * std::max(DB.norm(), s.V.norm());
    const double eps_dua =
        dim_dua * opts.tol_abs +
        opts.tol_rel * (s.rho * (D.transpose() * s.Q).norm() +
                        pi_y * grad_eta.norm());
    residuals_ok = r_norm <= eps_pri && s_norm <= eps_dua;

    report.iterations = iter;
    report.primal_residual = r_norm;
    report.dual_residual = s_norm;
    if (opts.record_objective) {
      const Matrix eta_now = s.theta + Z * s.beta;
      double obj = pi_x * 0.5 * (X - s.U).squaredNorm() +
                   pi_y * eval_loss(family, y, eta_now) +
                   lambda * penalty_value(DB, w);
      report.objective_trace.push_back(obj);
    }

    // Residual balancing on a cadence, and only while the unbalanced side is
    // actually above tolerance; every-iteration switching can lock into a
    // limit cycle around the prox decision boundary.
    if (opts.adapt_rho && iter % 10 == 0) {
      if (r_norm > 10.0 * s_norm && r_norm > eps_pri && s.rho < 1e10) {
        s.rho *= 2.0;
        s.Q *= 0.5;
        factor = USystemFactor(D, pi_x, s.rho);
      } else if (s_norm > 10.0 * r_norm && s_norm > eps_dua && s.rho > 1e-10) {
        s.rho *= 0.5;
        s.Q *= 2.0;
        factor = USystemFactor(D, pi_x, s.rho);
      }
    }
  }

  if (!opts.record_objective) {
    FitState tmp = s;
    report.objective_trace.push_back(
        objective(X, y, family, Z, tmp, lambda, pi, graph));
  }
  return {std::move(s), std::move(report)};
}

}  // namespace fuseclust
