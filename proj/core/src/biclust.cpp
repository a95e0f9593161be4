#include "fuseclust/biclust.hpp"

#include <cmath>
#include <cstdlib>
#include <memory>
#include <stdexcept>

namespace fuseclust {

namespace {

double grad_lipschitz_local(const LossFamily& family, const SupervisingVariable& y,
                            const Matrix& eta) {
  switch (family.kind) {
    case Family::gaussian: return 1.0;
    case Family::bernoulli: return 0.25;
    case Family::multinomial: return 0.5;
    case Family::poisson:
      return std::exp(std::min(eta.col(0).maxCoeff(), kEtaClip));
    case Family::cox: {
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

class RidgeFactor {
 public:
  RidgeFactor(const SparseMatrix& DtD, double diag)
      : llt_(std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>()) {
    SparseMatrix A = DtD;
    SparseMatrix eye(DtD.rows(), DtD.cols());
    eye.setIdentity();
    A += diag * eye;
    llt_->compute(A);
    if (llt_->info() != Eigen::Success)
      throw std::runtime_error("biclustering system factorization failed");
  }
  Matrix solve(const Matrix& rhs) const { return llt_->solve(rhs); }

 private:
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
};

// One linearized descent step on pi*l(y; theta+Z beta) plus the row/column
// quadratic coupling, with a halving guard for the locally-bounded families.
// Returns the pre-step stationarity gap of the block.
double theta_step(Matrix& theta, const Matrix& Z, Matrix& beta,
                  const SupervisingVariable& y, const LossFamily& family,
                  double pi_y, double rho, const SparseMatrix& D, double normD2,
                  double sigmaZ2, const Matrix& V_theta, const Matrix& Q_theta) {
  Matrix eta = theta + Z * beta;
  const Matrix grad = eval_grad(family, y, eta);
  const double L = grad_lipschitz_local(family, y, eta);
  const Matrix gap = D * theta - V_theta + Q_theta;
  const Matrix g = pi_y * grad + rho * (D.transpose() * gap);
  double stat_gap = g.squaredNorm();
  double t = 1.0 / (pi_y * L + rho * normD2);
  Matrix theta_new = theta - t * g;
  if (needs_backtracking(family)) {
    const double f0 = pi_y * eval_loss(family, y, eta) + 0.5 * rho * gap.squaredNorm();
    for (int bt = 0; bt < 40; ++bt) {
      const Matrix gap_new = D * theta_new - V_theta + Q_theta;
      const double f1 = pi_y * eval_loss(family, y, theta_new + Z * beta) +
                        0.5 * rho * gap_new.squaredNorm();
      if (f1 <= f0 + 1e-12 * (1.0 + std::abs(f0))) break;
      t *= 0.5;
      theta_new = theta - t * g;
    }
  }
  theta = theta_new;

  if (Z.cols() > 0 && pi_y > 0.0 && sigmaZ2 > 0.0) {
    const Matrix grad_beta = Z.transpose() * eval_grad(family, y, theta + Z * beta);
    stat_gap += pi_y * pi_y * grad_beta.squaredNorm();
    double tb = 1.0 / (L * sigmaZ2);
    Matrix beta_new = beta - tb * grad_beta;
    if (needs_backtracking(family)) {
      const double f0 = eval_loss(family, y, theta + Z * beta);
      for (int bt = 0; bt < 40; ++bt) {
        const double f1 = eval_loss(family, y, theta + Z * beta_new);
        if (f1 <= f0 + 1e-12 * (1.0 + std::abs(f0))) break;
        tb *= 0.5;
        beta_new = beta - tb * grad_beta;
      }
    }
    if (family.kind == Family::multinomial)
      beta_new.colwise() -= beta_new.rowwise().mean().eval();
    beta = beta_new;
  }
  return std::sqrt(stat_gap);
}

std::pair<BiclustState, SolveReport> biclust_engine(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const SupervisingVariable* y_tilde,
    const LossFamily* family_tilde, const Matrix* Z_tilde,
    const WeightGraph& row_graph, const WeightGraph& col_graph, double lambda,
    std::pair<double, double> pi, double pi_y_tilde, const BiclustOptions& opts,
    const BiclustState* warm_start) {
  const Index n = X.rows();
  const Index p = X.cols();
  const Index q = family.predictor_cols();
  const Index qt = y_tilde ? family_tilde->predictor_cols() : 0;
  const Index dt = Z_tilde ? Z_tilde->cols() : 0;
  if (y.size() != n)
    throw std::invalid_argument("X and y disagree on the number of observations");
  if (y_tilde && y_tilde->size() != p)
    throw std::invalid_argument("feature-side supervising variable must have length p");
  if (row_graph.n != static_cast<int>(n) || col_graph.n != static_cast<int>(p))
    throw std::invalid_argument("graph sizes do not match the data matrix");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  const double pi_x = pi.first, pi_y = pi.second;
  if (pi_x <= 0.0) throw std::invalid_argument("pi_x must be positive");
  const double lambda_col = opts.col_lambda_ratio * lambda;

  const SparseMatrix Dr = build_difference_matrix(row_graph);
  const SparseMatrix Dc = build_difference_matrix(col_graph);
  const Vector wr = edge_weights(row_graph);
  const Vector wc = edge_weights(col_graph);
  const Index Er = Dr.rows(), Ec = Dc.rows();
  const double normDr2 = spectral_norm_sq(Dr);
  const double normDc2 = spectral_norm_sq(Dc);
  const SparseMatrix DrtDr = SparseMatrix(Dr.transpose()) * Dr;
  const SparseMatrix DctDc = SparseMatrix(Dc.transpose()) * Dc;

  double sigmaZ2 = 0.0;
  if (Z.cols() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Z.transpose() * Z);
    sigmaZ2 = es.eigenvalues().maxCoeff();
  }
  double sigmaZt2 = 0.0;
  if (dt > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Z_tilde->transpose() * *Z_tilde);
    sigmaZt2 = es.eigenvalues().maxCoeff();
  }

  BiclustState s;
  if (warm_start) {
    s = *warm_start;
    if (s.U.rows() != n || s.U.cols() != p || s.V_row.rows() != Er ||
        s.V_col.rows() != Ec || s.V_col.cols() != qt + n)
      throw std::invalid_argument("warm start state has incompatible shapes");
  } else {
    s.U = X;
    s.theta = loss_center(family, y).eta;
    s.beta = Matrix::Zero(Z.cols(), q);
    s.M = X.transpose();
    if (qt > 0) {
      s.theta_tilde = loss_center(*family_tilde, *y_tilde).eta;
      s.beta_tilde = Matrix::Zero(dt, qt);
    }
    s.V_row.resize(Er, q + p);
    s.V_row.leftCols(q) = Dr * s.theta;
    s.V_row.rightCols(p) = Dr * s.U;
    s.Q_row = Matrix::Zero(Er, q + p);
    s.V_col.resize(Ec, qt + n);
    if (qt > 0) s.V_col.leftCols(qt) = Dc * s.theta_tilde;
    s.V_col.rightCols(n) = Dc * s.M;
    s.Q_col = Matrix::Zero(Ec, qt + n);
    s.N = Matrix::Zero(p, n);
    s.rho = opts.solver.rho;
  }

  SolveReport report;
  RidgeFactor row_factor(s.rho * DrtDr, pi_x + s.rho);
  RidgeFactor col_factor(DctDc, 1.0);
  double factored_rho = s.rho;

  // Stationarity of a linearized block at the current split point.
  auto block_stationary = [&](const Matrix& theta, const Matrix& Z_blk,
                              const Matrix& beta, const SupervisingVariable& yb,
                              const LossFamily& fb, double pib,
                              const SparseMatrix& Db, const Matrix& V_theta,
                              const Matrix& Q_theta, double sigma2) {
    const Matrix grad = eval_grad(fb, yb, theta + Z_blk * beta);
    const Matrix a = pib * grad;
    const Matrix b = s.rho * (Db.transpose() * (Db * theta - V_theta + Q_theta));
    const double eps =
        std::sqrt(static_cast<double>(theta.size())) * opts.solver.tol_abs +
        opts.solver.tol_rel * std::max(a.norm(), b.norm());
    if ((a + b).norm() > eps) return false;
    if (Z_blk.cols() > 0 && pib > 0.0) {
      const double eps_b =
          std::sqrt(static_cast<double>(beta.size())) * opts.solver.tol_abs +
          opts.solver.tol_rel * std::sqrt(sigma2) * grad.norm();
      if ((Z_blk.transpose() * grad).norm() > eps_b) return false;
    }
    return true;
  };

  bool residuals_ok = false;
  for (int iter = 1; iter <= opts.solver.max_iter; ++iter) {
    if (residuals_ok) {
      bool stationary = block_stationary(s.theta, Z, s.beta, y, family, pi_y, Dr,
                                         s.V_row.leftCols(q), s.Q_row.leftCols(q),
                                         sigmaZ2);
      if (stationary && qt > 0) {
        const Matrix Zt = dt > 0 ? *Z_tilde : Matrix(p, 0);
        stationary = block_stationary(s.theta_tilde, Zt, s.beta_tilde, *y_tilde,
                                      *family_tilde, pi_y_tilde, Dc,
                                      s.V_col.leftCols(qt), s.Q_col.leftCols(qt),
                                      sigmaZt2);
      }
      if (stationary) {
        report.converged = true;
        break;
      }
    }

    if (factored_rho != s.rho) {
      row_factor = RidgeFactor(s.rho * DrtDr, pi_x + s.rho);
      factored_rho = s.rho;
    }

    s.U = row_factor.solve(
        pi_x * X +
        s.rho * (Dr.transpose() * (s.V_row.rightCols(p) - s.Q_row.rightCols(p))) +
        s.rho * (s.M.transpose() - s.N.transpose()));

    const double row_gap =
        theta_step(s.theta, Z, s.beta, y, family, pi_y, s.rho, Dr, normDr2,
                   sigmaZ2, s.V_row.leftCols(q), s.Q_row.leftCols(q));

    const Matrix M_prev = s.M;
    s.M = col_factor.solve(
        Dc.transpose() * (s.V_col.rightCols(n) - s.Q_col.rightCols(n)) +
        s.U.transpose() + s.N);

    double col_gap = 0.0;
    if (qt > 0) {
      const Matrix Zt = dt > 0 ? *Z_tilde : Matrix(p, 0);
      col_gap = theta_step(s.theta_tilde, Zt, s.beta_tilde, *y_tilde,
                           *family_tilde, pi_y_tilde, s.rho, Dc, normDc2,
                           sigmaZt2, s.V_col.leftCols(qt), s.Q_col.leftCols(qt));
    }

    Matrix DBr(Er, q + p);
    DBr.leftCols(q) = Dr * s.theta;
    DBr.rightCols(p) = Dr * s.U;
    Matrix DBc(Ec, qt + n);
    if (qt > 0) DBc.leftCols(qt) = Dc * s.theta_tilde;
    DBc.rightCols(n) = Dc * s.M;

    const Matrix Vr_prev = s.V_row;
    const Matrix Vc_prev = s.V_col;
    s.V_row = prox_group_lasso(DBr + s.Q_row, wr, lambda / s.rho);
    s.V_col = prox_group_lasso(DBc + s.Q_col, wc, lambda_col / s.rho);
    s.Q_row += DBr - s.V_row;
    s.Q_col += DBc - s.V_col;
    s.N += s.U.transpose() - s.M;

    const double r_row = (DBr - s.V_row).norm();
    const double r_col = (DBc - s.V_col).norm();
    const double r_copy = (s.U.transpose() - s.M).norm();
    const double r_norm = std::sqrt(r_row * r_row + r_col * r_col + r_copy * r_copy);
    const double s_norm = std::sqrt(
        s.rho * s.rho *
            ((Dr.transpose() * (s.V_row - Vr_prev)).squaredNorm() +
             (Dc.transpose() * (s.V_col - Vc_prev)).squaredNorm() +
             (s.M - M_prev).squaredNorm()) +
        row_gap * row_gap + col_gap * col_gap);
    const double dim_pri = std::sqrt(
        static_cast<double>(Er * (q + p) + Ec * (qt + n) + p * n));
    const double dim_dua =
        std::sqrt(static_cast<double>(n * (q + p) + p * (qt + n)));
    const double scale_pri = std::max(
        std::sqrt(DBr.squaredNorm() + DBc.squaredNorm() + s.U.squaredNorm()),
        std::sqrt(s.V_row.squaredNorm() + s.V_col.squaredNorm() + s.M.squaredNorm()));
    const double eps_pri = dim_pri * opts.solver.tol_abs + opts.solver.tol_rel * scale_pri;
    const double dual_scale =
        s.rho * std::sqrt((Dr.transpose() * s.Q_row).squaredNorm() +
                          (Dc.transpose() * s.Q_col).squaredNorm() + s.N.squaredNorm());
    const double eps_dua = dim_dua * opts.solver.tol_abs + opts.solver.tol_rel * dual_scale;
    residuals_ok = r_norm <= eps_pri && s_norm <= eps_dua;

    report.iterations = iter;
    report.primal_residual = r_norm;
    report.dual_residual = s_norm;
    if (opts.solver.record_objective) {
      report.objective_trace.push_back(biclust_objective(
          X, y, family, Z, s, lambda, pi, row_graph, col_graph,
          opts.col_lambda_ratio) +
          (qt > 0 ? pi_y_tilde * eval_loss(*family_tilde, *y_tilde,
                                           s.theta_tilde +
                                               (dt > 0 ? *Z_tilde : Matrix(p, 0)) *
                                                   s.beta_tilde)
                  : 0.0));
    }

    if (opts.solver.adapt_rho && iter % 10 == 0) {
      if (r_norm > 10.0 * s_norm && r_norm > eps_pri && s.rho < 1e10) {
        s.rho *= 2.0;
        s.Q_row *= 0.5;
        s.Q_col *= 0.5;
        s.N *= 0.5;
      } else if (s_norm > 10.0 * r_norm && s_norm > eps_dua && s.rho > 1e-10) {
        s.rho *= 0.5;
        s.Q_row *= 2.0;
        s.Q_col *= 2.0;
        s.N *= 2.0;
      }
    }
  }
  return {std::move(s), std::move(report)};
}

}  // namespace

std::pair<BiclustState, SolveReport> biclust_solve(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const WeightGraph& row_graph, const WeightGraph& col_graph,
    double lambda, std::pair<double, double> pi, const BiclustOptions& opts,
    const BiclustState* warm_start) {
  return biclust_engine(X, y, family, Z, nullptr, nullptr, nullptr, row_graph,
                        col_graph, lambda, pi, 0.0, opts, warm_start);
}

std::pair<BiclustState, SolveReport> doubly_solve(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const SupervisingVariable& y_tilde,
    const LossFamily& family_tilde, const Matrix& Z_tilde,
    const WeightGraph& row_graph, const WeightGraph& col_graph, double lambda,
    std::pair<double, double> pi, double pi_y_tilde, const BiclustOptions& opts,
    const BiclustState* warm_start) {
  return biclust_engine(X, y, family, Z, &y_tilde, &family_tilde, &Z_tilde,
                        row_graph, col_graph, lambda, pi, pi_y_tilde, opts,
                        warm_start);
}

double biclust_objective(const Matrix& X, const SupervisingVariable& y,
                         const LossFamily& family, const Matrix& Z,
                         const BiclustState& fit, double lambda,
                         std::pair<double, double> pi,
                         const WeightGraph& row_graph,
                         const WeightGraph& col_graph, double col_lambda_ratio) {
  const Matrix eta = fit.theta + Z * fit.beta;
  double value = pi.first * 0.5 * (X - fit.U).squaredNorm() +
                 pi.second * eval_loss(family, y, eta);
  for (const auto& e : row_graph.edges) {
    const double sq = (fit.theta.row(e.i) - fit.theta.row(e.j)).squaredNorm() +
                      (fit.U.row(e.i) - fit.U.row(e.j)).squaredNorm();
    value += lambda * e.w * std::sqrt(sq);
  }
  const bool has_tilde = fit.theta_tilde.rows() == fit.U.cols();
  for (const auto& e : col_graph.edges) {
    double sq = (fit.U.col(e.i) - fit.U.col(e.j)).squaredNorm();
    if (has_tilde)
      sq += (fit.theta_tilde.row(e.i) - fit.theta_tilde.row(e.j)).squaredNorm();
    value += col_lambda_ratio * lambda * e.w * std::sqrt(sq);
  }
  return value;
}

namespace {

ClusterAssignment clusters_from_rows(const Matrix& V, const WeightGraph& graph,
                                     double tol) {
  FitState tmp;
  tmp.V = V;
  return extract_clusters(tmp, graph, tol);
}

}  // namespace

ClusterAssignment biclust_row_clusters(const BiclustState& fit,
                                       const WeightGraph& row_graph, double tol) {
  return clusters_from_rows(fit.V_row, row_graph, tol);
}

ClusterAssignment biclust_col_clusters(const BiclustState& fit,
                                       const WeightGraph& col_graph, double tol) {
  return clusters_from_rows(fit.V_col, col_graph, tol);
}

BiclustTargetFit biclust_fit_for_row_count(
    const Matrix& X, const SupervisingVariable& y, const LossFamily& family,
    const Matrix& Z, const WeightGraph& row_graph, const WeightGraph& col_graph,
    std::pair<double, double> pi, int k_target, const BiclustOptions& opts) {
  const int n = static_cast<int>(X.rows());
  if (k_target < 1 || k_target > n)
    throw std::invalid_argument("k_target must lie in 1..n");
  const double tol = default_fusion_tol(X, y, family, row_graph);

  BiclustTargetFit best;
  bool have_best = false;
  BiclustState warm;
  bool have_warm = false;
  auto solve_at = [&](double lambda) {
    auto [fit, rep] = biclust_solve(X, y, family, Z, row_graph, col_graph,
                                    lambda, pi, opts, have_warm ? &warm : nullptr);
    warm = fit;
    have_warm = true;
    ClusterAssignment rcl = biclust_row_clusters(fit, row_graph, tol);
    best.seen_K.push_back(rcl.K);
    const bool better =
        !have_best ||
        std::abs(rcl.K - k_target) < std::abs(best.row_clusters.K - k_target) ||
        (std::abs(rcl.K - k_target) == std::abs(best.row_clusters.K - k_target) &&
         rcl.K > best.row_clusters.K);
    if (better) {
      best.lambda = lambda;
      best.col_clusters = biclust_col_clusters(fit, col_graph, tol);
      best.row_clusters = rcl;
      best.fit = std::move(fit);
      best.report = std::move(rep);
      best.exact = best.row_clusters.K == k_target;
      have_best = true;
    }
    return rcl.K;
  };

  const Matrix centered = X.rowwise() - X.colwise().mean();
  double lam = (pi.first * 0.5 * centered.squaredNorm() +
                pi.second * null_deviance(family, y)) /
               std::max(1.0, static_cast<double>(row_graph.edges.size() +
                                                 col_graph.edges.size()));
  int K = solve_at(lam);
  if (K == k_target) return best;
  double lo = lam, hi = lam;
  int guard = 0;
  while (K > k_target && guard++ < 60) {
    hi *= 2.0;
    K = solve_at(hi);
    if (K == k_target) return best;
    if (K > k_target) lo = hi;
  }
  if (guard >= 60) return best;
  guard = 0;
  K = solve_at(lo);
  while (K < k_target && lo > 1e-12 && guard++ < 60) {
    lo *= 0.5;
    K = solve_at(lo);
    if (K == k_target) return best;
    if (K < k_target) hi = lo;
  }
  for (int it = 0; it < 50 && hi / lo > 1.0 + 1e-6; ++it) {
    const double mid = std::sqrt(lo * hi);
    K = solve_at(mid);
    if (K == k_target) return best;
    if (K > k_target)
      lo = mid;
    else
      hi = mid;
  }
  return best;
}

}  // namespace fuseclust
