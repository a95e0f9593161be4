#include <doctest.h>

#include <cmath>
#include <random>

#include "fuseclust/biclust.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace fuseclust;

namespace {

SolverOptions tight() {
  SolverOptions o;
  o.tol_abs = 1e-10;
  o.tol_rel = 1e-8;
  o.max_iter = 200000;
  return o;
}

WeightGraph complete_graph(int n, double w = 1.0) {
  WeightGraph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j, w});
  return g;
}

// 2 x 2 block-constant matrix plus optional noise.
Matrix checkerboard(int n, int p, double a, double b, double c, double d) {
  Matrix X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) {
      const bool top = i < n / 2, left = j < p / 2;
      X(i, j) = top ? (left ? a : b) : (left ? c : d);
    }
  return X;
}

}  // namespace

TEST_CASE("biclustering at lambda zero returns the data") {
  std::mt19937_64 rng(3);
  const int n = 6, p = 4;
  Matrix X = testutil::random_matrix(rng, n, p, 1.0);
  auto y = testutil::random_y(rng, LossFamily::gaussian(), n);
  WeightGraph rows = testutil::ring_graph(rng, n);
  WeightGraph cols = testutil::ring_graph(rng, p);
  Matrix Z(n, 0);
  auto pi = default_pi(X, LossFamily::gaussian(), y);
  BiclustOptions opts;
  opts.solver = tight();
  auto [fit, rep] = biclust_solve(X, y, LossFamily::gaussian(), Z, rows, cols,
                                  0.0, pi, opts);
  CHECK(rep.converged);
  CHECK((fit.U - X).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((fit.M - X.transpose()).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("large lambda fuses to the grand mean") {
  std::mt19937_64 rng(5);
  const int n = 6, p = 4;
  Matrix X = testutil::random_matrix(rng, n, p, 1.0);
  auto y = testutil::random_y(rng, LossFamily::gaussian(), n);
  WeightGraph rows = testutil::ring_graph(rng, n);
  WeightGraph cols = testutil::ring_graph(rng, p);
  Matrix Z(n, 0);
  auto pix = default_pi(X, LossFamily::gaussian(), y).first;
  BiclustOptions opts;
  opts.solver = tight();
  const double lam = 1e5 / pix;
  auto [fit, rep] = biclust_solve(X, y, LossFamily::gaussian(), Z, rows, cols,
                                  lam, {pix, 0.0}, opts);
  const double grand = X.mean();
  CHECK((fit.U.array() - grand).abs().maxCoeff() < 1e-4);
}

TEST_CASE("noiseless checkerboard is recovered exactly") {
  const int n = 4, p = 4;
  Matrix X = checkerboard(n, p, 0.0, 3.0, 5.0, -2.0);
  Vector yv(n);
  yv << 0.0, 0.1, 4.0, 4.1;
  auto y = SupervisingVariable::gaussian(yv);
  WeightGraph rows = complete_graph(n);
  WeightGraph cols = complete_graph(p);
  Matrix Z(n, 0);
  auto pi = default_pi(X, LossFamily::gaussian(), y);
  BiclustOptions opts;
  opts.solver = tight();

  BiclustTargetFit tf = biclust_fit_for_row_count(X, y, LossFamily::gaussian(),
                                                  Z, rows, cols, pi, 2, opts);
  REQUIRE(tf.exact);
  CHECK(tf.row_clusters.labels == std::vector<int>{1, 1, 2, 2});
  CHECK(tf.col_clusters.K == 2);
  CHECK(tf.col_clusters.labels == std::vector<int>{1, 1, 2, 2});
  // block-constant centroids: vanishing within-block spread
  for (int bi = 0; bi < 2; ++bi)
    for (int bj = 0; bj < 2; ++bj) {
      const double ref = tf.fit.U(bi * 2, bj * 2);
      for (int i = bi * 2; i < bi * 2 + 2; ++i)
        for (int j = bj * 2; j < bj * 2 + 2; ++j)
          CHECK(std::abs(tf.fit.U(i, j) - ref) < 1e-5);
    }
  // copy constraint satisfied at convergence
  CHECK((tf.fit.U.transpose() - tf.fit.M).norm() < 1e-6);
}

TEST_CASE("transpose symmetry without supervision") {
  std::mt19937_64 rng(7);
  const int n = 5;
  Matrix X = testutil::random_matrix(rng, n, n, 1.0);
  auto y = SupervisingVariable::gaussian(Vector::Zero(n));
  WeightGraph g = complete_graph(n, 0.8);
  Matrix Z(n, 0);
  const double pix = 1.0;
  BiclustOptions opts;
  opts.solver = tight();
  const double lam = 0.05;
  auto [fit1, rep1] = biclust_solve(X, y, LossFamily::gaussian(), Z, g, g, lam,
                                    {pix, 0.0}, opts);
  auto [fit2, rep2] = biclust_solve(X.transpose(), y, LossFamily::gaussian(), Z,
                                    g, g, lam, {pix, 0.0}, opts);
  CHECK(rep1.converged);
  CHECK(rep2.converged);
  CHECK((fit1.U - fit2.U.transpose()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("biclustering matches the primal oracle") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 4; ++rep) {
    const int n = 4 + static_cast<int>(rng() % 2);
    const int p = 3 + static_cast<int>(rng() % 3);
    Matrix X = testutil::random_matrix(rng, n, p, 1.0);
    auto y = testutil::random_y(rng, LossFamily::gaussian(), n);
    WeightGraph rows = testutil::ring_graph(rng, n);
    WeightGraph cols = testutil::ring_graph(rng, p);
    Matrix Z(n, 0);
    auto pi = default_pi(X, LossFamily::gaussian(), y);
    std::uniform_real_distribution<double> unif(0.05, 0.4);
    const double lam = unif(rng) / pi.first;
    BiclustOptions opts;
    opts.solver = tight();
    auto [fit, repv] = biclust_solve(X, y, LossFamily::gaussian(), Z, rows, cols,
                                     lam, pi, opts);
    const double admm_obj = biclust_objective(X, y, LossFamily::gaussian(), Z,
                                              fit, lam, pi, rows, cols);
    auto sol = oracle::solve_biclust_primal(X, y, LossFamily::gaussian(), Z,
                                            rows, cols, lam, pi);
    CHECK(admm_obj == doctest::Approx(sol.objective).epsilon(1e-4));
  }
}

TEST_CASE("doubly supervised with zero weight reproduces plain biclustering") {
  std::mt19937_64 rng(13);
  const int n = 6, p = 5;
  Matrix X = testutil::random_matrix(rng, n, p, 1.0);
  auto y = testutil::random_y(rng, LossFamily::gaussian(), n);
  auto yt = testutil::random_y(rng, LossFamily::gaussian(), p);
  WeightGraph rows = testutil::ring_graph(rng, n);
  WeightGraph cols = testutil::ring_graph(rng, p);
  Matrix Z(n, 0), Zt(p, 0);
  auto pi = default_pi(X, LossFamily::gaussian(), y);
  const double lam = 0.1 / pi.first;
  BiclustOptions opts;
  opts.solver = tight();

  auto [plain, rp] = biclust_solve(X, y, LossFamily::gaussian(), Z, rows, cols,
                                   lam, pi, opts);
  auto [doubly, rd] = doubly_solve(X, y, LossFamily::gaussian(), Z, yt,
                                   LossFamily::gaussian(), Zt, rows, cols, lam,
                                   pi, 0.0, opts);
  const double op = biclust_objective(X, y, LossFamily::gaussian(), Z, plain,
                                      lam, pi, rows, cols);
  const double od = biclust_objective(X, y, LossFamily::gaussian(), Z, doubly,
                                      lam, pi, rows, cols);
  CHECK(op == doctest::Approx(od).epsilon(1e-5));
  CHECK((plain.U - doubly.U).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("doubly supervised at lambda zero fits the feature response") {
  std::mt19937_64 rng(17);
  const int n = 6, p = 5;
  Matrix X = testutil::random_matrix(rng, n, p, 1.0);
  auto y = testutil::random_y(rng, LossFamily::gaussian(), n);
  Vector ytv = testutil::random_matrix(rng, p, 1, 1.0).col(0);
  auto yt = SupervisingVariable::gaussian(ytv);
  WeightGraph rows = testutil::ring_graph(rng, n);
  WeightGraph cols = testutil::ring_graph(rng, p);
  Matrix Z(n, 0), Zt(p, 0);
  auto pi = default_pi(X, LossFamily::gaussian(), y);
  BiclustOptions opts;
  opts.solver = tight();
  auto [fit, rep] = doubly_solve(X, y, LossFamily::gaussian(), Z, yt,
                                 LossFamily::gaussian(), Zt, rows, cols, 0.0,
                                 pi, 0.5, opts);
  CHECK(rep.converged);
  CHECK((fit.theta_tilde.col(0) - ytv).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("informative feature supervision helps column recovery") {
  // columns overlap in X; y_tilde separates them cleanly
  std::mt19937_64 rng(19);
  const int n = 12, p = 10;
  std::vector<int> col_truth;
  for (int j = 0; j < p; ++j) col_truth.push_back(j < p / 2 ? 1 : 2);
  double doubly_total = 0.0, plain_total = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    std::mt19937_64 r2(100 + static_cast<unsigned long>(seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix X(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) {
        const double rowm = i < n / 2 ? 0.0 : 2.0;
        const double colm = j < p / 2 ? 0.0 : 0.8;  // weak column signal
        X(i, j) = rowm + colm + 0.8 * normal(r2);
      }
    Vector yv(n);
    for (int i = 0; i < n; ++i) yv[i] = (i < n / 2 ? 0.0 : 3.0) + 0.3 * normal(r2);
    auto y = SupervisingVariable::gaussian(yv);
    Vector ytv(p);
    for (int j = 0; j < p; ++j) ytv[j] = (j < p / 2 ? 0.0 : 3.0) + 0.3 * normal(r2);
    auto yt = SupervisingVariable::gaussian(ytv);
    WeightGraph rows = complete_graph(n, 1.0);
    WeightGraph cols = complete_graph(p, 1.0);
    Matrix Z(n, 0), Zt(p, 0);
    auto pi = default_pi(X, LossFamily::gaussian(), y);
    const double pi_yt =
        1.0 / null_deviance(LossFamily::gaussian(), yt);
    BiclustOptions opts;

    auto best_col_ari = [&](bool use_doubly) {
      double best = -1.0;
      for (double mult : {0.02, 0.05, 0.1, 0.2, 0.4, 0.8}) {
        const double lam = mult / pi.first;
        ClusterAssignment ccl;
        if (use_doubly) {
          auto [fit, rep] = doubly_solve(X, y, LossFamily::gaussian(), Z, yt,
                                         LossFamily::gaussian(), Zt, rows, cols,
                                         lam, pi, pi_yt, opts);
          ccl = biclust_col_clusters(fit, cols, 1e-6);
        } else {
          auto [fit, rep] = biclust_solve(X, y, LossFamily::gaussian(), Z, rows,
                                          cols, lam, pi, opts);
          ccl = biclust_col_clusters(fit, cols, 1e-6);
        }
        if (ccl.K < 2 || ccl.K > p - 1) continue;
        best = std::max(best, adjusted_rand_index(ccl.labels, col_truth));
      }
      return best < -0.5 ? 0.0 : best;
    };
    doubly_total += best_col_ari(true);
    plain_total += best_col_ari(false);
  }
  CHECK(doubly_total / seeds >= plain_total / seeds);
}
