#include <doctest.h>

#include <cmath>
#include <random>

#include "fuseclust/adaptive.hpp"
#include "fuseclust/simgen.hpp"
#include "test_util.hpp"

using namespace fuseclust;

namespace {

bool same_graph(const WeightGraph& a, const WeightGraph& b, double tol = 1e-9) {
  if (a.edges.size() != b.edges.size()) return false;
  for (size_t l = 0; l < a.edges.size(); ++l) {
    if (a.edges[l].i != b.edges[l].i || a.edges[l].j != b.edges[l].j) return false;
    if (std::abs(a.edges[l].w - b.edges[l].w) > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("residualize_y examples") {
  auto g = LossFamily::gaussian();
  Vector yv(1);
  yv << 5.0;
  Matrix Z(1, 1);
  Z << 1.0;
  Matrix beta(1, 1);
  beta << 2.0;
  auto adj = residualize_y(g, SupervisingVariable::gaussian(yv), Z, beta);
  CHECK(adj.values(0, 0) == doctest::Approx(3.0));

  // zero coefficients leave y untouched
  Matrix beta0 = Matrix::Zero(1, 1);
  auto same = residualize_y(g, SupervisingVariable::gaussian(yv), Z, beta0);
  CHECK(same.values(0, 0) == doctest::Approx(5.0));

  auto p = LossFamily::poisson();
  Vector pv(1);
  pv << 8.0;
  Matrix betap(1, 1);
  betap << std::log(2.0);
  auto padj = residualize_y(p, SupervisingVariable::poisson(pv), Z, betap);
  CHECK(padj.values(0, 0) == doctest::Approx(4.0));

  // boundary link values clip and flag
  auto b = LossFamily::bernoulli();
  Vector bv(2);
  bv << 0.0, 1.0;
  Matrix Z2(2, 1);
  Z2 << 1.0, 1.0;
  bool clipped = false;
  auto badj = residualize_y(b, SupervisingVariable::bernoulli(bv), Z2, beta, &clipped);
  CHECK(clipped);
  CHECK(badj.values(0, 0) >= 0.0);
  CHECK(badj.values(1, 0) <= 1.0);
}

TEST_CASE("residualize then re-adding the shift is the identity") {
  std::mt19937_64 rng(3);
  const int n = 15, d = 2;
  Matrix Z = testutil::random_matrix(rng, n, d, 0.7);
  for (auto fam : {LossFamily::gaussian(), LossFamily::poisson()}) {
    auto y = testutil::random_y(rng, fam, n);
    if (fam.kind == Family::poisson)
      y.values.array() += 1.0;  // keep the log link off the boundary
    Matrix beta = testutil::random_matrix(rng, d, 1, 0.4);
    auto adj = residualize_y(fam, y, Z, beta);
    Matrix neg = -beta;
    auto back = residualize_y(fam, adj, Z, neg);
    CHECK((back.values - y.values).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("cox residualization rescales times and keeps censoring") {
  std::mt19937_64 rng(5);
  auto fam = LossFamily::cox();
  auto y = testutil::random_y(rng, fam, 10);
  Matrix Z = testutil::random_matrix(rng, 10, 2, 0.5);
  Matrix beta = testutil::random_matrix(rng, 2, 1, 0.5);
  auto adj = residualize_y(fam, y, Z, beta);
  for (Index i = 0; i < 10; ++i) {
    CHECK(adj.event[i] == y.event[i]);
    CHECK(adj.time[i] ==
          doctest::Approx(y.time[i] * std::exp((Z * beta)(i, 0))));
  }
}

TEST_CASE("stage-2 weights depend on Z only through the fitted shift") {
  std::mt19937_64 rng(7);
  const int n = 20;
  Matrix X = testutil::random_matrix(rng, n, 3, 1.0);
  auto y = testutil::random_y(rng, LossFamily::gaussian(), n);
  Matrix Z1 = testutil::random_matrix(rng, n, 2, 1.0);
  Matrix beta1 = testutil::random_matrix(rng, 2, 1, 0.5);
  // a different covariate basis with the same fitted shift
  Matrix Z2(n, 4);
  Z2 << 0.5 * Z1, 0.5 * Z1;
  Matrix beta2(4, 1);
  beta2 << beta1, beta1;
  auto fam = LossFamily::gaussian();
  auto adj1 = residualize_y(fam, y, Z1, beta1);
  auto adj2 = residualize_y(fam, y, Z2, beta2);
  WeightConfig cfg{4, -1.0, -1.0};
  CHECK(same_graph(build_weights(X, adj1, fam, cfg), build_weights(X, adj2, fam, cfg)));
}

TEST_CASE("perfect coefficient recovery reproduces covariate-free weights") {
  // simulate with known beta; residualizing with the truth must give back
  // the covariate-free variable, hence the same graph edge-by-edge
  std::mt19937_64 rng(11);
  const int n = 24, d = 3;
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix X = testutil::random_matrix(rng, n, 2, 1.0);
  Vector y_clean(n);
  for (int i = 0; i < n; ++i) y_clean[i] = (i < n / 2 ? 0.0 : 3.0) + 0.2 * normal(rng);
  Matrix Z = testutil::random_matrix(rng, n, d, 1.0);
  Matrix beta = testutil::random_matrix(rng, d, 1, 1.0);
  Vector y_obs = y_clean + (Z * beta).col(0);
  auto fam = LossFamily::gaussian();
  auto adj = residualize_y(fam, SupervisingVariable::gaussian(y_obs), Z, beta);
  CHECK((adj.values.col(0) - y_clean).cwiseAbs().maxCoeff() < 1e-12);
  WeightConfig cfg{4, -1.0, -1.0};
  CHECK(same_graph(build_weights(X, adj, fam, cfg),
                   build_weights(X, SupervisingVariable::gaussian(y_clean), fam, cfg)));
}

TEST_CASE("zero covariates make the adaptive stages coincide") {
  std::mt19937_64 rng(13);
  const int n = 18;
  Matrix X(n, 2);
  Vector yv(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const int g = i < n / 3 ? 0 : i < 2 * n / 3 ? 1 : 2;
    X(i, 0) = 4.0 * g + 0.3 * normal(rng);
    X(i, 1) = (g == 1 ? 3.0 : 0.0) + 0.3 * normal(rng);
    yv[i] = 2.0 * g + 0.2 * normal(rng);
  }
  auto y = SupervisingVariable::gaussian(yv);
  Matrix Z = Matrix::Zero(n, 2);
  AdaptiveOptions opts;
  opts.weights = WeightConfig{4, -1.0, -1.0};
  opts.k_target = 3;
  AdaptiveResult res = adaptive_fit(X, y, LossFamily::gaussian(), Z, opts);
  CHECK(same_graph(res.graph_stage1, res.graph_stage2, 1e-9));
  CHECK(res.clusters.K == 3);
  CHECK((res.y_adjusted.values - y.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adaptive fit removes covariate effects end to end") {
  Scenario sc;
  sc.id = ScenarioId::covariate;
  sc.family = LossFamily::gaussian();
  sc.n = 60;
  sc.p = 10;
  sc.seed = 42;
  SimOutput sim = generate(sc);
  AdaptiveOptions opts;
  opts.k_target = 3;
  AdaptiveResult res = adaptive_fit(sim.X, sim.y, sc.family, sim.Z, opts);
  const double ari_adaptive =
      adjusted_rand_index(res.clusters.labels, sim.true_labels);

  // plain SCC on the same data, unadjusted weights
  WeightGraph g = build_weights(sim.X, sim.y, sc.family, opts.weights);
  auto pi = default_pi(sim.X, sc.family, sim.y);
  TargetFit plain = fit_for_cluster_count(sim.X, sim.y, sc.family, sim.Z, g, pi, 3);
  const double ari_plain =
      adjusted_rand_index(plain.clusters.labels, sim.true_labels);

  CHECK(ari_adaptive >= ari_plain - 1e-12);
  CHECK(ari_adaptive > 0.8);
}

TEST_CASE("unreachable cluster counts raise a descriptive error") {
  // duplicated points fuse at any penalty level, so K = 4 is unreachable
  Matrix X(4, 2);
  X << 0, 0, 0, 0, 5, 5, 5, 5;
  Vector yv(4);
  yv << 0, 0, 1, 1;
  auto y = SupervisingVariable::gaussian(yv);
  std::mt19937_64 rng(17);
  Matrix Z = testutil::random_matrix(rng, 4, 1, 1.0);
  AdaptiveOptions opts;
  opts.weights = WeightConfig{1, -1.0, -1.0};
  opts.k_target = 4;
  CHECK_THROWS_WITH_AS(adaptive_fit(X, y, LossFamily::gaussian(), Z, opts),
                       doctest::Contains("reachable cluster counts"),
                       std::runtime_error);
}
