#include <doctest.h>

#include <cmath>
#include <set>

#include "fuseclust/clusters.hpp"
#include "fuseclust/simgen.hpp"

using namespace fuseclust;

namespace {

Vector group_col_mean(const SimOutput& sim, int group, int col) {
  double total = 0.0;
  int count = 0;
  for (size_t i = 0; i < sim.true_labels.size(); ++i) {
    if (sim.true_labels[i] == group) {
      total += sim.X(static_cast<Index>(i), col);
      ++count;
    }
  }
  Vector v(1);
  v[0] = total / count;
  return v;
}

double group_y_mean(const SimOutput& sim, int group) {
  double total = 0.0;
  int count = 0;
  for (size_t i = 0; i < sim.true_labels.size(); ++i) {
    if (sim.true_labels[i] == group) {
      total += sim.y.values(static_cast<Index>(i), 0);
      ++count;
    }
  }
  return total / count;
}

}  // namespace

TEST_CASE("seed determinism is bitwise") {
  for (auto id : {ScenarioId::S1, ScenarioId::H2, ScenarioId::covariate}) {
    Scenario sc;
    sc.id = id;
    sc.family = LossFamily::gaussian();
    sc.seed = 7;
    SimOutput a = generate(sc);
    SimOutput b = generate(sc);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y.values - b.y.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.true_labels == b.true_labels);
    if (a.Z.size() > 0) CHECK((a.Z - b.Z).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("s1 group means sit at the stated centroids") {
  Scenario sc;
  sc.id = ScenarioId::S1;
  sc.family = LossFamily::gaussian();
  sc.seed = 11;
  SimOutput sim = gen_spherical(sc);
  REQUIRE(sim.X.rows() == 120);
  REQUIRE(sim.X.cols() == 30);
  const double band = 3.0 / std::sqrt(40.0);  // 3 sigma / sqrt(group size)
  CHECK(group_col_mean(sim, 1, 0)[0] == doctest::Approx(1.6).epsilon(0).scale(1).epsilon(band));
  CHECK(std::abs(group_col_mean(sim, 1, 0)[0] - 1.6) < band);
  CHECK(std::abs(group_col_mean(sim, 2, 0)[0] - 2.0) < band);
  CHECK(std::abs(group_col_mean(sim, 3, 0)[0] - 2.4) < band);
  CHECK(std::abs(group_col_mean(sim, 1, 20)[0] - 2.0) < band);
  CHECK(std::abs(group_col_mean(sim, 2, 20)[0] - 0.0) < band);

  // gaussian y means match the three stated centers
  CHECK(std::abs(group_y_mean(sim, 1) - 2.25) < 3.0 / std::sqrt(40.0));
  CHECK(std::abs(group_y_mean(sim, 2) - 4.0) < 3.0 * 2.0 / std::sqrt(40.0));
  CHECK(std::abs(group_y_mean(sim, 3) - 5.75) < 3.0 / std::sqrt(40.0));
}

TEST_CASE("zero noise lands exactly on the centroids") {
  Scenario sc;
  sc.id = ScenarioId::S1;
  sc.family = LossFamily::gaussian();
  sc.sigma = 0.0;
  sc.seed = 3;
  SimOutput sim = gen_spherical(sc);
  for (Index i = 0; i < sim.X.rows(); ++i) {
    const int g = sim.true_labels[static_cast<size_t>(i)];
    CHECK((sim.X.row(i) - sim.true_centroids.row(g - 1)).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("count-valued y follows the stated poisson means") {
  Scenario sc;
  sc.id = ScenarioId::S1;
  sc.family = LossFamily::poisson();
  sc.seed = 13;
  SimOutput sim = gen_spherical(sc);
  CHECK(std::abs(group_y_mean(sim, 3) - 9.0) < 3.0 * std::sqrt(9.0 / 40.0));
  CHECK(std::abs(group_y_mean(sim, 1) - 1.0) < 3.0 * std::sqrt(1.0 / 40.0));
}

TEST_CASE("binary y follows the stated rates") {
  Scenario sc;
  sc.id = ScenarioId::S1;
  sc.family = LossFamily::bernoulli();
  sc.seed = 17;
  SimOutput sim = gen_spherical(sc);
  CHECK(std::abs(group_y_mean(sim, 1) - 0.85) < 3.0 * std::sqrt(0.85 * 0.15 / 40.0));
  CHECK(std::abs(group_y_mean(sim, 3) - 0.15) < 3.0 * std::sqrt(0.85 * 0.15 / 40.0));

  Scenario s2 = sc;
  s2.id = ScenarioId::S2;
  CHECK_THROWS(gen_spherical(s2));  // no binary variant of S2
}

TEST_CASE("half moons") {
  Scenario sc;
  sc.id = ScenarioId::H1;
  sc.family = LossFamily::gaussian();
  sc.jitter = 0.0;
  sc.seed = 5;
  SimOutput sim = gen_halfmoons(sc);
  REQUIRE(sim.X.cols() == 2);
  // jitter-free points lie on unit arcs around the documented centers
  for (Index i = 0; i < sim.X.rows(); ++i) {
    const int g = sim.true_labels[static_cast<size_t>(i)];
    double cx = g == 1 ? 0.0 : g == 2 ? 1.0 : 0.35;
    double cy = g == 2 ? 0.5 : 0.0;
    const double r = std::hypot(sim.X(i, 0) - cx, sim.X(i, 1) - cy);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    if (g == 2) CHECK(sim.X(i, 1) <= cy + 1e-12);  // flipped arc opens upward
    else CHECK(sim.X(i, 1) >= cy - 1e-12);
  }
}

TEST_CASE("survival censoring calibration") {
  Scenario sc;
  sc.id = ScenarioId::S1;
  sc.family = LossFamily::cox();
  double total_rate = 0.0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    sc.seed = 100 + static_cast<unsigned long>(s);
    SimOutput sim = gen_survival(sc);
    double censored = 0.0;
    for (Index i = 0; i < sim.y.event.size(); ++i)
      censored += sim.y.event[i] == 0 ? 1.0 : 0.0;
    const double rate = censored / 120.0;
    CHECK(std::abs(rate - 0.3) < 0.13);  // single-seed 3-sigma band
    total_rate += rate;
  }
  CHECK(std::abs(total_rate / seeds - 0.3) < 0.06);

  sc.censor_rate = 0.0;
  SimOutput all_events = gen_survival(sc);
  CHECK(all_events.y.event.minCoeff() == 1);
}

TEST_CASE("unequal group sizes are exact") {
  Scenario sc;
  sc.id = ScenarioId::unequal_groups;
  sc.family = LossFamily::gaussian();
  sc.seed = 23;
  SimOutput sim = gen_additional(sc);
  int counts[3] = {0, 0, 0};
  for (int l : sim.true_labels) ++counts[l - 1];
  CHECK(counts[0] == 80);
  CHECK(counts[1] == 10);
  CHECK(counts[2] == 30);
}

TEST_CASE("as2 uses five categories split across three groups") {
  Scenario sc;
  sc.id = ScenarioId::AS2;
  sc.family = LossFamily::multinomial(5);
  sc.seed = 29;
  SimOutput sim = gen_additional(sc);
  REQUIRE(sim.y.values.cols() == 5);
  for (Index k = 0; k < 5; ++k) CHECK(sim.y.values.col(k).sum() > 0.0);
  // category sets are disjoint across groups
  for (Index i = 0; i < sim.X.rows(); ++i) {
    int cls = 0;
    sim.y.values.row(i).maxCoeff(&cls);
    const int g = sim.true_labels[static_cast<size_t>(i)];
    if (g == 1) CHECK((cls == 0 || cls == 4));
    if (g == 2) CHECK(cls == 2);
    if (g == 3) CHECK((cls == 1 || cls == 3));
  }
}

TEST_CASE("as1 forms a fourth cluster from offset points") {
  Scenario sc;
  sc.id = ScenarioId::AS1;
  sc.family = LossFamily::multinomial(3);
  sc.seed = 31;
  SimOutput sim = gen_additional(sc);
  std::set<int> labels(sim.true_labels.begin(), sim.true_labels.end());
  CHECK(labels == std::set<int>{1, 2, 3, 4});
  int moved = 0;
  for (int l : sim.true_labels) moved += l == 4 ? 1 : 0;
  // a quarter of each group in expectation
  CHECK(moved > 12);
  CHECK(moved < 48);
}

TEST_CASE("covariate scenario recovers beta by least squares") {
  Scenario sc;
  sc.id = ScenarioId::covariate;
  sc.family = LossFamily::gaussian();
  sc.seed = 37;
  SimOutput sim = gen_additional(sc);
  REQUIRE(sim.Z.cols() == 10);
  REQUIRE(sim.beta_true.rows() == 10);
  // subtract the group centers, regress on Z
  Vector resid(sim.X.rows());
  for (Index i = 0; i < sim.X.rows(); ++i) {
    const int g = sim.true_labels[static_cast<size_t>(i)];
    const double mu = g == 1 ? 2.25 : g == 2 ? 4.0 : 5.75;
    resid[i] = sim.y.values(i, 0) - mu;
  }
  Vector beta_hat = (sim.Z.transpose() * sim.Z)
                        .ldlt()
                        .solve(sim.Z.transpose() * resid);
  // three standard errors with sigma <= 2 and n = 120
  const double band = 3.0 * 2.0 / std::sqrt(120.0);
  CHECK((beta_hat - sim.beta_true.col(0)).cwiseAbs().maxCoeff() < band);
}

TEST_CASE("noiseless data recovers true labels through the solver") {
  Scenario sc;
  sc.id = ScenarioId::S1;
  sc.family = LossFamily::gaussian();
  sc.sigma = 0.0;
  sc.n = 30;
  sc.p = 6;
  sc.seed = 41;
  SimOutput sim = gen_spherical(sc);
  auto fam = LossFamily::gaussian();
  WeightGraph g = build_weights(sim.X, sim.y, fam, WeightConfig{5, -1, -1});
  auto pi = default_pi(sim.X, fam, sim.y);
  TargetFit tf = fit_for_cluster_count(sim.X, sim.y, fam, Matrix(30, 0), g, pi, 3);
  CHECK(tf.exact);
  CHECK(adjusted_rand_index(tf.clusters.labels, sim.true_labels) ==
        doctest::Approx(1.0));
}

TEST_CASE("biclust scenario aliases the S1 gaussian design") {
  Scenario a;
  a.id = ScenarioId::biclust;
  a.family = LossFamily::gaussian();
  a.seed = 43;
  Scenario b = a;
  b.id = ScenarioId::S1;
  CHECK((generate(a).X - generate(b).X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scenario names round trip") {
  for (auto id : {ScenarioId::S1, ScenarioId::S2, ScenarioId::H1, ScenarioId::H2,
                  ScenarioId::AS1, ScenarioId::AS2, ScenarioId::covariate,
                  ScenarioId::varying_p, ScenarioId::unequal_groups,
                  ScenarioId::biclust}) {
    CHECK(scenario_from_name(scenario_name(id)) == id);
  }
  CHECK_THROWS(scenario_from_name("nope"));
}
