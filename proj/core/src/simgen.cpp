#include "fuseclust/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fuseclust {

namespace {

// Half-moon layout: three radius-1 arcs, the middle one flipped and offset so
// it interlocks with the outer two. In H1 arcs 1 and 3 nearly coincide while
// arc 2 stays clear; in H2 arc 2 is pulled into the others.
struct Arc {
  double cx, cy;
  bool flipped;
};
constexpr Arc kH1Arcs[3] = {{0.0, 0.0, false}, {1.0, 0.5, true}, {0.35, 0.0, false}};
constexpr Arc kH2Arcs[3] = {{0.0, 0.0, false}, {0.5, 0.3, true}, {0.35, 0.0, false}};
constexpr double kMoonJitter = 0.14;

// Per-dimension noise used when p grows; keeps the unsupervised baseline at
// the same difficulty as the p = 30 design.
double varying_p_sigma(int p) { return p >= 100 ? 1.8 : 1.45; }

// Covariate effect scale per family. The raw coefficients are ~N(+-3, 1);
// link-scale families need smaller shifts to stay generatable.
double covariate_scale(const LossFamily& family) {
  switch (family.kind) {
    case Family::gaussian: return 1.0;
    case Family::bernoulli: return 0.30;
    case Family::multinomial: return 0.30;
    case Family::poisson: return 0.30;
    case Family::cox: return 0.30;
  }
  return 1.0;
}

std::vector<int> group_labels(const std::vector<int>& sizes) {
  std::vector<int> labels;
  for (size_t g = 0; g < sizes.size(); ++g)
    labels.insert(labels.end(), static_cast<size_t>(sizes[g]), static_cast<int>(g) + 1);
  return labels;
}

Matrix spherical_X(std::mt19937_64& rng, const Matrix& mu,
                   const std::vector<int>& labels, double sigma) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix X(static_cast<Index>(labels.size()), mu.cols());
  for (size_t i = 0; i < labels.size(); ++i) {
    for (Index j = 0; j < mu.cols(); ++j)
      X(static_cast<Index>(i), j) = mu(labels[i] - 1, j) + sigma * normal(rng);
  }
  return X;
}

// Block-constant centroids in the style of the base designs: the first half
// of the features sits at `a`, the second half at `b`.
Matrix block_centroids(int p, const std::vector<std::pair<double, double>>& ab) {
  Matrix mu(static_cast<Index>(ab.size()), p);
  const int half = p / 2;
  for (size_t g = 0; g < ab.size(); ++g) {
    for (int j = 0; j < p; ++j)
      mu(static_cast<Index>(g), j) = j < half ? ab[g].first : ab[g].second;
  }
  return mu;
}

Matrix s1_centroids(int p) {
  return block_centroids(p, {{1.6, 2.0}, {2.0, 0.0}, {2.4, 2.0}});
}
Matrix s2_centroids(int p) {
  return block_centroids(p, {{-1.0, 0.0}, {0.0, 2.0}, {1.0, 0.0}});
}

// Uniform censoring window solving (1 - e^{-z}) / z = rate for z = r * m:
// each observation then carries exactly the target censoring probability.
double censor_window_z(double rate) {
  double lo = 1e-8, hi = 1e8;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = (1.0 - std::exp(-mid)) / mid;
    if (f > rate)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

SupervisingVariable survival_y(std::mt19937_64& rng, const std::vector<int>& labels,
                               const std::vector<double>& rates, double censor_rate,
                               const Vector* risk_shift = nullptr) {
  const Index n = static_cast<Index>(labels.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector t(n);
  IntVector ev(n);
  const double z = censor_rate > 0.0 ? censor_window_z(censor_rate) : 0.0;
  for (Index i = 0; i < n; ++i) {
    double rate = rates[static_cast<size_t>(labels[static_cast<size_t>(i)] - 1)];
    if (risk_shift) rate *= std::exp(std::min((*risk_shift)[i], kEtaClip));
    const double T = -std::log(1.0 - unif(rng)) / rate;
    if (censor_rate > 0.0) {
      const double C = unif(rng) * z / rate;
      t[i] = std::min(T, C);
      ev[i] = T <= C ? 1 : 0;
    } else {
      t[i] = T;
      ev[i] = 1;
    }
    t[i] = std::max(t[i], 1e-12);
  }
  return SupervisingVariable::cox(std::move(t), std::move(ev));
}

// Group hazard rates exp(c k) with c = log 3: consecutive group medians
// separate threefold.
std::vector<double> scenario_rates() {
  return {std::exp(std::log(3.0)), std::exp(2.0 * std::log(3.0)),
          std::exp(3.0 * std::log(3.0))};
}

SupervisingVariable scalar_y(std::mt19937_64& rng, ScenarioId id,
                             const LossFamily& family,
                             const std::vector<int>& labels, double censor_rate,
                             const Vector* shift = nullptr) {
  const Index n = static_cast<Index>(labels.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool s1_like = id == ScenarioId::S1 || id == ScenarioId::H1;

  switch (family.kind) {
    case Family::gaussian: {
      Vector y(n);
      for (Index i = 0; i < n; ++i) {
        const int g = labels[static_cast<size_t>(i)];
        double mean, sd;
        if (s1_like) {
          mean = g == 1 ? 2.25 : g == 2 ? 4.0 : 5.75;
          sd = g == 2 ? 2.0 : 1.0;
        } else {
          mean = g == 1 ? 1.0 : g == 2 ? 4.5 : 8.0;
          sd = std::sqrt(4.4);
        }
        if (shift) mean += (*shift)[i];
        y[i] = mean + sd * normal(rng);
      }
      return SupervisingVariable::gaussian(std::move(y));
    }
    case Family::bernoulli: {
      if (!s1_like)
        throw std::invalid_argument(
            "binary y cannot form three separate groups in this scenario");
      Vector y(n);
      for (Index i = 0; i < n; ++i) {
        const int g = labels[static_cast<size_t>(i)];
        double p = g == 1 ? 0.85 : g == 2 ? 0.5 : 0.15;
        if (shift) {
          const double eta = std::log(p / (1.0 - p)) + (*shift)[i];
          p = 1.0 / (1.0 + std::exp(-eta));
        }
        y[i] = unif(rng) < p ? 1.0 : 0.0;
      }
      return SupervisingVariable::bernoulli(std::move(y));
    }
    case Family::poisson: {
      Vector y(n);
      std::uniform_int_distribution<int> pick(0, 2);
      for (Index i = 0; i < n; ++i) {
        const int g = labels[static_cast<size_t>(i)];
        double mu;
        if (s1_like) {
          const double mix[3] = {1.0, 5.0, 9.0};
          mu = g == 1 ? 1.0 : g == 2 ? mix[pick(rng)] : 9.0;
        } else {
          mu = g == 1 ? 1.0 : g == 2 ? 10.0 : 23.0;
        }
        if (shift) mu = std::exp(std::min(std::log(mu) + (*shift)[i], kEtaClip));
        std::poisson_distribution<long> pois(mu);
        y[i] = static_cast<double>(pois(rng));
      }
      return SupervisingVariable::poisson(std::move(y));
    }
    case Family::multinomial: {
      std::vector<std::vector<double>> probs;
      if (s1_like) {
        probs = {{0.75, 0.15, 0.1}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.1, 0.15, 0.75}};
      } else {
        probs = {{0.9, 0.05, 0.05}, {0.05, 0.9, 0.05}, {0.05, 0.05, 0.9}};
      }
      const int K = 3;
      std::vector<int> cls(static_cast<size_t>(n));
      for (Index i = 0; i < n; ++i) {
        std::vector<double> p = probs[static_cast<size_t>(labels[static_cast<size_t>(i)] - 1)];
        if (shift) {
          // shift acts on the class-1 log odds only in covariate runs with
          // scalar shifts; full multinomial shifts use matrix form elsewhere
          double eta0 = std::log(std::max(p[0], 1e-12)) + (*shift)[i];
          p[0] = std::exp(eta0);
        }
        const double total = p[0] + p[1] + p[2];
        double u = unif(rng) * total, acc = 0.0;
        int chosen = K;
        for (int k = 0; k < K; ++k) {
          acc += p[static_cast<size_t>(k)];
          if (u <= acc) {
            chosen = k + 1;
            break;
          }
        }
        cls[static_cast<size_t>(i)] = std::min(chosen, K);
      }
      return SupervisingVariable::multinomial_labels(cls, K);
    }
    case Family::cox:
      return survival_y(rng, labels, scenario_rates(), censor_rate, shift);
  }
  throw std::logic_error("unreachable");
}

}  // namespace

std::string scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::S1: return "S1";
    case ScenarioId::S2: return "S2";
    case ScenarioId::H1: return "H1";
    case ScenarioId::H2: return "H2";
    case ScenarioId::AS1: return "AS1";
    case ScenarioId::AS2: return "AS2";
    case ScenarioId::covariate: return "covariate";
    case ScenarioId::varying_p: return "varying-p";
    case ScenarioId::unequal_groups: return "unequal-groups";
    case ScenarioId::biclust: return "biclust";
  }
  return "unknown";
}

ScenarioId scenario_from_name(const std::string& name) {
  if (name == "S1" || name == "s1") return ScenarioId::S1;
  if (name == "S2" || name == "s2") return ScenarioId::S2;
  if (name == "H1" || name == "h1") return ScenarioId::H1;
  if (name == "H2" || name == "h2") return ScenarioId::H2;
  if (name == "AS1" || name == "as1") return ScenarioId::AS1;
  if (name == "AS2" || name == "as2") return ScenarioId::AS2;
  if (name == "covariate") return ScenarioId::covariate;
  if (name == "varying-p" || name == "varying_p") return ScenarioId::varying_p;
  if (name == "unequal-groups" || name == "unequal_groups")
    return ScenarioId::unequal_groups;
  if (name == "biclust") return ScenarioId::biclust;
  throw std::invalid_argument("unknown scenario: " + name);
}

SimOutput gen_spherical(const Scenario& sc) {
  if (sc.id != ScenarioId::S1 && sc.id != ScenarioId::S2)
    throw std::invalid_argument("gen_spherical expects S1 or S2");
  std::mt19937_64 rng(sc.seed);
  const int n3 = sc.n / 3;
  std::vector<int> sizes = {n3, n3, sc.n - 2 * n3};
  SimOutput out;
  out.true_labels = group_labels(sizes);
  out.true_centroids = sc.id == ScenarioId::S1 ? s1_centroids(sc.p) : s2_centroids(sc.p);
  const double sigma = sc.sigma >= 0.0 ? sc.sigma
                       : (sc.id == ScenarioId::S1 ? 1.0 : std::sqrt(4.4));
  out.X = spherical_X(rng, out.true_centroids, out.true_labels, sigma);
  out.y = scalar_y(rng, sc.id, sc.family, out.true_labels, sc.censor_rate);
  return out;
}

SimOutput gen_halfmoons(const Scenario& sc) {
  if (sc.id != ScenarioId::H1 && sc.id != ScenarioId::H2)
    throw std::invalid_argument("gen_halfmoons expects H1 or H2");
  std::mt19937_64 rng(sc.seed);
  const int n3 = sc.n / 3;
  std::vector<int> sizes = {n3, n3, sc.n - 2 * n3};
  SimOutput out;
  out.true_labels = group_labels(sizes);
  const Arc* arcs = sc.id == ScenarioId::H1 ? kH1Arcs : kH2Arcs;
  const double jit = sc.jitter >= 0.0 ? sc.jitter : kMoonJitter;
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  std::normal_distribution<double> normal(0.0, 1.0);
  out.X.resize(sc.n, 2);
  for (int i = 0; i < sc.n; ++i) {
    const Arc& a = arcs[out.true_labels[static_cast<size_t>(i)] - 1];
    const double t = angle(rng);
    const double sgn = a.flipped ? -1.0 : 1.0;
    out.X(i, 0) = a.cx + std::cos(t) + jit * normal(rng);
    out.X(i, 1) = a.cy + sgn * std::sin(t) + jit * normal(rng);
  }
  out.true_centroids.resize(3, 2);
  for (int g = 0; g < 3; ++g) {
    out.true_centroids(g, 0) = arcs[g].cx;
    out.true_centroids(g, 1) = arcs[g].cy + (arcs[g].flipped ? -2.0 : 2.0) / M_PI;
  }
  out.y = scalar_y(rng, sc.id, sc.family, out.true_labels, sc.censor_rate);
  return out;
}

SimOutput gen_survival(const Scenario& sc) {
  Scenario copy = sc;
  copy.family = LossFamily::cox();
  switch (sc.id) {
    case ScenarioId::S1:
    case ScenarioId::S2:
      return gen_spherical(copy);
    case ScenarioId::H1:
    case ScenarioId::H2:
      return gen_halfmoons(copy);
    default:
      throw std::invalid_argument("gen_survival expects S1, S2, H1 or H2");
  }
}

SimOutput gen_additional(const Scenario& sc) {
  std::mt19937_64 rng(sc.seed);
  SimOutput out;
  switch (sc.id) {
    case ScenarioId::AS1: {
      if (sc.family.kind != Family::multinomial && sc.family.kind != Family::bernoulli)
        throw std::invalid_argument("AS1 supports binary or categorical y");
      const int n3 = sc.n / 3;
      std::vector<int> sizes = {n3, n3, sc.n - 2 * n3};
      std::vector<int> groups = group_labels(sizes);
      Matrix mu = block_centroids(sc.p, {{-1.0, 0.0}, {0.0, -4.0}, {1.0, 0.0}});
      const double sigma = sc.sigma >= 0.0 ? sc.sigma : std::sqrt(2.0);
      out.X = spherical_X(rng, mu, groups, sigma);
      // A quarter of each group moves to an offset centroid and forms the
      // fourth cluster.
      Vector offset = Vector::Constant(sc.p, 2.0 / std::sqrt(static_cast<double>(sc.p)));
      out.true_labels = groups;
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int i = 0; i < sc.n; ++i) {
        if (unif(rng) < 0.25) {
          const int g = groups[static_cast<size_t>(i)];
          for (int j = 0; j < sc.p; ++j)
            out.X(i, j) = mu(g - 1, j) + offset[j] + sigma * normal(rng);
          out.true_labels[static_cast<size_t>(i)] = 4;
        }
      }
      out.true_centroids = Matrix(4, sc.p);
      out.true_centroids.topRows(3) = mu;
      out.true_centroids.row(3) = mu.colwise().mean() + offset.transpose();
      // y keeps the three-group structure of the original labels.
      out.y = scalar_y(rng, ScenarioId::S2, sc.family, groups, sc.censor_rate);
      if (sc.family.kind == Family::bernoulli)
        out.y = scalar_y(rng, ScenarioId::S1, sc.family, groups, sc.censor_rate);
      return out;
    }
    case ScenarioId::AS2: {
      if (sc.family.kind != Family::multinomial)
        throw std::invalid_argument("AS2 supports categorical y only");
      const int n3 = sc.n / 3;
      std::vector<int> sizes = {n3, n3, sc.n - 2 * n3};
      out.true_labels = group_labels(sizes);
      Matrix mu = s2_centroids(sc.p);
      const double sigma = sc.sigma >= 0.0 ? sc.sigma : 1.0;
      out.X = spherical_X(rng, mu, out.true_labels, sigma);
      // A fifth of the points are noisier and drift toward the grand mean.
      const Vector grand = mu.colwise().mean().transpose();
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int i = 0; i < sc.n; ++i) {
        if (unif(rng) < 0.2) {
          const int g = out.true_labels[static_cast<size_t>(i)];
          for (int j = 0; j < sc.p; ++j) {
            const double m = 0.4 * mu(g - 1, j) + 0.6 * grand[j];
            out.X(i, j) = m + 2.0 * sigma * normal(rng);
          }
        }
      }
      out.true_centroids = mu;
      // Five categories split disjointly across the three groups.
      const std::vector<std::vector<double>> probs = {{0.5, 0.0, 0.0, 0.0, 0.5},
                                                      {0.0, 0.0, 1.0, 0.0, 0.0},
                                                      {0.0, 0.5, 0.0, 0.5, 0.0}};
      std::vector<int> cls(static_cast<size_t>(sc.n));
      for (int i = 0; i < sc.n; ++i) {
        const auto& p = probs[static_cast<size_t>(out.true_labels[static_cast<size_t>(i)] - 1)];
        double u = unif(rng), acc = 0.0;
        for (int k = 0; k < 5; ++k) {
          acc += p[static_cast<size_t>(k)];
          if (u <= acc || k == 4) {
            cls[static_cast<size_t>(i)] = k + 1;
            break;
          }
        }
      }
      out.y = SupervisingVariable::multinomial_labels(cls, 5);
      return out;
    }
    case ScenarioId::covariate: {
      const int n3 = sc.n / 3;
      std::vector<int> sizes = {n3, n3, sc.n - 2 * n3};
      out.true_labels = group_labels(sizes);
      out.true_centroids = s1_centroids(sc.p);
      const double sigma = sc.sigma >= 0.0 ? sc.sigma : 1.0;
      out.X = spherical_X(rng, out.true_centroids, out.true_labels, sigma);
      const int d = 10;
      std::normal_distribution<double> normal(0.0, 1.0);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      out.Z.resize(sc.n, d);
      for (int i = 0; i < sc.n; ++i)
        for (int j = 0; j < d; ++j) out.Z(i, j) = normal(rng);
      const double scale = covariate_scale(sc.family);
      out.beta_true.resize(d, 1);
      for (int j = 0; j < d; ++j) {
        const double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
        out.beta_true(j, 0) = scale * (sign * 3.0 + normal(rng));
      }
      Vector shift = out.Z * out.beta_true.col(0);
      out.y = scalar_y(rng, ScenarioId::S1, sc.family, out.true_labels,
                       sc.censor_rate, &shift);
      return out;
    }
    case ScenarioId::varying_p: {
      if (sc.p != 50 && sc.p != 100)
        throw std::invalid_argument("varying-p expects p in {50, 100}");
      Scenario copy = sc;
      copy.id = ScenarioId::S1;
      if (copy.sigma < 0.0) copy.sigma = varying_p_sigma(sc.p);
      return gen_spherical(copy);
    }
    case ScenarioId::unequal_groups: {
      std::vector<int> sizes = {80, 10, 30};
      if (sc.n != 120) {
        sizes = {(sc.n * 8 + 6) / 12, std::max(sc.n / 12, 2), 0};
        sizes[2] = sc.n - sizes[0] - sizes[1];
      }
      out.true_labels = group_labels(sizes);
      out.true_centroids = s1_centroids(sc.p);
      const double sigma = sc.sigma >= 0.0 ? sc.sigma : 1.0;
      out.X = spherical_X(rng, out.true_centroids, out.true_labels, sigma);
      out.y = scalar_y(rng, ScenarioId::S1, sc.family, out.true_labels, sc.censor_rate);
      return out;
    }
    default:
      throw std::invalid_argument("gen_additional expects AS1, AS2, covariate, "
                                  "varying-p or unequal-groups");
  }
}

SimOutput generate(const Scenario& sc) {
  switch (sc.id) {
    case ScenarioId::S1:
    case ScenarioId::S2:
      return gen_spherical(sc);
    case ScenarioId::H1:
    case ScenarioId::H2:
      return gen_halfmoons(sc);
    case ScenarioId::biclust: {
      Scenario copy = sc;
      copy.id = ScenarioId::S1;
      return gen_spherical(copy);
    }
    default:
      return gen_additional(sc);
  }
}

}  // namespace fuseclust
