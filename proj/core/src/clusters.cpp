#include "fuseclust/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fuseclust/parallel.hpp"

namespace fuseclust {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[b] = a;
  }
};

double comb2(double x) { return 0.5 * x * (x - 1.0); }

// Unpenalized stack [theta0 X] used to set the fusion tolerance scale. The
// per-observation fit equals the link of y for canonical links; cox has no
// separable fit and uses zero.
Matrix unpenalized_stack(const Matrix& X, const SupervisingVariable& y,
                         const LossFamily& family) {
  const Index n = X.rows();
  const Index q = family.predictor_cols();
  Matrix B(n, q + X.cols());
  switch (family.kind) {
    case Family::gaussian:
      B.col(0) = y.values.col(0);
      break;
    case Family::bernoulli:
    case Family::poisson:
      for (Index i = 0; i < n; ++i) B(i, 0) = link(family, y.values(i, 0));
      break;
    case Family::multinomial:
      for (Index i = 0; i < n; ++i)
        B.row(i).head(q) = link_probs(y.values.row(i).transpose()).transpose();
      break;
    case Family::cox:
      B.col(0).setZero();
      break;
  }
  B.rightCols(X.cols()) = X;
  return B;
}

}  // namespace

ClusterAssignment extract_clusters(const FitState& fit, const WeightGraph& graph,
                                   double tol) {
  const int n = graph.n;
  if (fit.V.rows() != static_cast<Index>(graph.edges.size()))
    throw std::invalid_argument("fit state and graph disagree on edge count");
  UnionFind uf(n);
  for (size_t l = 0; l < graph.edges.size(); ++l) {
    if (fit.V.row(static_cast<Index>(l)).norm() <= tol)
      uf.unite(graph.edges[l].i, graph.edges[l].j);
  }
  ClusterAssignment out;
  out.fusion_tol = tol;
  out.labels.assign(static_cast<size_t>(n), 0);
  std::vector<int> root_label(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const int r = uf.find(i);
    if (root_label[static_cast<size_t>(r)] == 0) root_label[static_cast<size_t>(r)] = ++out.K;
    out.labels[static_cast<size_t>(i)] = root_label[static_cast<size_t>(r)];
  }
  return out;
}

double default_fusion_tol(const Matrix& X, const SupervisingVariable& y,
                          const LossFamily& family, const WeightGraph& graph) {
  const SparseMatrix D = build_difference_matrix(graph);
  const Matrix DB = D * unpenalized_stack(X, y, family);
  std::vector<double> norms;
  for (Index l = 0; l < DB.rows(); ++l) {
    const double v = DB.row(l).norm();
    if (v > 0.0) norms.push_back(v);
  }
  if (norms.empty()) return 1e-9;
  const size_t mid = norms.size() / 2;
  std::nth_element(norms.begin(), norms.begin() + static_cast<long>(mid), norms.end());
  return 1e-6 * norms[mid];
}

namespace {

// Scale guess putting lambda where penalty and smooth terms compete.
double lambda_scale(const Matrix& X, const SupervisingVariable& y,
                    const LossFamily& family, std::pair<double, double> pi,
                    const WeightGraph& graph) {
  const SparseMatrix D = build_difference_matrix(graph);
  const Matrix DB = D * unpenalized_stack(X, y, family);
  double pen = 0.0;
  for (size_t l = 0; l < graph.edges.size(); ++l)
    pen += graph.edges[l].w * DB.row(static_cast<Index>(l)).norm();
  const Matrix centered = X.rowwise() - X.colwise().mean();
  const double smooth =
      pi.first * 0.5 * centered.squaredNorm() + pi.second * null_deviance(family, y);
  if (pen <= 0.0) return 1.0;
  return std::max(smooth / pen, 1e-12);
}

}  // namespace

SolvePath solve_path(const Matrix& X, const SupervisingVariable& y,
                     const LossFamily& family, const Matrix& Z,
                     const WeightGraph& graph, std::pair<double, double> pi,
                     const PathOptions& opts) {
  SolvePath path;
  path.fusion_tol = default_fusion_tol(X, y, family, graph);
  const int n = static_cast<int>(X.rows());

  std::vector<double> grid = opts.grid;
  if (!grid.empty()) {
    for (size_t i = 1; i < grid.size(); ++i)
      if (grid[i] <= grid[i - 1])
        throw std::invalid_argument("lambda grid must be strictly increasing");
  } else {
    // lambda_max by doubling until one cluster, lambda_min by bisection to
    // the first fusion.
    double lam = lambda_scale(X, y, family, pi, graph);
    FitState warm;
    bool have_warm = false;
    auto clusters_at = [&](double lambda) {
      auto [fit, rep] = scc_solve(X, y, family, Z, graph, lambda, pi, opts.solver,
                                  have_warm ? &warm : nullptr);
      warm = fit;
      have_warm = true;
      return extract_clusters(fit, graph, path.fusion_tol).K;
    };
    int K = clusters_at(lam);
    int guard = 0;
    while (K > 1 && guard++ < 60) {
      lam *= 2.0;
      K = clusters_at(lam);
    }
    while (K == 1 && lam > 1e-10 && guard++ < 120) {
      lam *= 0.5;
      K = clusters_at(lam);
      if (K > 1) {
        lam *= 2.0;
        break;
      }
    }
    const double lambda_max = lam;
    double lo = 0.0, hi = lambda_max;
    for (int it = 0; it < 40; ++it) {
      if (lo > 0.0 && hi / lo < 1.1) break;
      const double mid = lo > 0.0 ? std::sqrt(lo * hi) : hi / 16.0;
      if (clusters_at(mid) < n)
        hi = mid;
      else
        lo = mid;
    }
    double lambda_min = std::max(hi, 1e-12);
    if (lambda_min >= lambda_max) lambda_min = lambda_max / 100.0;
    const int m = std::max(opts.num_points, 2);
    grid.resize(static_cast<size_t>(m));
    const double lr = std::log(lambda_max / lambda_min);
    for (int i = 0; i < m; ++i)
      grid[static_cast<size_t>(i)] = lambda_min * std::exp(lr * i / (m - 1));
  }

  const FitState* warm = nullptr;
  for (double lam : grid) {
    auto [fit, rep] = scc_solve(X, y, family, Z, graph, lam, pi, opts.solver, warm);
    PathPoint pt;
    pt.lambda = lam;
    pt.clusters = extract_clusters(fit, graph, path.fusion_tol);
    pt.fit = std::move(fit);
    pt.report = std::move(rep);
    path.points.push_back(std::move(pt));
    warm = &path.points.back().fit;
  }
  return path;
}

TargetFit fit_for_cluster_count(const Matrix& X, const SupervisingVariable& y,
                                const LossFamily& family, const Matrix& Z,
                                const WeightGraph& graph,
                                std::pair<double, double> pi, int k_target,
                                const SolverOptions& opts) {
  const int n = static_cast<int>(X.rows());
  if (k_target < 1 || k_target > n)
    throw std::invalid_argument("k_target must lie in 1..n");
  const double tol = default_fusion_tol(X, y, family, graph);

  TargetFit best;
  bool have_best = false;
  FitState warm;
  bool have_warm = false;
  auto solve_at = [&](double lambda) {
    auto [fit, rep] =
        scc_solve(X, y, family, Z, graph, lambda, pi, opts, have_warm ? &warm : nullptr);
    warm = fit;
    have_warm = true;
    ClusterAssignment cl = extract_clusters(fit, graph, tol);
    best.seen_K.push_back(cl.K);
    const bool better =
        !have_best ||
        std::abs(cl.K - k_target) < std::abs(best.clusters.K - k_target) ||
        (std::abs(cl.K - k_target) == std::abs(best.clusters.K - k_target) &&
         cl.K > best.clusters.K);
    if (better) {
      best.lambda = lambda;
      best.fit = fit;
      best.report = rep;
      best.clusters = cl;
      best.exact = cl.K == k_target;
      have_best = true;
    }
    return cl.K;
  };

  double lam = lambda_scale(X, y, family, pi, graph);
  int K = solve_at(lam);
  if (K == k_target) return best;

  // Bracket the target: K decreases as lambda grows.
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

StabilityResult stability_select(const Matrix& X, const SupervisingVariable& y,
                                 const LossFamily& family, const Matrix& Z,
                                 const StabilityOptions& opts,
                                 const SupervisingVariable* weight_y) {
  const int n = static_cast<int>(X.rows());
  if (opts.B < 2) throw std::invalid_argument("stability selection needs B >= 2");
  if (opts.fraction <= 0.5 || opts.fraction >= 1.0)
    throw std::invalid_argument("subsample fraction must lie in (0.5, 1)");
  const SupervisingVariable& wy = weight_y ? *weight_y : y;

  // Full-data path fixes the grid and the per-lambda cluster counts.
  WeightGraph full_graph = build_weights(X, wy, family, opts.weights);
  const auto pi = default_pi(X, family, y);
  PathOptions path_opts = opts.path;
  SolvePath full = solve_path(X, y, family, Z, full_graph, pi, path_opts);

  StabilityResult res;
  for (const auto& pt : full.points) {
    res.lambdas.push_back(pt.lambda);
    res.K_full.push_back(pt.clusters.K);
  }
  const size_t L = res.lambdas.size();

  const int m = static_cast<int>(std::ceil(opts.fraction * n));
  std::vector<std::vector<int>> samples(static_cast<size_t>(opts.B));
  std::vector<std::vector<std::vector<int>>> labels(
      static_cast<size_t>(opts.B), std::vector<std::vector<int>>(L));

  std::vector<int> all(static_cast<size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  for (int b = 0; b < opts.B; ++b) {
    std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ULL * static_cast<unsigned long long>(b + 1));
    std::vector<int> idx;
    std::sample(all.begin(), all.end(), std::back_inserter(idx), m, rng);
    samples[static_cast<size_t>(b)] = std::move(idx);
  }

  parallel_for(opts.jobs, opts.B, [&](int b) {
    const auto& idx = samples[static_cast<size_t>(b)];
    Matrix Xb(idx.size(), X.cols());
    for (size_t r = 0; r < idx.size(); ++r) Xb.row(static_cast<Index>(r)) = X.row(idx[r]);
    SupervisingVariable yb = y.subset(idx);
    Matrix Zb(Z.rows() > 0 ? static_cast<Index>(idx.size()) : 0, Z.cols());
    if (Z.rows() > 0)
      for (size_t r = 0; r < idx.size(); ++r) Zb.row(static_cast<Index>(r)) = Z.row(idx[r]);
    // Weights (and pi) are data-dependent and re-derived per subsample.
    WeightGraph gb = build_weights(Xb, wy.subset(idx), family, opts.weights);
    const auto pib = default_pi(Xb, family, yb);
    PathOptions sub_opts = path_opts;
    sub_opts.grid = res.lambdas;
    SolvePath sp = solve_path(Xb, yb, family, Zb, gb, pib, sub_opts);
    for (size_t l = 0; l < L; ++l)
      labels[static_cast<size_t>(b)][l] = sp.points[l].clusters.labels;
  });

  res.scores.assign(L, 0.0);
  for (size_t l = 0; l < L; ++l) {
    // Degenerate subsample labelings (all singletons / one cluster) would
    // score 1 by the ARI convention without carrying any information; a
    // grid point where most subsamples are degenerate is not selectable.
    int degenerate = 0;
    for (int b = 0; b < opts.B; ++b) {
      const auto& lab = labels[static_cast<size_t>(b)][l];
      const int K = *std::max_element(lab.begin(), lab.end());
      if (K <= 1 || K >= static_cast<int>(lab.size())) ++degenerate;
    }
    if (degenerate > opts.B / 2) {
      res.scores[l] = -1.0;
      continue;
    }
    double total = 0.0;
    int pairs = 0;
    for (int b1 = 0; b1 < opts.B; ++b1) {
      for (int b2 = b1 + 1; b2 < opts.B; ++b2) {
        // Restrict both assignments to shared observations.
        std::vector<int> la, lb;
        const auto& i1 = samples[static_cast<size_t>(b1)];
        const auto& i2 = samples[static_cast<size_t>(b2)];
        size_t p1 = 0, p2 = 0;
        while (p1 < i1.size() && p2 < i2.size()) {
          if (i1[p1] < i2[p2]) ++p1;
          else if (i1[p1] > i2[p2]) ++p2;
          else {
            la.push_back(labels[static_cast<size_t>(b1)][l][p1]);
            lb.push_back(labels[static_cast<size_t>(b2)][l][p2]);
            ++p1;
            ++p2;
          }
        }
        if (la.size() < 2) continue;
        total += adjusted_rand_index(la, lb);
        ++pairs;
      }
    }
    res.scores[l] = pairs > 0 ? total / pairs : 0.0;
  }

  // Maximal agreement; ties resolve to the smallest lambda so that a stable
  // fine partition is preferred over its equally-stable coarsenings.
  double best = -2.0;
  for (size_t l = 0; l < L; ++l) {
    const int K = res.K_full[l];
    if (K <= 1 || K >= n) continue;
    if (opts.k_target > 0 && K != opts.k_target) continue;
    best = std::max(best, res.scores[l]);
  }
  if (best < -1.5)
    throw std::runtime_error(
        "stability selection: every grid point is trivial or misses the target K");
  int best_l = -1;
  for (size_t l = 0; l < L && best_l < 0; ++l) {
    const int K = res.K_full[l];
    if (K <= 1 || K >= n) continue;
    if (opts.k_target > 0 && K != opts.k_target) continue;
    if (res.scores[l] >= best - 1e-9) best_l = static_cast<int>(l);
  }
  res.lambda_star = res.lambdas[static_cast<size_t>(best_l)];
  return res;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("adjusted_rand_index: label vectors differ in length");
  const size_t n = a.size();
  if (n < 2) throw std::invalid_argument("adjusted_rand_index needs at least 2 items");
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (size_t i = 0; i < n; ++i) {
    cells[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [k, v] : cells) sum_cells += comb2(v);
  for (const auto& [k, v] : rows) sum_rows += comb2(v);
  for (const auto& [k, v] : cols) sum_cols += comb2(v);
  const double total = comb2(static_cast<double>(n));
  const double expected = sum_rows * sum_cols / total;
  const double denom = 0.5 * (sum_rows + sum_cols) - expected;
  if (denom == 0.0) return 1.0;  // both trivial partitions of the same kind
  return (sum_cells - expected) / denom;
}

}  // namespace fuseclust
