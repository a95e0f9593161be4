#include "fuseclust/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fuseclust/csv.hpp"

namespace fuseclust {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

Vector column_ranges(const Matrix& X) {
  return (X.colwise().maxCoeff() - X.colwise().minCoeff()).transpose();
}

bool is_hard_binary(const Matrix& values) {
  return ((values.array() == 0.0) || (values.array() == 1.0)).all();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

// Shared k-NN kernel construction on a precomputed blended distance matrix.
WeightGraph knn_kernel_graph(const Matrix& dist, const WeightConfig& cfg) {
  const int n = static_cast<int>(dist.rows());
  if (cfg.k < 1 || cfg.k >= n)
    throw std::invalid_argument("neighbor count k must satisfy 1 <= k < n");

  // nu_ij = 1 iff j among i's k nearest or vice versa; ties broken by index.
  std::vector<std::vector<char>> keep(static_cast<size_t>(n),
                                      std::vector<char>(static_cast<size_t>(n), 0));
  std::vector<int> order(static_cast<size_t>(n) - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) order[static_cast<size_t>(m++)] = j;
    std::partial_sort(order.begin(), order.begin() + cfg.k, order.end(),
                      [&](int a, int b) {
                        return dist(i, a) != dist(i, b) ? dist(i, a) < dist(i, b)
                                                        : a < b;
                      });
    for (int r = 0; r < cfg.k; ++r) {
      const int j = order[static_cast<size_t>(r)];
      keep[static_cast<size_t>(std::min(i, j))][static_cast<size_t>(std::max(i, j))] = 1;
    }
  }

  std::vector<double> retained;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (keep[static_cast<size_t>(i)][static_cast<size_t>(j)]) retained.push_back(dist(i, j));

  double phi = cfg.phi;
  if (phi < 0.0) {
    const double med = median_of(retained);
    phi = med > 0.0 ? std::log(2.0) / med : 0.0;
  }

  WeightGraph g;
  g.n = n;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!keep[static_cast<size_t>(i)][static_cast<size_t>(j)]) continue;
      const double w = std::exp(-phi * dist(i, j));
      if (w > 0.0) g.edges.push_back({i, j, w});
    }
  }

  UnionFind uf(n);
  for (const auto& e : g.edges) uf.unite(e.i, e.j);
  int components = 0;
  for (int i = 0; i < n; ++i)
    if (uf.find(i) == i) ++components;
  if (components > 1) {
    g.connected = false;
    // MST repair over the blended distance so full fusion stays reachable.
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (!keep[static_cast<size_t>(i)][static_cast<size_t>(j)]) pairs.emplace_back(i, j);
    std::sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
      const double da = dist(a.first, a.second), db = dist(b.first, b.second);
      return da != db ? da < db : a < b;
    });
    for (const auto& [i, j] : pairs) {
      if (uf.unite(i, j)) {
        const double w = std::exp(-phi * dist(i, j));
        g.edges.push_back({i, j, w > 0.0 ? w : 1e-12});
        if (--components == 1) break;
      }
    }
    g.repaired = true;
    g.warning = "k-NN graph was disconnected; added minimum-spanning-tree edges";
    std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
  }
  return g;
}

}  // namespace

double gower_distance(const Vector& a, const Vector& b, const Vector& ranges,
                      const std::vector<bool>& categorical) {
  if (a.size() != b.size() || a.size() != ranges.size())
    throw std::invalid_argument("gower_distance: row/range length mismatch");
  if (a.size() == 0) return 0.0;
  double total = 0.0;
  for (Index l = 0; l < a.size(); ++l) {
    if (!categorical.empty() && categorical[static_cast<size_t>(l)]) {
      total += a[l] != b[l] ? 1.0 : 0.0;
    } else if (ranges[l] > 0.0) {
      total += std::abs(a[l] - b[l]) / ranges[l];
    }
    // zero-range features contribute 0
  }
  return total / static_cast<double>(a.size());
}

Matrix gower_matrix(const Matrix& X, const std::vector<bool>& categorical) {
  const Index n = X.rows();
  const Vector ranges = column_ranges(X);
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) =
          gower_distance(X.row(i).transpose(), X.row(j).transpose(), ranges, categorical);
    }
  }
  return d;
}

namespace {

double gower_y_pair(const SupervisingVariable& y, int i, int j, double range,
                    bool hard) {
  switch (y.family.kind) {
    case Family::gaussian:
    case Family::poisson:
      return range > 0.0 ? std::abs(y.values(i, 0) - y.values(j, 0)) / range : 0.0;
    case Family::bernoulli:
      if (hard) return y.values(i, 0) != y.values(j, 0) ? 1.0 : 0.0;
      return range > 0.0 ? std::abs(y.values(i, 0) - y.values(j, 0)) / range : 0.0;
    case Family::multinomial: {
      if (hard) return (y.values.row(i) - y.values.row(j)).cwiseAbs().sum() > 0.0 ? 1.0 : 0.0;
      // soft assignments: total variation distance, 0/1 on hard labels
      return 0.5 * (y.values.row(i) - y.values.row(j)).cwiseAbs().sum();
    }
    case Family::cox: {
      const bool ci = y.event[i] == 0, cj = y.event[j] == 0;
      if (ci != cj) return 0.5;  // one censored: encode ignorance symmetrically
      const double d = range > 0.0 ? std::abs(y.time[i] - y.time[j]) / range : 0.0;
      return std::min(d, 1.0);
    }
  }
  throw std::logic_error("unreachable");
}

std::pair<double, bool> gower_y_stats(const SupervisingVariable& y) {
  double range = 0.0;
  bool hard = true;
  switch (y.family.kind) {
    case Family::gaussian:
    case Family::poisson:
      range = y.values.col(0).maxCoeff() - y.values.col(0).minCoeff();
      break;
    case Family::bernoulli:
      range = y.values.col(0).maxCoeff() - y.values.col(0).minCoeff();
      hard = is_hard_binary(y.values);
      break;
    case Family::multinomial:
      hard = is_hard_binary(y.values);
      break;
    case Family::cox:
      range = y.time.maxCoeff() - y.time.minCoeff();
      break;
  }
  return {range, hard};
}

}  // namespace

double gower_y(const SupervisingVariable& y, int i, int j) {
  if (i < 0 || j < 0 || i >= y.size() || j >= y.size())
    throw std::invalid_argument("gower_y: index out of range");
  const auto [range, hard] = gower_y_stats(y);
  return gower_y_pair(y, i, j, range, hard);
}

Matrix gower_y_matrix(const SupervisingVariable& y) {
  const int n = static_cast<int>(y.size());
  const auto [range, hard] = gower_y_stats(y);
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = gower_y_pair(y, i, j, range, hard);
  return d;
}

double default_alpha(const Matrix& X, const LossFamily& family,
                     const SupervisingVariable& y) {
  const Matrix centered = X.rowwise() - X.colwise().mean();
  const double dx = centered.squaredNorm();  // unhalved, as the weight rule uses
  const double dy = null_deviance(family, y);
  if (dx + dy <= 0.0)
    throw std::invalid_argument("both data sources are constant");
  return dy / (dy + dx);
}

WeightGraph build_weights(const Matrix& X, const SupervisingVariable& y,
                          const LossFamily& family, const WeightConfig& cfg) {
  if (X.rows() != y.size())
    throw std::invalid_argument("X and y disagree on the number of observations");
  double alpha = cfg.alpha;
  if (alpha < 0.0) alpha = default_alpha(X, family, y);
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("alpha must lie in [0,1]");
  const Matrix dist =
      (1.0 - alpha) * gower_matrix(X) + alpha * gower_y_matrix(y);
  return knn_kernel_graph(dist, cfg);
}

WeightGraph build_weights_unsupervised(const Matrix& X, const WeightConfig& cfg) {
  return knn_kernel_graph(gower_matrix(X), cfg);
}

WeightGraph column_weights(const Matrix& X, const WeightConfig& cfg) {
  return build_weights_unsupervised(X.transpose(), cfg);
}

void write_weights_csv(const WeightGraph& graph, const std::string& path) {
  Matrix m(static_cast<Index>(graph.edges.size()), 3);
  for (size_t e = 0; e < graph.edges.size(); ++e) {
    m(static_cast<Index>(e), 0) = graph.edges[e].i;
    m(static_cast<Index>(e), 1) = graph.edges[e].j;
    m(static_cast<Index>(e), 2) = graph.edges[e].w;
  }
  write_csv(path, {"i", "j", "w"}, m);
}

WeightGraph read_weights_csv(const std::string& path) {
  const Matrix m = csv_to_matrix(read_csv(path), {"i", "j", "w"});
  WeightGraph g;
  for (Index r = 0; r < m.rows(); ++r) {
    const int i = static_cast<int>(m(r, 0)), j = static_cast<int>(m(r, 1));
    if (i == j) throw std::invalid_argument("self-loop edge in weights file");
    g.edges.push_back({std::min(i, j), std::max(i, j), m(r, 2)});
    g.n = std::max(g.n, std::max(i, j) + 1);
  }
  UnionFind uf(g.n);
  for (const auto& e : g.edges) uf.unite(e.i, e.j);
  for (int i = 1; i < g.n; ++i)
    if (uf.find(i) != uf.find(0)) {
      g.connected = false;
      g.warning = "weight graph is disconnected";
      break;
    }
  return g;
}

}  // namespace fuseclust
