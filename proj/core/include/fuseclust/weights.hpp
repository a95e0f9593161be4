#pragma once

#include <string>
#include <vector>

#include "fuseclust/glm.hpp"
#include "fuseclust/types.hpp"

namespace fuseclust {

struct WeightedEdge {
  int i = 0;
  int j = 0;
  double w = 0.0;
};

// Sparse fusion graph over n nodes. Edges satisfy i < j, are unique, and
// carry strictly positive weights (zero-weight edges are dropped).
struct WeightGraph {
  int n = 0;
  std::vector<WeightedEdge> edges;
  bool connected = true;
  bool repaired = false;   // minimum-spanning-tree edges were added
  std::string warning;     // set when the raw k-NN graph was disconnected
};

struct WeightConfig {
  int k = 5;
  double phi = -1.0;    // < 0: auto, log(2) / median retained distance
  double alpha = -1.0;  // < 0: auto via default_alpha; else must be in [0,1]
};

// Gower distance between two rows given precomputed per-feature ranges.
// Zero-range features contribute 0; categorical features contribute 0/1.
double gower_distance(const Vector& a, const Vector& b, const Vector& ranges,
                      const std::vector<bool>& categorical = {});

// All-pairs Gower distances of the rows of X. Ranges are computed over X.
Matrix gower_matrix(const Matrix& X, const std::vector<bool>& categorical = {});

// Gower-style distance in [0,1] between two observations of the supervising
// variable. Ranges come from the full variable.
double gower_y(const SupervisingVariable& y, int i, int j);
Matrix gower_y_matrix(const SupervisingVariable& y);

// Supervision level alpha = D_y / (D_y + ||X - Xbar||_F^2).
double default_alpha(const Matrix& X, const LossFamily& family,
                     const SupervisingVariable& y);

// k-NN Gaussian-kernel fusion weights on the blended distance
// (1-alpha) g(X_i, X_j) + alpha g(y_i, y_j). Disconnected graphs are
// repaired with MST edges and flagged.
WeightGraph build_weights(const Matrix& X, const SupervisingVariable& y,
                          const LossFamily& family, const WeightConfig& cfg);

// Unsupervised variant (alpha = 0); also usable when no y exists.
WeightGraph build_weights_unsupervised(const Matrix& X, const WeightConfig& cfg);

// Fusion weights over the columns (features) of X: the unsupervised recipe
// applied to X^T.
WeightGraph column_weights(const Matrix& X, const WeightConfig& cfg);

void write_weights_csv(const WeightGraph& graph, const std::string& path);
WeightGraph read_weights_csv(const std::string& path);

}  // namespace fuseclust
