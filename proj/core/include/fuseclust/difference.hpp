#pragma once

#include "fuseclust/types.hpp"
#include "fuseclust/weights.hpp"

namespace fuseclust {

// Directed difference matrix D of a weight graph: |E| x n, row l carries +1
// at edge l's first endpoint and -1 at its second, in edge order.
SparseMatrix build_difference_matrix(const WeightGraph& graph);

// Edge weights aligned with the rows of the difference matrix.
Vector edge_weights(const WeightGraph& graph);

// Upper bound on the largest eigenvalue of D^T D (squared spectral norm of
// D), via Gershgorin discs; exact for a single edge.
double spectral_norm_sq(const SparseMatrix& D);

}  // namespace fuseclust
