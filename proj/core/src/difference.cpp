#include "fuseclust/difference.hpp"

#include <stdexcept>
#include <vector>

namespace fuseclust {

SparseMatrix build_difference_matrix(const WeightGraph& graph) {
  if (graph.edges.empty())
    throw std::invalid_argument("cannot build difference matrix of an empty graph");
  SparseMatrix D(static_cast<Index>(graph.edges.size()), graph.n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(graph.edges.size() * 2);
  for (size_t l = 0; l < graph.edges.size(); ++l) {
    trip.emplace_back(static_cast<int>(l), graph.edges[l].i, 1.0);
    trip.emplace_back(static_cast<int>(l), graph.edges[l].j, -1.0);
  }
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

Vector edge_weights(const WeightGraph& graph) {
  Vector w(static_cast<Index>(graph.edges.size()));
  for (size_t l = 0; l < graph.edges.size(); ++l) w[static_cast<Index>(l)] = graph.edges[l].w;
  return w;
}

double spectral_norm_sq(const SparseMatrix& D) {
  // Gershgorin bound on D^T D: a guaranteed upper estimate, which is what a
  // step-size denominator needs. D^T D has node degrees on the diagonal and
  // -1 entries per incident edge, so each row bound is twice the degree.
  const SparseMatrix DtD = SparseMatrix(D.transpose()) * D;
  double bound = 0.0;
  for (int k = 0; k < DtD.outerSize(); ++k) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(DtD, k); it; ++it) row += std::abs(it.value());
    bound = std::max(bound, row);
  }
  return bound;
}

}  // namespace fuseclust
