#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace fuseclust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

// Linear predictors are clipped to this magnitude wherever a link or an
// exponential would otherwise overflow or diverge.
inline constexpr double kEtaClip = 30.0;

}  // namespace fuseclust
