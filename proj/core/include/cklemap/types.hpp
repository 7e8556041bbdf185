#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace cklemap {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using SparseVector = Eigen::SparseVector<double, Eigen::ColMajor, int>;

/// Cell-centred scalar field, one value per active cell in mesh order.
using Field = Eigen::VectorXd;

}  // namespace cklemap
