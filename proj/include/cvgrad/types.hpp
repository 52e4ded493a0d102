#pragma once

#include <Eigen/Dense>

namespace cvgrad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

// Read-only views accepting blocks and maps without copies.
using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

}  // namespace cvgrad
