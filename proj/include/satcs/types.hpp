#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace satcs {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using IndexSet = std::vector<Index>;
using Seed = std::uint64_t;

}  // namespace satcs
