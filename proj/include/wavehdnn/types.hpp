#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace wavehdnn {

/// Dense 64-bit matrix; row-major so that per-entity rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Index = std::int64_t;

}  // namespace wavehdnn
