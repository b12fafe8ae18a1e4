#pragma once

#include <Eigen/Core>
#include <vector>

namespace leap {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Flat parameter state. Layout is owned by whoever interprets it; for MLPs
/// see models.hpp.
using ParamVector = std::vector<double>;

/// One minibatch: rows of `inputs` are examples, labels are class indices.
struct Batch {
  RowMatrix inputs;
  std::vector<int> labels;
};

}  // namespace leap
