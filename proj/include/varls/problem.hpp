#pragma once

#include <Eigen/Dense>

namespace varls {

/// Inputs (N x d) with per-example target rows (N x outputs). Targets may be
/// hard, smoothed, or noisy labels; optimizers never look at class ids.
struct Problem {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;

  Eigen::Index size() const { return inputs.rows(); }
};

}  // namespace varls
