#pragma once

#include <vector>

#include <Eigen/Dense>

#include "varls/data.hpp"
#include "varls/rng.hpp"

namespace varls {

/// Row-stochastic K x K matrix; row i is the distribution of the observed
/// label given true class i.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(Eigen::MatrixXd p);

  int classes() const { return static_cast<int>(p_.rows()); }
  const Eigen::MatrixXd& matrix() const { return p_; }
  double operator()(int from, int to) const { return p_(from, to); }

 private:
  Eigen::MatrixXd p_;
};

/// Keep the label with probability 1 - rate, otherwise move to one of the
/// other K - 1 classes uniformly.
TransitionMatrix symmetric_matrix(int classes, double rate);

/// Move class order[j] to order[j + 1 mod K] with probability `rate`. An empty
/// order means 0 -> 1 -> ... -> K-1 -> 0.
TransitionMatrix pairflip_matrix(int classes, double rate, const std::vector<int>& order = {});

/// Class-dependent flip rate kappa + beta * i for the 1-based class index i,
/// spread uniformly over the other classes. Requires kappa + beta K < 1; with
/// `allow_degenerate` the last diagonal may reach exactly zero.
TransitionMatrix datadep_matrix(int classes, double kappa, double beta, bool allow_degenerate = false);

struct Corruption {
  std::vector<int> labels;
  std::vector<bool> flipped;
};

/// Resample every label from its row of P.
Corruption apply_corruption(const std::vector<int>& labels, const TransitionMatrix& p, Stream stream);

struct EmpiricalTransition {
  Eigen::MatrixXd matrix;
  std::vector<bool> empty_rows;  // rows with no support, reported as uniform
};

EmpiricalTransition empirical_transition(const std::vector<int>& clean, const std::vector<int>& noisy, int classes);

/// Corrupts a training split once; the original labels move to
/// `clean_labels`. Test splits are rejected.
LabeledDataset corrupt_dataset(LabeledDataset train, const TransitionMatrix& p, Stream stream);

}  // namespace varls
