#include "varls/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "varls/error.hpp"

namespace varls {

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd p) : p_(std::move(p)) {
  if (p_.rows() != p_.cols() || p_.rows() < 2) throw InvalidInput("transition matrix must be K x K with K >= 2");
  if (!(p_.array() >= 0.0).all() || !(p_.array() <= 1.0).all()) {
    throw InvalidInput("transition probabilities must lie in [0, 1]");
  }
  for (Eigen::Index i = 0; i < p_.rows(); ++i) {
    if (std::abs(p_.row(i).sum() - 1.0) > 1e-12) {
      throw InvalidInput("transition matrix row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

TransitionMatrix symmetric_matrix(int classes, double rate) {
  if (classes < 2) throw InvalidInput("symmetric noise needs K >= 2");
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidInput("symmetric noise rate must lie in [0, 1)");
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(classes, classes, rate / (classes - 1));
  p.diagonal().setConstant(1.0 - rate);
  return TransitionMatrix(std::move(p));
}

TransitionMatrix pairflip_matrix(int classes, double rate, const std::vector<int>& order) {
  if (classes < 2) throw InvalidInput("pair-flip noise needs K >= 2");
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidInput("pair-flip rate must lie in [0, 1)");
  std::vector<int> cycle = order;
  if (cycle.empty()) {
    for (int k = 0; k < classes; ++k) cycle.push_back(k);
  }
  std::vector<int> sorted = cycle;
  std::sort(sorted.begin(), sorted.end());
  bool is_perm = static_cast<int>(sorted.size()) == classes;
  for (int k = 0; is_perm && k < classes; ++k) is_perm = sorted[static_cast<std::size_t>(k)] == k;
  if (!is_perm) throw InvalidInput("pair-flip order must be a permutation of 0..K-1");

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(classes, classes);
  for (int j = 0; j < classes; ++j) {
    const int from = cycle[static_cast<std::size_t>(j)];
    const int to = cycle[static_cast<std::size_t>((j + 1) % classes)];
    p(from, from) = 1.0 - rate;
    p(from, to) += rate;
  }
  return TransitionMatrix(std::move(p));
}

TransitionMatrix datadep_matrix(int classes, double kappa, double beta, bool allow_degenerate) {
  if (classes < 2) throw InvalidInput("data-dependent noise needs K >= 2");
  const double worst = kappa + beta * classes;
  if (worst > 1.0 || (!allow_degenerate && worst >= 1.0)) {
    throw InvalidInput("data-dependent noise needs kappa + beta K < 1 (got " + std::to_string(worst) + ")");
  }
  Eigen::MatrixXd p(classes, classes);
  for (int row = 0; row < classes; ++row) {
    const double rate = kappa + beta * (row + 1);  // classes are 1-based in the rate formula
    if (rate < 0.0) throw InvalidInput("data-dependent flip rates must be non-negative");
    p.row(row).setConstant(rate / (classes - 1));
    p(row, row) = 1.0 - rate;
  }
  return TransitionMatrix(std::move(p));
}

Corruption apply_corruption(const std::vector<int>& labels, const TransitionMatrix& p, Stream stream) {
  const int k = p.classes();
  Corruption out;
  out.labels.reserve(labels.size());
  out.flipped.reserve(labels.size());
  for (int y : labels) {
    if (y < 0 || y >= k) throw InvalidInput("label " + std::to_string(y) + " outside [0, K)");
    const double u = stream.uniform();
    double acc = 0.0;
    int noisy = y;
    for (int c = 0; c < k; ++c) {
      if (p(y, c) == 0.0) continue;
      acc += p(y, c);
      noisy = c;
      if (u < acc) break;
    }
    out.labels.push_back(noisy);
    out.flipped.push_back(noisy != y);
  }
  return out;
}

EmpiricalTransition empirical_transition(const std::vector<int>& clean, const std::vector<int>& noisy, int classes) {
  if (clean.size() != noisy.size()) throw ShapeError("clean and noisy label arrays differ in length");
  EmpiricalTransition out;
  out.matrix = Eigen::MatrixXd::Zero(classes, classes);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean[i] < 0 || clean[i] >= classes || noisy[i] < 0 || noisy[i] >= classes) {
      throw InvalidInput("label outside [0, K) at index " + std::to_string(i));
    }
    out.matrix(clean[i], noisy[i]) += 1.0;
  }
  out.empty_rows.assign(static_cast<std::size_t>(classes), false);
  for (int r = 0; r < classes; ++r) {
    const double total = out.matrix.row(r).sum();
    if (total == 0.0) {
      out.matrix.row(r).setConstant(1.0 / classes);
      out.empty_rows[static_cast<std::size_t>(r)] = true;
    } else {
      out.matrix.row(r) /= total;
    }
  }
  return out;
}

LabeledDataset corrupt_dataset(LabeledDataset train, const TransitionMatrix& p, Stream stream) {
  if (train.split != Split::Train) throw InvalidInput("only training splits may be corrupted");
  if (train.clean_labels) throw InvalidInput("dataset is already corrupted");
  if (p.classes() != train.classes) throw ShapeError("transition matrix size does not match the class count");
  Corruption c = apply_corruption(train.labels, p, stream);
  train.clean_labels = std::move(train.labels);
  train.labels = std::move(c.labels);
  return train;
}

}  // namespace varls
