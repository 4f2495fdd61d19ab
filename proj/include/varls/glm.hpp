#pragma once

#include <Eigen/Dense>

namespace varls {

/// Exponential-family likelihood for a GLM output layer, described through its
/// log-partition function A. The link A' maps logits to means.
///
/// Gaussian is the unit-variance Gaussian likelihood (A(f) = f^2 / 2). It has
/// a constant Hessian and serves as the quadratic fixture in optimizer tests.
struct Family {
  enum class Kind { Bernoulli, Categorical, Gaussian };

  Kind kind = Kind::Bernoulli;
  int classes = 2;

  static Family bernoulli() { return {Kind::Bernoulli, 2}; }
  static Family categorical(int k);
  static Family gaussian() { return {Kind::Gaussian, 1}; }

  /// Width of the logit vector f: 1 for Bernoulli and Gaussian, K otherwise.
  int outputs() const { return kind == Kind::Categorical ? classes : 1; }
};

double sigmoid(double f);
/// sigma'(f) = sigma(f) (1 - sigma(f))
double sigmoid_derivative(double f);
/// log(1 + e^f) without overflow.
double softplus(double f);

double log_partition(const Family& family, const Eigen::VectorXd& f);
Eigen::VectorXd link(const Family& family, const Eigen::VectorXd& f);
/// Jacobian of the link, i.e. the Hessian of A. Softmax gives diag(p) - p p^T.
Eigen::MatrixXd link_jacobian(const Family& family, const Eigen::VectorXd& f);

/// l(y, f) = -y^T f + A(f). Soft labels are accepted.
double loss(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& f);
/// dl/df = A'(f) - y
Eigen::VectorXd loss_grad_f(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& f);

/// Target vector for a hard class id: the id itself for Bernoulli (0 or 1),
/// a one-hot vector for Categorical.
Eigen::VectorXd hard_target(const Family& family, int label);

/// Predicted class from logits.
int predict_class(const Family& family, const Eigen::VectorXd& f);

}  // namespace varls
