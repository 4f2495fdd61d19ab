#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "varls/glm.hpp"
#include "varls/rng.hpp"

namespace varls {

/// f(theta, x) = Theta phi(x) with Theta the row-major K x d view of theta and
/// phi(x) = x, or [x, 1] when `bias` is set.
struct LinearModel {
  int input_dim = 1;
  int outputs = 1;
  bool bias = false;

  int feature_dim() const { return input_dim + (bias ? 1 : 0); }
  int parameter_count() const { return outputs * feature_dim(); }
  Eigen::VectorXd features(const Eigen::VectorXd& x) const;
};

enum class Activation { Tanh, Relu, Identity };

/// Fully connected network with layer sizes [d, h1, ..., K]; hidden layers use
/// `activation`, the output layer is affine. Parameters are packed layer by
/// layer, each layer as its row-major (out x in) weight matrix followed by its
/// bias vector.
struct MlpModel {
  std::vector<int> sizes;
  Activation activation = Activation::Tanh;

  int input_dim() const { return sizes.front(); }
  int outputs() const { return sizes.back(); }
  int parameter_count() const;
  void validate() const;
};

using Model = std::variant<LinearModel, MlpModel>;

int parameter_count(const Model& model);
int input_dim(const Model& model);
int output_dim(const Model& model);

struct MlpLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

std::vector<MlpLayer> unpack(const MlpModel& model, const Eigen::VectorXd& theta);
Eigen::VectorXd pack(const MlpModel& model, const std::vector<MlpLayer>& layers);

/// Glorot-style initialisation for MLPs (biases zero); zeros for linear models.
Eigen::VectorXd init_parameters(const Model& model, Stream stream);

Eigen::VectorXd forward(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x);

/// K x P Jacobian of the logits with respect to theta.
Eigen::MatrixXd output_jacobian(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x);

/// J^T v for the output Jacobian J at (theta, x), computed in one reverse pass.
Eigen::VectorXd vector_jacobian_product(const Model& model, const Eigen::VectorXd& theta,
                                        const Eigen::VectorXd& x, const Eigen::VectorXd& v);

/// Gradient of l(y, f(theta, x)) = J^T (A'(f) - y).
Eigen::VectorXd per_example_grad(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y, const Family& family);

struct ExampleEval {
  Eigen::VectorXd logits;
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Loss, logits and parameter gradient for one example from a single
/// forward/backward pass.
ExampleEval evaluate_example(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y, const Family& family);

/// Frobenius norm of the output Jacobian; ||phi(x)|| for a one-output linear model.
double feature_norm(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x);

}  // namespace varls
