#pragma once

#include <functional>

#include <Eigen/Dense>

#include "varls/glm.hpp"
#include "varls/models.hpp"
#include "varls/posterior.hpp"
#include "varls/problem.hpp"
#include "varls/quadrature.hpp"
#include "varls/rng.hpp"

namespace varls {

using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// sum_i grad l_i(theta) over every row of `data`, accumulated in row order.
Eigen::VectorXd sum_gradient(const Model& model, const Eigen::VectorXd& theta, const Problem& data,
                             const Family& family);

// ---------------------------------------------------------------------------
// Gradient descent on sum_i l_i(theta) + ||theta||^2 / 2, written in the decay
// form theta' = (1 - rho) theta - rho sum_i grad l_i(theta).

struct GdState {
  Eigen::VectorXd theta;
  double rho = 0.1;
};

GdState gd_step(const GdState& state, const Problem& data, const Model& model, const Family& family);

/// Gradient descent on the variational objective with q = N(theta, s2 I):
/// the link inside each gradient is replaced by its expectation under q.
/// Monte Carlo methods draw example i's samples from child stream i.
GdState vgd_step(const GdState& state, const Problem& data, const LinearModel& model, const Family& family,
                 const ExpectationMethod& method, double posterior_variance = 1.0);

/// theta - H^{-1} g with H = sum_i J_i^T A''(f_i) J_i + I.
GdState newton_step(const GdState& state, const Problem& data, const LinearModel& model, const Family& family);

// ---------------------------------------------------------------------------
// Variational Online Newton with a full covariance, tracked as a precision.

struct VonState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
  double rho = 1.0;

  GaussianPosterior posterior() const { return GaussianPosterior::from_precision(mean, precision); }
};

/// Precision first: S' = (1 - rho) S + rho E_q[H], then
/// mean' = mean - rho S'^{-1} E_q[g]. The expectations include the prior
/// term (gradient theta, Hessian I) at every step.
VonState von_step(const VonState& state, const Problem& data, const LinearModel& model, const Family& family,
                  const ExpectationMethod& method);

// ---------------------------------------------------------------------------
// IVON: diagonal-covariance VON with Adam-like momentum and the
// reparameterisation Hessian estimator.

struct IvonConfig {
  double weight_decay = 1e-3;  // delta, > 0
  double beta1 = 0.9;
  double beta2 = 1.0 - 1e-5;  // 1 freezes h
  double hess_init = 0.9;     // h0
  double ess = 0.0;           // lambda; <= 0 means "dataset size"
  bool rescale_lr = false;    // alpha_t <- (h0 + delta) alpha_t
  int mc_samples = 1;

  void validate() const;
};

struct IvonState {
  Eigen::VectorXd m;
  Eigen::VectorXd h;
  Eigen::VectorXd g;
  long step = 0;
};

IvonState ivon_init(Eigen::VectorXd mean, const IvonConfig& config);

/// sigma = 1 / sqrt(lambda (h + delta))
Eigen::VectorXd ivon_sigma(const IvonState& state, const IvonConfig& config);

GaussianPosterior ivon_posterior(const IvonState& state, const IvonConfig& config);

/// One pass of the IVON loop body. `grad` returns the minibatch-mean loss
/// gradient at a parameter sample; the sample is drawn from `stream`.
IvonState ivon_step(const IvonState& state, const IvonConfig& config, double lr, const GradientFn& grad,
                    Stream stream);

/// Convenience form: gradient is the mean of per-example gradients over `batch`.
IvonState ivon_step(const IvonState& state, const IvonConfig& config, double lr, const Problem& batch,
                    const Model& model, const Family& family, Stream stream);

// ---------------------------------------------------------------------------
// Sharpness-aware minimisation.

struct SamState {
  Eigen::VectorXd theta;
  double radius = 0.05;
  double lr = 0.1;
};

/// theta_adv = theta + radius g / ||g||, theta' = theta - lr grad(theta_adv).
/// A zero gradient skips the perturbation.
SamState sam_step(const SamState& state, const GradientFn& grad);

/// Uses grad = sum_i grad l_i (no weight decay).
SamState sam_step(const SamState& state, const Problem& data, const Model& model, const Family& family);

// ---------------------------------------------------------------------------
// Heavy-ball SGD used as the point-estimate baseline in training runs.

struct SgdState {
  Eigen::VectorXd theta;
  Eigen::VectorXd velocity;
};

/// v = mu v + (g + wd theta); theta -= lr v
SgdState sgd_step(const SgdState& state, const Eigen::VectorXd& grad, double lr, double momentum,
                  double weight_decay);

}  // namespace varls
