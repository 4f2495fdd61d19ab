#include "varls/optim.hpp"

#include <cassert>
#include <cmath>

#include "varls/error.hpp"

namespace varls {

namespace {

void check_data(const Problem& data, const Family& family) {
  if (data.targets.rows() != data.inputs.rows()) throw ShapeError("inputs and targets differ in length");
  if (data.targets.cols() != family.outputs()) throw ShapeError("target width does not match the family");
}

Eigen::VectorXd solve_spd(Eigen::MatrixXd h, const Eigen::VectorXd& g) {
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) return llt.solve(g);
    h.diagonal().array() += 1e-10;
  }
  throw NumericalError("Hessian is not positive definite");
}

}  // namespace

Eigen::VectorXd sum_gradient(const Model& model, const Eigen::VectorXd& theta, const Problem& data,
                             const Family& family) {
  check_data(data, family);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(theta.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    total += per_example_grad(model, theta, data.inputs.row(i).transpose(), data.targets.row(i).transpose(),
                              family);
  }
  return total;
}

GdState gd_step(const GdState& state, const Problem& data, const Model& model, const Family& family) {
  const Eigen::VectorXd g = sum_gradient(model, state.theta, data, family);
  return {(1.0 - state.rho) * state.theta - state.rho * g, state.rho};
}

GdState vgd_step(const GdState& state, const Problem& data, const LinearModel& model, const Family& family,
                 const ExpectationMethod& method, double posterior_variance) {
  check_data(data, family);
  const GaussianPosterior q(state.theta, Isotropic{posterior_variance});
  const Model m = model;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(state.theta.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::MatrixXd jac = output_jacobian(m, state.theta, data.inputs.row(i).transpose());
    const Eigen::VectorXd mean_link =
        expected_link(predictive_moments(q, jac), family, for_example(method, static_cast<std::uint64_t>(i)));
    g += jac.transpose() * (mean_link - data.targets.row(i).transpose());
  }
  return {(1.0 - state.rho) * state.theta - state.rho * g, state.rho};
}

GdState newton_step(const GdState& state, const Problem& data, const LinearModel& model, const Family& family) {
  check_data(data, family);
  const Model m = model;
  const Eigen::Index p = state.theta.size();
  Eigen::VectorXd g = state.theta;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.inputs.row(i).transpose();
    const Eigen::MatrixXd jac = output_jacobian(m, state.theta, x);
    const Eigen::VectorXd f = jac * state.theta;
    g += jac.transpose() * loss_grad_f(family, data.targets.row(i).transpose(), f);
    h += jac.transpose() * link_jacobian(family, f) * jac;
  }
  return {state.theta - solve_spd(h, g), state.rho};
}

VonState von_step(const VonState& state, const Problem& data, const LinearModel& model, const Family& family,
                  const ExpectationMethod& method) {
  check_data(data, family);
  if (!(state.rho > 0.0 && state.rho <= 1.0)) throw InvalidInput("VON step size must lie in (0, 1]");
  const GaussianPosterior q = state.posterior();
  const Model m = model;
  const Eigen::Index p = state.mean.size();
  Eigen::VectorXd g = state.mean;                      // E[grad ||theta||^2 / 2]
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p, p);  // its Hessian
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::MatrixXd jac = output_jacobian(m, state.mean, data.inputs.row(i).transpose());
    const PredictiveMoments moments = predictive_moments(q, jac);
    const ExpectationMethod mi = for_example(method, static_cast<std::uint64_t>(i));
    g += jac.transpose() * (expected_link(moments, family, mi) - data.targets.row(i).transpose());
    h += jac.transpose() * expected_link_jacobian(moments, family, mi) * jac;
  }
  VonState next;
  next.rho = state.rho;
  next.precision = (1.0 - state.rho) * state.precision + state.rho * h;
  next.precision = 0.5 * (next.precision + next.precision.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(next.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("VON precision lost positive definiteness");
  next.mean = state.mean - state.rho * llt.solve(g);
  return next;
}

void IvonConfig::validate() const {
  if (!(weight_decay > 0.0)) throw InvalidInput("IVON weight decay must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidInput("IVON beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 <= 1.0)) throw InvalidInput("IVON beta2 must lie in [0, 1]");
  if (!(hess_init > 0.0)) throw InvalidInput("IVON Hessian init must be positive");
  if (mc_samples < 1) throw InvalidInput("IVON needs at least one Monte Carlo sample");
}

IvonState ivon_init(Eigen::VectorXd mean, const IvonConfig& config) {
  config.validate();
  IvonState s;
  const Eigen::Index p = mean.size();
  s.m = std::move(mean);
  s.h = Eigen::VectorXd::Constant(p, config.hess_init);
  s.g = Eigen::VectorXd::Zero(p);
  return s;
}

Eigen::VectorXd ivon_sigma(const IvonState& state, const IvonConfig& config) {
  if (!(config.ess > 0.0)) throw InvalidInput("IVON effective sample size must be positive");
  return (config.ess * (state.h.array() + config.weight_decay)).rsqrt();
}

GaussianPosterior ivon_posterior(const IvonState& state, const IvonConfig& config) {
  return GaussianPosterior(state.m, Diagonal{ivon_sigma(state, config).array().square()});
}

IvonState ivon_step(const IvonState& state, const IvonConfig& config, double lr, const GradientFn& grad,
                    Stream stream) {
  config.validate();
  const double delta = config.weight_decay;
  const Eigen::VectorXd sigma = ivon_sigma(state, config);
  const Eigen::ArrayXd sigma2 = sigma.array().square();
  const Eigen::Index p = state.m.size();

  // lines 2-3: gradient at a posterior sample and the reparameterisation
  // Hessian estimate, averaged over mc_samples draws
  Eigen::VectorXd g_hat = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd h_hat = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd e(p);
  for (int s = 0; s < config.mc_samples; ++s) {
    for (Eigen::Index j = 0; j < p; ++j) e[j] = stream.normal();
    const Eigen::VectorXd noise = sigma.cwiseProduct(e);
    const Eigen::VectorXd gs = grad(state.m + noise);
    g_hat += gs;
    h_hat += (gs.array() * noise.array() / sigma2).matrix();
  }
  g_hat /= config.mc_samples;
  h_hat /= config.mc_samples;

  IvonState next;
  next.step = state.step + 1;
  // line 4
  next.g = config.beta1 * state.g + (1.0 - config.beta1) * g_hat;
  // line 5
  const double b2 = config.beta2;
  next.h = (b2 * state.h.array() + (1.0 - b2) * h_hat.array() +
            0.5 * (1.0 - b2) * (1.0 - b2) * (state.h.array() - h_hat.array()).square() / (state.h.array() + delta))
               .matrix();
  assert(((next.h.array() + delta) > 0.0).all());
  // line 6
  const Eigen::VectorXd g_bar = next.g / (1.0 - std::pow(config.beta1, static_cast<double>(next.step)));
  // line 7
  const double alpha = config.rescale_lr ? (config.hess_init + delta) * lr : lr;
  next.m = state.m.array() - alpha * (g_bar.array() + delta * state.m.array()) / (next.h.array() + delta);
  return next;
}

IvonState ivon_step(const IvonState& state, const IvonConfig& config, double lr, const Problem& batch,
                    const Model& model, const Family& family, Stream stream) {
  if (batch.size() == 0) throw InvalidInput("IVON minibatch is empty");
  const double scale = 1.0 / static_cast<double>(batch.size());
  return ivon_step(
      state, config, lr,
      [&](const Eigen::VectorXd& theta) { return (scale * sum_gradient(model, theta, batch, family)).eval(); },
      stream);
}

SamState sam_step(const SamState& state, const GradientFn& grad) {
  if (!(state.radius >= 0.0)) throw InvalidInput("SAM radius must be non-negative");
  const Eigen::VectorXd g1 = grad(state.theta);
  const double norm = g1.norm();
  if (norm == 0.0) return state;
  const Eigen::VectorXd adv = state.theta + (state.radius / norm) * g1;
  return {state.theta - state.lr * grad(adv), state.radius, state.lr};
}

SamState sam_step(const SamState& state, const Problem& data, const Model& model, const Family& family) {
  return sam_step(state, [&](const Eigen::VectorXd& theta) { return sum_gradient(model, theta, data, family); });
}

SgdState sgd_step(const SgdState& state, const Eigen::VectorXd& grad, double lr, double momentum,
                  double weight_decay) {
  SgdState next;
  next.velocity = momentum * state.velocity + grad + weight_decay * state.theta;
  next.theta = state.theta - lr * next.velocity;
  return next;
}

}  // namespace varls
