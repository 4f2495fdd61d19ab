#include "varls/posterior.hpp"

#include <cmath>
#include <string>

#include "varls/error.hpp"

namespace varls {

namespace {

constexpr double kJitter = 1e-10;
constexpr int kJitterAttempts = 3;

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd work = s;
  for (int attempt = 0; attempt <= kJitterAttempts; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    work.diagonal().array() += kJitter;
  }
  throw NumericalError("covariance is not positive definite (Cholesky failed after jitter)");
}

}  // namespace

GaussianPosterior::GaussianPosterior(Eigen::VectorXd mean, Covariance covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const Eigen::Index p = mean_.size();
  if (const auto* iso = std::get_if<Isotropic>(&covariance_)) {
    if (!(iso->variance > 0.0) || !std::isfinite(iso->variance)) {
      throw InvalidInput("isotropic variance must be positive and finite");
    }
  } else if (const auto* diag = std::get_if<Diagonal>(&covariance_)) {
    if (diag->variances.size() != p) throw ShapeError("diagonal covariance length does not match the mean");
    if (!(diag->variances.array() > 0.0).all() || !diag->variances.allFinite()) {
      throw InvalidInput("diagonal variances must be positive and finite");
    }
  } else {
    const auto& s = std::get<Full>(covariance_).covariance;
    if (s.rows() != p || s.cols() != p) throw ShapeError("full covariance must be P x P");
    if (!s.allFinite()) throw InvalidInput("covariance must be finite");
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff())) {
      throw InvalidInput("full covariance must be symmetric");
    }
    chol_ = cholesky_with_jitter(s);
  }
}

GaussianPosterior GaussianPosterior::from_precision(Eigen::VectorXd mean, const Eigen::MatrixXd& precision) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
  cov = 0.5 * (cov + cov.transpose());
  return GaussianPosterior(std::move(mean), Full{std::move(cov)});
}

Eigen::MatrixXd GaussianPosterior::covariance_matrix() const {
  const Eigen::Index p = dim();
  if (const auto* iso = std::get_if<Isotropic>(&covariance_)) {
    return iso->variance * Eigen::MatrixXd::Identity(p, p);
  }
  if (const auto* diag = std::get_if<Diagonal>(&covariance_)) return diag->variances.asDiagonal();
  return std::get<Full>(covariance_).covariance;
}

Eigen::VectorXd GaussianPosterior::scale(const Eigen::VectorXd& e) const {
  if (e.size() != dim()) throw ShapeError("noise vector length does not match the posterior");
  if (const auto* iso = std::get_if<Isotropic>(&covariance_)) return std::sqrt(iso->variance) * e;
  if (const auto* diag = std::get_if<Diagonal>(&covariance_)) {
    return diag->variances.array().sqrt().matrix().cwiseProduct(e);
  }
  return chol_ * e;
}

Eigen::VectorXd GaussianPosterior::quadratic_forms(const Eigen::MatrixXd& jac) const {
  if (jac.cols() != dim()) throw ShapeError("Jacobian width does not match the posterior dimension");
  if (const auto* iso = std::get_if<Isotropic>(&covariance_)) {
    return iso->variance * jac.rowwise().squaredNorm();
  }
  if (const auto* diag = std::get_if<Diagonal>(&covariance_)) {
    return jac.array().square().matrix() * diag->variances;
  }
  const auto& s = std::get<Full>(covariance_).covariance;
  return ((jac * s).array() * jac.array()).rowwise().sum();
}

double GaussianPosterior::trace() const {
  if (const auto* iso = std::get_if<Isotropic>(&covariance_)) return iso->variance * static_cast<double>(dim());
  if (const auto* diag = std::get_if<Diagonal>(&covariance_)) return diag->variances.sum();
  return std::get<Full>(covariance_).covariance.trace();
}

double GaussianPosterior::log_det() const {
  if (const auto* iso = std::get_if<Isotropic>(&covariance_)) {
    return static_cast<double>(dim()) * std::log(iso->variance);
  }
  if (const auto* diag = std::get_if<Diagonal>(&covariance_)) return diag->variances.array().log().sum();
  return 2.0 * chol_.diagonal().array().log().sum();
}

std::vector<Eigen::VectorXd> sample(const GaussianPosterior& q, int n, Stream stream) {
  if (n < 0) throw InvalidInput("sample count must be non-negative");
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd e(q.dim());
  for (int s = 0; s < n; ++s) {
    for (Eigen::Index j = 0; j < e.size(); ++j) e[j] = stream.normal();
    out.push_back(q.mean() + q.scale(e));
  }
  return out;
}

PredictiveMoments predictive_moments(const GaussianPosterior& q, const Eigen::MatrixXd& jacobian) {
  if (jacobian.cols() != q.dim()) {
    throw ShapeError("features have width " + std::to_string(jacobian.cols()) + ", posterior has dimension " +
                     std::to_string(q.dim()));
  }
  return {jacobian * q.mean(), q.quadratic_forms(jacobian)};
}

PredictiveMoments predictive_moments(const GaussianPosterior& q, const Eigen::VectorXd& features) {
  return predictive_moments(q, Eigen::MatrixXd(features.transpose()));
}

namespace {

void check_moments(const PredictiveMoments& m, const Family& family) {
  if (m.mean.size() != family.outputs() || m.variance.size() != family.outputs()) {
    throw ShapeError("predictive moments do not match the family's output width");
  }
  if (!(m.variance.array() >= 0.0).all()) throw InvalidInput("predictive variances must be non-negative");
}

// Draws of the logit vector f ~ N(mean, diag(variance)).
template <typename Fn>
void for_each_logit_sample(const PredictiveMoments& m, const MonteCarlo& mc, Fn&& fn) {
  Stream stream = mc.stream;
  const Eigen::VectorXd sd = m.variance.array().sqrt();
  Eigen::VectorXd f(m.mean.size());
  for (int s = 0; s < mc.samples; ++s) {
    for (Eigen::Index k = 0; k < f.size(); ++k) f[k] = m.mean[k] + sd[k] * stream.normal();
    fn(f);
  }
}

const MonteCarlo& require_monte_carlo(const ExpectationMethod& method, const Family& family) {
  const auto* mc = std::get_if<MonteCarlo>(&method);
  if (mc == nullptr) {
    throw UnsupportedMethod("Gauss-Hermite quadrature is one-dimensional; categorical families with K=" +
                            std::to_string(family.classes) + " need Monte Carlo");
  }
  return *mc;
}

}  // namespace

VectorEstimate expected_link_estimate(const PredictiveMoments& moments, const Family& family,
                                      const ExpectationMethod& method) {
  validate(method);
  check_moments(moments, family);
  switch (family.kind) {
    case Family::Kind::Gaussian:
      return {moments.mean, Eigen::VectorXd::Zero(1)};
    case Family::Kind::Bernoulli: {
      const Estimate e = gaussian_expectation(sigmoid, moments.mean[0], moments.variance[0], method);
      return {Eigen::VectorXd::Constant(1, e.value), Eigen::VectorXd::Constant(1, e.std_error)};
    }
    case Family::Kind::Categorical:
      break;
  }
  const MonteCarlo& mc = require_monte_carlo(method, family);
  const Eigen::Index k = family.outputs();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(k), sum_sq = Eigen::VectorXd::Zero(k);
  for_each_logit_sample(moments, mc, [&](const Eigen::VectorXd& f) {
    const Eigen::VectorXd p = link(family, f);
    sum += p;
    sum_sq += p.cwiseProduct(p);
  });
  const double n = mc.samples;
  Eigen::VectorXd mean = sum / n;
  Eigen::VectorXd se = Eigen::VectorXd::Zero(k);
  if (mc.samples > 1) {
    se = ((sum_sq - n * mean.cwiseProduct(mean)) / (n - 1)).cwiseMax(0.0).array().sqrt() / std::sqrt(n);
  }
  return {std::move(mean), std::move(se)};
}

Eigen::VectorXd expected_link(const PredictiveMoments& moments, const Family& family,
                              const ExpectationMethod& method) {
  return expected_link_estimate(moments, family, method).value;
}

Eigen::MatrixXd expected_link_jacobian(const PredictiveMoments& moments, const Family& family,
                                       const ExpectationMethod& method) {
  validate(method);
  check_moments(moments, family);
  switch (family.kind) {
    case Family::Kind::Gaussian:
      return Eigen::MatrixXd::Identity(1, 1);
    case Family::Kind::Bernoulli:
      return Eigen::MatrixXd::Constant(
          1, 1, gaussian_expectation(sigmoid_derivative, moments.mean[0], moments.variance[0], method).value);
    case Family::Kind::Categorical:
      break;
  }
  const MonteCarlo& mc = require_monte_carlo(method, family);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(family.classes, family.classes);
  for_each_logit_sample(moments, mc, [&](const Eigen::VectorXd& f) { sum += link_jacobian(family, f); });
  return sum / static_cast<double>(mc.samples);
}

Estimate expected_log_partition(const PredictiveMoments& moments, const Family& family,
                                const ExpectationMethod& method) {
  validate(method);
  check_moments(moments, family);
  switch (family.kind) {
    case Family::Kind::Gaussian:
      return {0.5 * (moments.mean[0] * moments.mean[0] + moments.variance[0]), 0.0};
    case Family::Kind::Bernoulli:
      return gaussian_expectation(softplus, moments.mean[0], moments.variance[0], method);
    case Family::Kind::Categorical:
      break;
  }
  const MonteCarlo& mc = require_monte_carlo(method, family);
  double sum = 0.0, sum_sq = 0.0;
  for_each_logit_sample(moments, mc, [&](const Eigen::VectorXd& f) {
    const double a = log_partition(family, f);
    sum += a;
    sum_sq += a * a;
  });
  const double n = mc.samples;
  const double mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

double kl_gaussian(const GaussianPosterior& q, double prior_precision) {
  if (!(prior_precision > 0.0)) throw InvalidInput("prior precision must be positive");
  const double p = static_cast<double>(q.dim());
  return 0.5 * (prior_precision * (q.trace() + q.mean().squaredNorm()) - p - p * std::log(prior_precision) -
                q.log_det());
}

Estimate variational_objective(const GaussianPosterior& q, const Problem& data, const Model& model,
                               const Family& family, const ExpectationMethod& method, double prior_precision) {
  if (data.targets.rows() != data.inputs.rows()) throw ShapeError("inputs and targets differ in length");
  const double kl = kl_gaussian(q, prior_precision);
  if (data.size() == 0) return {kl, 0.0};

  if (std::holds_alternative<LinearModel>(model)) {
    double total = 0.0, var = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const Eigen::VectorXd x = data.inputs.row(i).transpose();
      const Eigen::VectorXd y = data.targets.row(i).transpose();
      const PredictiveMoments m = predictive_moments(q, output_jacobian(model, q.mean(), x));
      const Estimate a = expected_log_partition(m, family, for_example(method, static_cast<std::uint64_t>(i)));
      total += -y.dot(m.mean) + a.value;
      var += a.std_error * a.std_error;
    }
    return {total + kl, std::sqrt(var)};
  }

  const auto* mc = std::get_if<MonteCarlo>(&method);
  if (mc == nullptr) throw UnsupportedMethod("non-linear models need a Monte Carlo expectation");
  const auto thetas = sample(q, mc->samples, mc->stream);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& theta : thetas) {
    double l = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      l += loss(family, data.targets.row(i).transpose(), forward(model, theta, data.inputs.row(i).transpose()));
    }
    sum += l;
    sum_sq += l * l;
  }
  const double n = mc->samples;
  const double mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
  return {mean + kl, std::sqrt(var / n)};
}

}  // namespace varls
