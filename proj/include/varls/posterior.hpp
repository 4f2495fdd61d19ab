#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "varls/glm.hpp"
#include "varls/models.hpp"
#include "varls/problem.hpp"
#include "varls/quadrature.hpp"
#include "varls/rng.hpp"

namespace varls {

struct Isotropic {
  double variance = 1.0;
};
struct Diagonal {
  Eigen::VectorXd variances;
};
struct Full {
  Eigen::MatrixXd covariance;
};

using Covariance = std::variant<Isotropic, Diagonal, Full>;

/// N(mean, Sigma). Construction validates the covariance; for Full covariances
/// the Cholesky factor is computed once, retrying with jitter 1e-10 added to
/// the diagonal up to three times before throwing NumericalError.
class GaussianPosterior {
 public:
  GaussianPosterior(Eigen::VectorXd mean, Covariance covariance);

  /// Full-covariance posterior from a precision matrix.
  static GaussianPosterior from_precision(Eigen::VectorXd mean, const Eigen::MatrixXd& precision);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Covariance& covariance() const { return covariance_; }
  Eigen::Index dim() const { return mean_.size(); }

  Eigen::MatrixXd covariance_matrix() const;
  /// Sigma^{1/2} e with the Cholesky factor as the square root.
  Eigen::VectorXd scale(const Eigen::VectorXd& e) const;
  /// diag(J Sigma J^T) for a K x P matrix J.
  Eigen::VectorXd quadratic_forms(const Eigen::MatrixXd& jac) const;
  double trace() const;
  double log_det() const;

 private:
  Eigen::VectorXd mean_;
  Covariance covariance_;
  Eigen::MatrixXd chol_;  // lower factor, Full only
};

std::vector<Eigen::VectorXd> sample(const GaussianPosterior& q, int n, Stream stream);

/// Per-output Gaussian marginals of f = J theta under q.
struct PredictiveMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

PredictiveMoments predictive_moments(const GaussianPosterior& q, const Eigen::MatrixXd& jacobian);
PredictiveMoments predictive_moments(const GaussianPosterior& q, const Eigen::VectorXd& features);

struct VectorEstimate {
  Eigen::VectorXd value;
  Eigen::VectorXd std_error;
};

/// E[A'(f)] with f ~ N(moments), outputs treated as independent. Bernoulli
/// and Gaussian accept both methods; Categorical requires Monte Carlo.
Eigen::VectorXd expected_link(const PredictiveMoments& moments, const Family& family,
                              const ExpectationMethod& method);
VectorEstimate expected_link_estimate(const PredictiveMoments& moments, const Family& family,
                                      const ExpectationMethod& method);

/// E[A''(f)] (K x K), the data part of the expected GLM Hessian.
Eigen::MatrixXd expected_link_jacobian(const PredictiveMoments& moments, const Family& family,
                                       const ExpectationMethod& method);

/// E[A(f)].
Estimate expected_log_partition(const PredictiveMoments& moments, const Family& family,
                                const ExpectationMethod& method);

/// KL(q || N(0, prior_precision^{-1} I)).
double kl_gaussian(const GaussianPosterior& q, double prior_precision);

/// sum_i E_q[l_i] + KL(q || prior). Linear models use exact predictive
/// moments; MLPs require a Monte Carlo method and sample theta directly.
Estimate variational_objective(const GaussianPosterior& q, const Problem& data, const Model& model,
                               const Family& family, const ExpectationMethod& method, double prior_precision);

}  // namespace varls
