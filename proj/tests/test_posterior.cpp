#include <doctest.h>

#include <cmath>

#include "varls/error.hpp"
#include "varls/posterior.hpp"

using namespace varls;

namespace {

Eigen::MatrixXd random_spd(Stream& s, int p) {
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = s.normal();
  return a * a.transpose() / p + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

Eigen::MatrixXd random_matrix(Stream& s, int r, int c) {
  Eigen::MatrixXd a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = s.normal();
  return a;
}

}  // namespace

TEST_CASE("covariances are validated") {
  const Eigen::VectorXd m = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(GaussianPosterior(m, Isotropic{0.0}), InvalidInput);
  CHECK_THROWS_AS(GaussianPosterior(m, Diagonal{Eigen::Vector2d(1.0, -1.0)}), InvalidInput);
  CHECK_THROWS_AS(GaussianPosterior(m, Diagonal{Eigen::Vector3d(1.0, 1.0, 1.0)}), ShapeError);
  Eigen::Matrix2d asym;
  asym << 1.0, 0.5, 0.4, 1.0;
  CHECK_THROWS_AS(GaussianPosterior(m, Full{asym}), InvalidInput);
  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianPosterior(m, Full{indefinite}), NumericalError);
}

TEST_CASE("quadratic forms equal diag(J S J^T) for every covariance type") {
  Stream s(1, "post");
  const int p = 6;
  const Eigen::MatrixXd jac = random_matrix(s, 3, p);
  const Eigen::VectorXd mean = random_matrix(s, p, 1);
  const Eigen::MatrixXd full = random_spd(s, p);
  Eigen::VectorXd d(p);
  for (int i = 0; i < p; ++i) d[i] = 0.1 + i;
  const std::vector<GaussianPosterior> qs = {GaussianPosterior(mean, Isotropic{0.7}), GaussianPosterior(mean, Diagonal{d}),
                                             GaussianPosterior(mean, Full{full})};
  for (const auto& q : qs) {
    const Eigen::MatrixXd s_mat = q.covariance_matrix();
    const Eigen::VectorXd expected = (jac * s_mat * jac.transpose()).diagonal();
    CHECK((q.quadratic_forms(jac) - expected).cwiseAbs().maxCoeff() <= 1e-12);
    const PredictiveMoments m = predictive_moments(q, jac);
    CHECK((m.mean - jac * mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(q.trace() == doctest::Approx(s_mat.trace()).epsilon(1e-12));
    CHECK(q.log_det() == doctest::Approx(std::log(s_mat.determinant())).epsilon(1e-10));
  }
}

TEST_CASE("the precision constructor inverts") {
  Stream s(2, "post");
  const Eigen::MatrixXd prec = random_spd(s, 4);
  const GaussianPosterior q = GaussianPosterior::from_precision(Eigen::VectorXd::Zero(4), prec);
  CHECK((q.covariance_matrix() * prec - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("samples reproduce the mean and covariance") {
  Stream s(3, "post");
  const Eigen::MatrixXd full = random_spd(s, 3);
  const Eigen::Vector3d mean(1.0, -2.0, 0.5);
  const GaussianPosterior q(mean, Full{full});
  const int n = 100000;
  const auto xs = sample(q, n, Stream(4, "samples"));
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (const auto& x : xs) m += x;
  m /= n;
  Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
  for (const auto& x : xs) c += (x - m) * (x - m).transpose();
  c /= n - 1;
  CHECK((m - mean).cwiseAbs().maxCoeff() < 5.0 * std::sqrt(full.diagonal().maxCoeff() / n));
  CHECK((c - full).cwiseAbs().maxCoeff() < 0.03 * full.cwiseAbs().maxCoeff());
  const auto again = sample(q, 3, Stream(4, "samples"));
  CHECK(again[2] == xs[2]);
}

// Goldens: 40-digit adaptive quadrature under N(2, 1).
TEST_CASE("Bernoulli expectations match the high-precision oracle") {
  const PredictiveMoments m{Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 1.0)};
  const Family b = Family::bernoulli();
  CHECK(std::abs(expected_link(m, b, GaussHermite{64})[0] - 0.84453748146987651701) <= 1e-13);
  CHECK(std::abs(expected_link_jacobian(m, b, GaussHermite{64})(0, 0) - 0.11575798361658412061) <= 1e-13);
  const VectorEstimate mc = expected_link_estimate(m, b, MonteCarlo{100000, Stream(5, "mc")});
  CHECK(std::abs(mc.value[0] - 0.84453748146987651701) <= 4.0 * mc.std_error[0]);
}

TEST_CASE("Gaussian expectations are exact and categorical needs sampling") {
  const PredictiveMoments g{Eigen::VectorXd::Constant(1, 1.5), Eigen::VectorXd::Constant(1, 0.25)};
  CHECK(expected_link(g, Family::gaussian(), GaussHermite{8})[0] == 1.5);
  CHECK(expected_log_partition(g, Family::gaussian(), GaussHermite{8}).value == doctest::Approx(0.5 * (2.25 + 0.25)));

  const PredictiveMoments c{Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector3d(0.5, 0.5, 0.5)};
  CHECK_THROWS_AS(expected_link(c, Family::categorical(3), GaussHermite{64}), UnsupportedMethod);
  const Eigen::VectorXd p = expected_link(c, Family::categorical(3), MonteCarlo{2000, Stream(6, "mc")});
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("KL to the prior") {
  const GaussianPosterior prior(Eigen::VectorXd::Zero(4), Isotropic{0.5});
  CHECK(std::abs(kl_gaussian(prior, 2.0)) <= 1e-14);
  // KL(N(m, s2 I) || N(0, I)) in closed form
  const Eigen::Vector2d m(1.0, 2.0);
  const GaussianPosterior q(m, Isotropic{0.25});
  const double expected = 0.5 * (2 * 0.25 + 5.0 - 2.0 - 2.0 * std::log(0.25));
  CHECK(kl_gaussian(q, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(kl_gaussian(q, 0.0), InvalidInput);
}

TEST_CASE("objective at vanishing variance reduces to the regularised loss") {
  Stream s(7, "post");
  const int n = 15, d = 3;
  Problem data{random_matrix(s, n, d), Eigen::MatrixXd(n, 1)};
  for (int i = 0; i < n; ++i) data.targets(i, 0) = s.uniform() < 0.5 ? 0.0 : 1.0;
  const LinearModel lin{d, 1, false};
  const Eigen::VectorXd mean = random_matrix(s, d, 1);
  const double v = 1e-12;
  const GaussianPosterior q(mean, Isotropic{v});
  const Estimate obj = variational_objective(q, data, lin, Family::bernoulli(), GaussHermite{64}, 1.0);
  double regularised = 0.5 * mean.squaredNorm();
  for (int i = 0; i < n; ++i) {
    regularised += loss(Family::bernoulli(), data.targets.row(i).transpose(), forward(lin, mean, data.inputs.row(i).transpose()));
  }
  // the KL keeps its entropy constant as the variance shrinks; compare without it
  const double kl_constant = kl_gaussian(q, 1.0) - 0.5 * mean.squaredNorm();
  CHECK(std::abs(obj.value - kl_constant - regularised) <= 1e-4);
}

TEST_CASE("MLP objectives need Monte Carlo") {
  const MlpModel mlp{{2, 3, 1}, Activation::Tanh};
  const GaussianPosterior q(Eigen::VectorXd::Zero(mlp.parameter_count()), Isotropic{0.1});
  Problem data{Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Zero(2, 1)};
  CHECK_THROWS_AS(variational_objective(q, data, mlp, Family::bernoulli(), GaussHermite{64}, 1.0), UnsupportedMethod);
  const Estimate e = variational_objective(q, data, mlp, Family::bernoulli(), MonteCarlo{50, Stream(0, "mc")}, 1.0);
  CHECK(std::isfinite(e.value));
}
