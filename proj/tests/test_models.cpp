#include <doctest.h>

#include <cmath>

#include "varls/error.hpp"
#include "varls/models.hpp"

using namespace varls;

namespace {

Eigen::VectorXd random_vector(Stream& s, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * s.normal();
  return v;
}

Eigen::MatrixXd fd_jacobian(const Model& m, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
  const double h = 1e-6;
  Eigen::MatrixXd jac(output_dim(m), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    Eigen::VectorXd up = theta, down = theta;
    up[j] += h;
    down[j] -= h;
    jac.col(j) = (forward(m, up, x) - forward(m, down, x)) / (2 * h);
  }
  return jac;
}

}  // namespace

TEST_CASE("linear model multiplies the row-major weights by the features") {
  const LinearModel lin{3, 2, true};
  CHECK(lin.parameter_count() == 8);
  Eigen::VectorXd theta(8);
  theta << 1, 2, 3, 4, 5, 6, 7, 8;
  const Eigen::Vector3d x(1.0, -1.0, 2.0);
  const Eigen::VectorXd f = forward(lin, theta, x);
  CHECK(f[0] == 1 - 2 + 6 + 4);
  CHECK(f[1] == 5 - 6 + 14 + 8);
  CHECK(feature_norm(LinearModel{3, 1, false}, Eigen::VectorXd::Zero(3), x) == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("output Jacobians match finite differences") {
  Stream s(1, "models");
  const std::vector<Model> models = {LinearModel{4, 3, true}, MlpModel{{4, 6, 3}, Activation::Tanh},
                                     MlpModel{{4, 5, 5, 2}, Activation::Relu},
                                     MlpModel{{4, 3, 1}, Activation::Identity}};
  for (const auto& m : models) {
    const Eigen::VectorXd theta = random_vector(s, parameter_count(m), 0.7);
    const Eigen::VectorXd x = random_vector(s, input_dim(m));
    CHECK((output_jacobian(m, theta, x) - fd_jacobian(m, theta, x)).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("vector-Jacobian products and per-example gradients agree with the Jacobian") {
  Stream s(2, "models");
  const MlpModel mlp{{3, 7, 4}, Activation::Tanh};
  const Family fam = Family::categorical(4);
  const Eigen::VectorXd theta = random_vector(s, mlp.parameter_count(), 0.5);
  const Eigen::VectorXd x = random_vector(s, 3);
  const Eigen::VectorXd v = random_vector(s, 4);
  const Eigen::MatrixXd jac = output_jacobian(mlp, theta, x);
  CHECK((vector_jacobian_product(mlp, theta, x, v) - jac.transpose() * v).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd y = hard_target(fam, 2);
  const Eigen::VectorXd f = forward(mlp, theta, x);
  const Eigen::VectorXd expected = jac.transpose() * (link(fam, f) - y);
  CHECK((per_example_grad(mlp, theta, x, y, fam) - expected).cwiseAbs().maxCoeff() <= 1e-12);

  const ExampleEval ev = evaluate_example(mlp, theta, x, y, fam);
  CHECK((ev.logits - f).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ev.loss == doctest::Approx(loss(fam, y, f)).epsilon(1e-14));
  CHECK((ev.grad - expected).cwiseAbs().maxCoeff() <= 1e-12);

  // loss gradient against finite differences of the loss itself
  const double h = 1e-6;
  for (Eigen::Index j = 0; j < theta.size(); j += 5) {
    Eigen::VectorXd up = theta, down = theta;
    up[j] += h;
    down[j] -= h;
    const double fd = (loss(fam, y, forward(mlp, up, x)) - loss(fam, y, forward(mlp, down, x))) / (2 * h);
    CHECK(ev.grad[j] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("pack and unpack round trip") {
  Stream s(3, "models");
  const MlpModel mlp{{2, 3, 4, 2}, Activation::Relu};
  const Eigen::VectorXd theta = random_vector(s, mlp.parameter_count());
  const auto layers = unpack(mlp, theta);
  REQUIRE(layers.size() == 3);
  CHECK(layers[0].weight.rows() == 3);
  CHECK(layers[0].weight.cols() == 2);
  CHECK(layers[0].weight(1, 0) == theta[2]);
  CHECK(layers[0].bias[0] == theta[6]);
  CHECK(pack(mlp, layers) == theta);
}

TEST_CASE("initialisation is deterministic per stream") {
  const MlpModel mlp{{5, 8, 3}, Activation::Tanh};
  const Eigen::VectorXd a = init_parameters(mlp, Stream(4, "init"));
  const Eigen::VectorXd b = init_parameters(mlp, Stream(4, "init"));
  const Eigen::VectorXd c = init_parameters(mlp, Stream(5, "init"));
  CHECK(a == b);
  CHECK(a != c);
  const auto layers = unpack(mlp, a);
  CHECK(layers[0].bias.isZero(0.0));
  CHECK(init_parameters(LinearModel{5, 3, true}, Stream(4, "init")).isZero(0.0));
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS((MlpModel{{2, 3, 3, 3, 3, 2}, Activation::Tanh}.validate()), InvalidInput);
  CHECK_THROWS_AS((MlpModel{{2, 513, 2}, Activation::Tanh}.validate()), InvalidInput);
  CHECK_THROWS_AS(forward(LinearModel{3, 1, false}, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), ShapeError);
  CHECK_THROWS_AS(forward(LinearModel{3, 1, false}, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)), ShapeError);
}
