#include "varls/glm.hpp"

#include <cmath>
#include <string>

#include "varls/error.hpp"

namespace varls {

namespace {

void check_logits(const Family& family, const Eigen::VectorXd& f) {
  if (f.size() != family.outputs()) {
    throw ShapeError("logit vector has length " + std::to_string(f.size()) + ", family expects " +
                     std::to_string(family.outputs()));
  }
  if (!f.allFinite()) throw InvalidInput("logits must be finite");
}

void check_label(const Family& family, const Eigen::VectorXd& y) {
  if (y.size() != family.outputs()) {
    throw InvalidInput("label has length " + std::to_string(y.size()) + ", family expects " +
                       std::to_string(family.outputs()));
  }
  if (!y.allFinite()) throw InvalidInput("label must be finite");
}

}  // namespace

Family Family::categorical(int k) {
  if (k < 2) throw InvalidInput("categorical family needs K >= 2");
  return {Kind::Categorical, k};
}

double sigmoid(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

double sigmoid_derivative(double f) {
  const double s = sigmoid(f);
  return s * (1.0 - s);
}

double softplus(double f) {
  return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
}

double log_partition(const Family& family, const Eigen::VectorXd& f) {
  check_logits(family, f);
  switch (family.kind) {
    case Family::Kind::Bernoulli:
      return softplus(f[0]);
    case Family::Kind::Gaussian:
      return 0.5 * f[0] * f[0];
    case Family::Kind::Categorical: {
      const double shift = f.maxCoeff();
      return shift + std::log((f.array() - shift).exp().sum());
    }
  }
  return 0.0;
}

Eigen::VectorXd link(const Family& family, const Eigen::VectorXd& f) {
  check_logits(family, f);
  switch (family.kind) {
    case Family::Kind::Bernoulli:
      return Eigen::VectorXd::Constant(1, sigmoid(f[0]));
    case Family::Kind::Gaussian:
      return f;
    case Family::Kind::Categorical: {
      Eigen::VectorXd p = (f.array() - f.maxCoeff()).exp();
      return p / p.sum();
    }
  }
  return f;
}

Eigen::MatrixXd link_jacobian(const Family& family, const Eigen::VectorXd& f) {
  check_logits(family, f);
  switch (family.kind) {
    case Family::Kind::Bernoulli:
      return Eigen::MatrixXd::Constant(1, 1, sigmoid_derivative(f[0]));
    case Family::Kind::Gaussian:
      return Eigen::MatrixXd::Identity(1, 1);
    case Family::Kind::Categorical: {
      const Eigen::VectorXd p = link(family, f);
      Eigen::MatrixXd jac = -p * p.transpose();
      jac.diagonal() += p;
      return jac;
    }
  }
  return {};
}

double loss(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  check_label(family, y);
  return -y.dot(f) + log_partition(family, f);
}

Eigen::VectorXd loss_grad_f(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  check_label(family, y);
  return link(family, f) - y;
}

Eigen::VectorXd hard_target(const Family& family, int label) {
  if (family.kind == Family::Kind::Categorical) {
    if (label < 0 || label >= family.classes) {
      throw InvalidInput("class id " + std::to_string(label) + " outside [0, " +
                         std::to_string(family.classes) + ")");
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(family.classes);
    y[label] = 1.0;
    return y;
  }
  if (family.kind == Family::Kind::Bernoulli && label != 0 && label != 1) {
    throw InvalidInput("Bernoulli label must be 0 or 1, got " + std::to_string(label));
  }
  return Eigen::VectorXd::Constant(1, static_cast<double>(label));
}

int predict_class(const Family& family, const Eigen::VectorXd& f) {
  if (family.kind == Family::Kind::Categorical) {
    Eigen::Index arg;
    f.maxCoeff(&arg);
    return static_cast<int>(arg);
  }
  return f[0] > 0.0 ? 1 : 0;
}

}  // namespace varls
