#include "varls/models.hpp"

#include <cmath>
#include <string>

#include "varls/error.hpp"

namespace varls {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;

void check_sizes(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
  if (theta.size() != parameter_count(model)) {
    throw ShapeError("parameter vector has length " + std::to_string(theta.size()) + ", model expects " +
                     std::to_string(parameter_count(model)));
  }
  if (x.size() != input_dim(model)) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(input_dim(model)));
  }
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Relu:
      return z > 0.0 ? z : 0.0;
    case Activation::Identity:
      return z;
  }
  return z;
}

// derivative expressed through the pre-activation; relu'(0) = 0
double activate_derivative(Activation a, double z, double out) {
  switch (a) {
    case Activation::Tanh:
      return 1.0 - out * out;
    case Activation::Relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

// Activations of every layer (index 0 is the input) and hidden pre-activations.
struct MlpTrace {
  std::vector<Eigen::VectorXd> act;
  std::vector<Eigen::VectorXd> pre;
};

MlpTrace mlp_forward(const MlpModel& m, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
  const std::size_t layers = m.sizes.size() - 1;
  MlpTrace tr;
  tr.act.reserve(layers + 1);
  tr.pre.reserve(layers);
  tr.act.push_back(x);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = m.sizes[l], out = m.sizes[l + 1];
    ConstWeights w(theta.data() + offset, out, in);
    offset += static_cast<Eigen::Index>(out) * in;
    Eigen::VectorXd z = w * tr.act.back() + theta.segment(offset, out);
    offset += out;
    if (l + 1 < layers) {
      Eigen::VectorXd a = z.unaryExpr([&](double v) { return activate(m.activation, v); });
      tr.pre.push_back(std::move(z));
      tr.act.push_back(std::move(a));
    } else {
      tr.act.push_back(std::move(z));
    }
  }
  return tr;
}

Eigen::VectorXd mlp_backward(const MlpModel& m, const Eigen::VectorXd& theta, const MlpTrace& tr,
                             const Eigen::VectorXd& v) {
  const std::size_t layers = m.sizes.size() - 1;
  Eigen::VectorXd grad(theta.size());
  Eigen::Index offset = theta.size();
  Eigen::VectorXd delta = v;  // dL/dz for the current layer
  for (std::size_t l = layers; l-- > 0;) {
    const int in = m.sizes[l], out = m.sizes[l + 1];
    offset -= out;
    grad.segment(offset, out) = delta;
    offset -= static_cast<Eigen::Index>(out) * in;
    Eigen::Map<RowMajor>(grad.data() + offset, out, in) = delta * tr.act[l].transpose();
    if (l == 0) break;
    ConstWeights w(theta.data() + offset, out, in);
    Eigen::VectorXd back = w.transpose() * delta;
    const auto& z = tr.pre[l - 1];
    const auto& a = tr.act[l];
    for (Eigen::Index j = 0; j < back.size(); ++j) {
      back[j] *= activate_derivative(m.activation, z[j], a[j]);
    }
    delta = std::move(back);
  }
  return grad;
}

}  // namespace

Eigen::VectorXd LinearModel::features(const Eigen::VectorXd& x) const {
  if (!bias) return x;
  Eigen::VectorXd phi(x.size() + 1);
  phi << x, 1.0;
  return phi;
}

int MlpModel::parameter_count() const {
  int p = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) p += sizes[l + 1] * (sizes[l] + 1);
  return p;
}

void MlpModel::validate() const {
  if (sizes.size() < 2) throw InvalidInput("MLP needs at least input and output sizes");
  if (sizes.size() > 5) throw InvalidInput("MLP supports at most 3 hidden layers");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw InvalidInput("MLP layer sizes must be positive");
    if (i > 0 && i + 1 < sizes.size() && sizes[i] > 512) {
      throw InvalidInput("MLP hidden layers are limited to 512 units");
    }
  }
}

int parameter_count(const Model& model) {
  return std::visit([](const auto& m) { return m.parameter_count(); }, model);
}

int input_dim(const Model& model) {
  return std::visit(
      [](const auto& m) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LinearModel>) {
          return m.input_dim;
        } else {
          return m.input_dim();
        }
      },
      model);
}

int output_dim(const Model& model) {
  return std::visit(
      [](const auto& m) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LinearModel>) {
          return m.outputs;
        } else {
          return m.outputs();
        }
      },
      model);
}

std::vector<MlpLayer> unpack(const MlpModel& model, const Eigen::VectorXd& theta) {
  if (theta.size() != model.parameter_count()) throw ShapeError("parameter vector does not match MLP");
  std::vector<MlpLayer> layers;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < model.sizes.size(); ++l) {
    const int in = model.sizes[l], out = model.sizes[l + 1];
    MlpLayer layer;
    layer.weight = ConstWeights(theta.data() + offset, out, in);
    offset += static_cast<Eigen::Index>(out) * in;
    layer.bias = theta.segment(offset, out);
    offset += out;
    layers.push_back(std::move(layer));
  }
  return layers;
}

Eigen::VectorXd pack(const MlpModel& model, const std::vector<MlpLayer>& layers) {
  if (layers.size() + 1 != model.sizes.size()) throw ShapeError("layer count does not match MLP");
  Eigen::VectorXd theta(model.parameter_count());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const int in = model.sizes[l], out = model.sizes[l + 1];
    if (layers[l].weight.rows() != out || layers[l].weight.cols() != in || layers[l].bias.size() != out) {
      throw ShapeError("layer " + std::to_string(l) + " has the wrong shape");
    }
    Eigen::Map<RowMajor>(theta.data() + offset, out, in) = layers[l].weight;
    offset += static_cast<Eigen::Index>(out) * in;
    theta.segment(offset, out) = layers[l].bias;
    offset += out;
  }
  return theta;
}

Eigen::VectorXd init_parameters(const Model& model, Stream stream) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(parameter_count(model));
  if (const auto* mlp = std::get_if<MlpModel>(&model)) {
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l + 1 < mlp->sizes.size(); ++l) {
      const int in = mlp->sizes[l], out = mlp->sizes[l + 1];
      const double scale = std::sqrt(2.0 / (in + out));
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(out) * in; ++i) {
        theta[offset + i] = scale * stream.normal();
      }
      offset += static_cast<Eigen::Index>(out) * in + out;
    }
  }
  return theta;
}

Eigen::VectorXd forward(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
  check_sizes(model, theta, x);
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    ConstWeights w(theta.data(), lin->outputs, lin->feature_dim());
    return w * lin->features(x);
  }
  const auto& mlp = std::get<MlpModel>(model);
  return mlp_forward(mlp, theta, x).act.back();
}

Eigen::MatrixXd output_jacobian(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
  check_sizes(model, theta, x);
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    const int d = lin->feature_dim();
    const Eigen::VectorXd phi = lin->features(x);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(lin->outputs, lin->parameter_count());
    for (int k = 0; k < lin->outputs; ++k) jac.row(k).segment(static_cast<Eigen::Index>(k) * d, d) = phi;
    return jac;
  }
  const auto& mlp = std::get<MlpModel>(model);
  const MlpTrace tr = mlp_forward(mlp, theta, x);
  Eigen::MatrixXd jac(mlp.outputs(), theta.size());
  for (int k = 0; k < mlp.outputs(); ++k) {
    jac.row(k) = mlp_backward(mlp, theta, tr, Eigen::VectorXd::Unit(mlp.outputs(), k)).transpose();
  }
  return jac;
}

Eigen::VectorXd vector_jacobian_product(const Model& model, const Eigen::VectorXd& theta,
                                        const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
  check_sizes(model, theta, x);
  if (v.size() != output_dim(model)) throw ShapeError("cotangent length does not match model outputs");
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    Eigen::VectorXd grad(lin->parameter_count());
    Eigen::Map<RowMajor>(grad.data(), lin->outputs, lin->feature_dim()) = v * lin->features(x).transpose();
    return grad;
  }
  const auto& mlp = std::get<MlpModel>(model);
  return mlp_backward(mlp, theta, mlp_forward(mlp, theta, x), v);
}

Eigen::VectorXd per_example_grad(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y, const Family& family) {
  return evaluate_example(model, theta, x, y, family).grad;
}

ExampleEval evaluate_example(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y, const Family& family) {
  check_sizes(model, theta, x);
  if (family.outputs() != output_dim(model)) throw ShapeError("family and model output widths differ");
  ExampleEval out;
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    const Eigen::VectorXd phi = lin->features(x);
    out.logits = ConstWeights(theta.data(), lin->outputs, lin->feature_dim()) * phi;
    const Eigen::VectorXd r = loss_grad_f(family, y, out.logits);
    out.grad.resize(theta.size());
    Eigen::Map<RowMajor>(out.grad.data(), lin->outputs, lin->feature_dim()) = r * phi.transpose();
  } else {
    const auto& mlp = std::get<MlpModel>(model);
    const MlpTrace tr = mlp_forward(mlp, theta, x);
    out.logits = tr.act.back();
    out.grad = mlp_backward(mlp, theta, tr, loss_grad_f(family, y, out.logits));
  }
  out.loss = loss(family, y, out.logits);
  return out;
}

double feature_norm(const Model& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    check_sizes(model, theta, x);
    return std::sqrt(static_cast<double>(lin->outputs)) * lin->features(x).norm();
  }
  return output_jacobian(model, theta, x).norm();
}

}  // namespace varls
