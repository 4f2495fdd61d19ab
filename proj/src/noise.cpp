#include "varls/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "varls/error.hpp"

namespace varls {

namespace {

Eigen::VectorXd one_hot(int k, int label) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
  y[label] = 1.0;
  return y;
}

// Noise on the length-K class distribution mapped back to the family's
// target space (component 1 for Bernoulli).
Eigen::VectorXd to_family(const Family& family, const Eigen::VectorXd& eps_classes) {
  if (family.kind == Family::Kind::Bernoulli) return Eigen::VectorXd::Constant(1, eps_classes[1]);
  return eps_classes;
}

void check_alpha(double alpha, bool allow_zero) {
  const bool ok = allow_zero ? (alpha >= 0.0 && alpha < 1.0) : (alpha > 0.0 && alpha < 1.0);
  if (!ok) {
    throw InvalidInput("smoothing rate must lie in " + std::string(allow_zero ? "[0, 1)" : "(0, 1)") + ", got " +
                       std::to_string(alpha));
  }
}

Eigen::VectorXd taylor_from_jacobian(const GaussianPosterior& q, const Eigen::MatrixXd& jac, const Family& family,
                                     Stream stream) {
  Eigen::VectorXd e(q.dim());
  for (Eigen::Index j = 0; j < e.size(); ++j) e[j] = stream.normal();
  const Eigen::VectorXd z = jac * q.scale(e);
  return taylor_noise(family, jac * q.mean(), z);
}

}  // namespace

Eigen::VectorXd ls_smooth(const Eigen::VectorXd& y, double alpha) {
  check_alpha(alpha, false);
  const bool one_hot_label = (y.array() == 0.0 || y.array() == 1.0).all() && y.sum() == 1.0;
  if (y.size() < 2 || !one_hot_label) throw InvalidInput("label smoothing expects a one-hot label");
  return (1.0 - alpha) * y + Eigen::VectorXd::Constant(y.size(), alpha / static_cast<double>(y.size()));
}

Eigen::VectorXd ls_noise(const Eigen::VectorXd& y, double alpha) {
  check_alpha(alpha, true);
  return alpha * (Eigen::VectorXd::Constant(y.size(), 1.0 / static_cast<double>(y.size())) - y);
}

OlsAccumulator::OlsAccumulator(int classes) : sum_(Eigen::VectorXd::Zero(classes)) {
  if (classes < 2) throw InvalidInput("online label smoothing needs K >= 2");
}

void OlsAccumulator::add(const Eigen::VectorXd& logits) {
  if (logits.size() == 1 && classes() == 2) {
    const double p = sigmoid(logits[0]);
    sum_[0] += 1.0 - p;
    sum_[1] += p;
  } else if (logits.size() == classes()) {
    sum_ += link(Family::categorical(classes()), logits);
  } else {
    throw ShapeError("logit width does not match the accumulator");
  }
  ++count_;
}

Eigen::VectorXd OlsAccumulator::normalized() const {
  const double total = sum_.sum();
  if (count_ == 0 || !(total > 0.0)) return Eigen::VectorXd::Constant(classes(), 1.0 / classes());
  return sum_ / total;
}

void OlsAccumulator::reset() {
  sum_.setZero();
  count_ = 0;
}

ClasswiseOlsAccumulator::ClasswiseOlsAccumulator(int classes) : sum_(Eigen::MatrixXd::Zero(classes, classes)) {
  if (classes < 2) throw InvalidInput("online label smoothing needs K >= 2");
}

void ClasswiseOlsAccumulator::add(int label, const Eigen::VectorXd& logits) {
  if (label < 0 || label >= classes()) throw InvalidInput("label out of range");
  Eigen::VectorXd p;
  if (logits.size() == 1 && classes() == 2) {
    p.resize(2);
    p << 1.0 - sigmoid(logits[0]), sigmoid(logits[0]);
  } else if (logits.size() == classes()) {
    p = link(Family::categorical(classes()), logits);
  } else {
    throw ShapeError("logit width does not match the accumulator");
  }
  Eigen::Index best = 0;
  p.maxCoeff(&best);
  if (best == label) sum_.row(label) += p.transpose();
}

Eigen::MatrixXd ClasswiseOlsAccumulator::normalized() const {
  Eigen::MatrixXd out(sum_.rows(), sum_.cols());
  for (Eigen::Index c = 0; c < sum_.rows(); ++c) {
    const double total = sum_.row(c).sum();
    if (total > 0.0) {
      out.row(c) = sum_.row(c) / total;
    } else {
      out.row(c).setConstant(1.0 / static_cast<double>(sum_.cols()));
    }
  }
  return out;
}

void ClasswiseOlsAccumulator::reset() { sum_.setZero(); }

Eigen::VectorXd ols_noise(const Eigen::VectorXd& u_bar, const Eigen::VectorXd& y, double alpha) {
  check_alpha(alpha, true);
  if (u_bar.size() != y.size()) throw ShapeError("OLS distribution and label differ in length");
  return alpha * (u_bar - y);
}

Eigen::VectorXd label_noise_from_moments(const PredictiveMoments& moments, const Family& family,
                                         const ExpectationMethod& method) {
  validate(method);
  const auto* gh = std::get_if<GaussHermite>(&method);
  if (family.kind == Family::Kind::Bernoulli && gh != nullptr) {
    const double f = moments.mean[0];
    const double var = moments.variance[0];
    if (!(var >= 0.0)) throw InvalidInput("predictive variance must be non-negative");
    if (var == 0.0) return Eigen::VectorXd::Zero(1);
    // sigma(a) - sigma(b) = (tanh(a/2) - tanh(b/2)) / 2, summed per mirrored node pair
    const auto& rule = gauss_hermite_rule(gh->nodes);
    const double sd = std::sqrt(var);
    const double t0 = std::tanh(0.5 * f);
    double eps = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double dz = sd * rule.nodes[k];
      const double up = t0 - std::tanh(0.5 * (f + dz));
      const double down = t0 - std::tanh(0.5 * (f - dz));
      eps += rule.weights[k] * (0.5 * (up + down));
    }
    return Eigen::VectorXd::Constant(1, eps);
  }
  return link(family, moments.mean) - expected_link(moments, family, method);
}

Eigen::VectorXd label_noise_exact(const GaussianPosterior& q, const LinearModel& model, const Eigen::VectorXd& x,
                                  const Family& family, const ExpectationMethod& method) {
  const Eigen::MatrixXd jac = output_jacobian(Model{model}, q.mean(), x);
  return label_noise_from_moments(predictive_moments(q, jac), family, method);
}

Eigen::VectorXd taylor_noise(const Family& family, const Eigen::VectorXd& f, const Eigen::VectorXd& perturbation) {
  if (perturbation.size() != f.size()) throw ShapeError("perturbation and logits differ in length");
  return link_jacobian(family, f) * perturbation;
}

Eigen::VectorXd label_noise_taylor(const GaussianPosterior& q, const LinearModel& model, const Eigen::VectorXd& x,
                                   const Family& family, Stream stream) {
  return taylor_from_jacobian(q, output_jacobian(Model{model}, q.mean(), x), family, stream);
}

Eigen::VectorXd label_noise_nn(const GaussianPosterior& q, const Model& model, const Eigen::VectorXd& x,
                               const Family& family, Stream stream) {
  if (std::holds_alternative<Full>(q.covariance())) {
    throw UnsupportedMethod("network label noise expects an isotropic or diagonal posterior");
  }
  return taylor_from_jacobian(q, output_jacobian(model, q.mean(), x), family, stream);
}

Eigen::VectorXd label_noise_sampled(const GaussianPosterior& q, const Model& model, const Eigen::VectorXd& x,
                                    const Family& family, int samples, Stream stream) {
  if (samples < 1) throw InvalidInput("sampled label noise needs at least one sample");
  Eigen::VectorXd mean_link = Eigen::VectorXd::Zero(family.outputs());
  for (const auto& theta : sample(q, samples, stream)) mean_link += link(family, forward(model, theta, x));
  return link(family, forward(model, q.mean(), x)) - mean_link / static_cast<double>(samples);
}

std::vector<LabelNoiseRecord> noise_dump(const NoiseProbe& probe, const Model& model, const Eigen::VectorXd& theta,
                                         const LabeledDataset& data, const Family& family, int epoch) {
  const bool variational = probe.source == NoiseSource::Exact || probe.source == NoiseSource::Taylor ||
                           probe.source == NoiseSource::Sampled;
  if (variational && !probe.posterior) throw InvalidInput("variational noise probes need a posterior");
  if (probe.source == NoiseSource::Exact && !std::holds_alternative<LinearModel>(model)) {
    throw UnsupportedMethod("exact label noise is only available for linear models");
  }
  const int k = data.classes;
  std::vector<LabelNoiseRecord> out;
  out.reserve(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.features.row(i).transpose();
    const int noisy = data.labels[static_cast<std::size_t>(i)];
    LabelNoiseRecord r;
    r.id = static_cast<long>(i);
    r.epoch = epoch;
    r.true_class = data.true_label(i);
    r.noisy_class = noisy;
    const Eigen::MatrixXd jac = output_jacobian(model, theta, x);
    const Eigen::VectorXd f = jac.rows() > 0 ? forward(model, theta, x) : Eigen::VectorXd();
    r.link = link(family, f);
    r.feature_norm = jac.norm();
    if (variational) r.predictive_variance = probe.posterior->quadratic_forms(jac).sum();

    const auto idx = static_cast<std::uint64_t>(i);
    switch (probe.source) {
      case NoiseSource::None:
        r.epsilon = Eigen::VectorXd::Zero(family.outputs());
        break;
      case NoiseSource::Ls:
        r.epsilon = to_family(family, ls_noise(one_hot(k, noisy), probe.alpha));
        break;
      case NoiseSource::Ols:
        r.epsilon = to_family(family, ols_noise(probe.u_bar_by_class.size() > 0
                                                    ? Eigen::VectorXd(probe.u_bar_by_class.row(noisy).transpose())
                                                    : probe.u_bar,
                                                one_hot(k, noisy), probe.alpha));
        break;
      case NoiseSource::Exact:
        r.epsilon = label_noise_from_moments(predictive_moments(*probe.posterior, jac), family,
                                             for_example(probe.method, idx));
        break;
      case NoiseSource::Taylor:
        r.epsilon = label_noise_nn(*probe.posterior, model, x, family, probe.stream.child(idx));
        break;
      case NoiseSource::Sampled:
        r.epsilon = label_noise_sampled(*probe.posterior, model, x, family, probe.samples, probe.stream.child(idx));
        break;
    }
    r.epsilon_norm = r.epsilon.norm();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LabelNoiseRecord> sort_by_noise(std::vector<LabelNoiseRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const LabelNoiseRecord& a, const LabelNoiseRecord& b) {
    if (a.epsilon_norm != b.epsilon_norm) return a.epsilon_norm > b.epsilon_norm;
    return a.id < b.id;
  });
  return records;
}

Eigen::VectorXd smoothed_label(const LabelNoiseRecord& record, const Family& family) {
  if (family.kind == Family::Kind::Bernoulli) {
    const double y1 = record.noisy_class + record.epsilon[0];
    Eigen::VectorXd out(2);
    out << 1.0 - y1, y1;
    return out;
  }
  Eigen::VectorXd y = one_hot(family.classes, record.noisy_class);
  return y + record.epsilon;
}

}  // namespace varls
