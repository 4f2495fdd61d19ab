#include "varls/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "varls/error.hpp"

namespace varls {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool full_batch_kind(OptimizerKind kind) {
  return kind == OptimizerKind::Vgd || kind == OptimizerKind::Newton || kind == OptimizerKind::Von;
}

Eigen::VectorXd smoothed_target(const Family& family, int label, const SmoothingSpec& smoothing,
                                const Eigen::VectorXd& u_bar, const Eigen::MatrixXd& u_bar_by_class) {
  Eigen::VectorXd y = hard_target(family, label);
  if (smoothing.kind == SmoothingKind::None || smoothing.alpha == 0.0) return y;
  const double a = smoothing.alpha;
  const int k = family.classes;
  Eigen::VectorXd u;
  if (smoothing.kind == SmoothingKind::Ls) {
    u = Eigen::VectorXd::Constant(k, 1.0 / k);
  } else if (smoothing.classwise) {
    u = u_bar_by_class.row(label).transpose();
  } else {
    u = u_bar;
  }
  if (family.kind == Family::Kind::Bernoulli) return Eigen::VectorXd::Constant(1, (1.0 - a) * y[0] + a * u[1]);
  return (1.0 - a) * y + a * u;
}

std::vector<std::size_t> shuffled(std::size_t n, Stream stream) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

ExpectationMethod reseeded(const ExpectationMethod& method, Stream stream) {
  if (const auto* mc = std::get_if<MonteCarlo>(&method)) return MonteCarlo{mc->samples, stream};
  return method;
}

}  // namespace

double Schedule::at(int epoch, int epochs) const {
  switch (kind) {
    case ScheduleKind::Constant:
      return lr;
    case ScheduleKind::Step: {
      double rate = lr;
      for (int m : milestones) {
        if (epoch >= m) rate *= gamma;
      }
      return rate;
    }
    case ScheduleKind::Cosine: {
      if (epoch < warmup) return lr * static_cast<double>(epoch + 1) / static_cast<double>(warmup);
      const int span = epochs - warmup;
      if (span <= 0) return lr;
      return 0.5 * lr * (1.0 + std::cos(kPi * static_cast<double>(epoch - warmup) / static_cast<double>(span)));
    }
  }
  return lr;
}

void Schedule::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidInput("learning rate must be positive");
  if (kind == ScheduleKind::Step && !(gamma > 0.0)) throw InvalidInput("step decay factor must be positive");
  if (kind == ScheduleKind::Cosine && warmup < 0) throw InvalidInput("warmup must be non-negative");
}

void OptimizerSpec::validate() const {
  schedule.validate();
  if (momentum < 0.0 || momentum >= 1.0) throw InvalidInput("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw InvalidInput("weight decay must be non-negative");
  if (kind == OptimizerKind::Sam && sam_radius < 0.0) throw InvalidInput("SAM radius must be non-negative");
  if (kind == OptimizerKind::Vgd && !(posterior_variance > 0.0)) {
    throw InvalidInput("posterior variance must be positive");
  }
  if (kind == OptimizerKind::Ivon) {
    IvonConfig c = ivon;
    if (c.ess <= 0.0) c.ess = 1.0;
    c.validate();
    if (ivon_noise == NoiseSource::Exact || ivon_noise == NoiseSource::Ls || ivon_noise == NoiseSource::Ols) {
      throw InvalidInput("IVON noise must be taylor, sampled or none");
    }
  }
  varls::validate(method);
}

void TrainSpec::validate() const {
  optimizer.validate();
  if (epochs < 0) throw InvalidInput("epochs must be non-negative");
  if (batch_size < 0) throw InvalidInput("batch size must be non-negative");
  if (smoothing.alpha < 0.0 || smoothing.alpha >= 1.0) throw InvalidInput("smoothing rate must lie in [0, 1)");
  if (smoothing.kind != SmoothingKind::None && family.kind == Family::Kind::Gaussian) {
    throw InvalidInput("label smoothing needs a classification family");
  }
  if (full_batch_kind(optimizer.kind)) {
    if (!std::holds_alternative<LinearModel>(model)) {
      throw UnsupportedMethod("vgd, newton and von need a linear model");
    }
    if (smoothing.kind != SmoothingKind::None) throw InvalidInput("vgd, newton and von do not take label smoothing");
  }
  if (output_dim(model) != family.outputs()) throw ShapeError("model outputs do not match the family");
  if (const auto* mlp = std::get_if<MlpModel>(&model)) mlp->validate();
  for (int e : probe_epochs) {
    if (e < 0 || e > epochs) throw InvalidInput("probe epoch " + std::to_string(e) + " outside [0, epochs]");
  }
  if (noise_samples < 1) throw InvalidInput("noise samples must be positive");
}

double accuracy(const Model& model, const Eigen::VectorXd& theta, const Eigen::MatrixXd& features,
                const std::vector<int>& labels, const Family& family) {
  if (features.rows() == 0) return 0.0;
  long correct = 0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd f = forward(model, theta, features.row(i).transpose());
    if (predict_class(family, f) == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(features.rows());
}

double mean_loss(const Model& model, const Eigen::VectorXd& theta, const Eigen::MatrixXd& features,
                 const std::vector<int>& labels, const Family& family) {
  if (features.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd f = forward(model, theta, features.row(i).transpose());
    total += loss(family, hard_target(family, labels[static_cast<std::size_t>(i)]), f);
  }
  return total / static_cast<double>(features.rows());
}

TrainResult train(const TrainSpec& spec, const LabeledDataset& train_set, const LabeledDataset& test_set,
                  Stream stream) {
  spec.validate();
  train_set.validate();
  test_set.validate();
  if (input_dim(spec.model) != train_set.dim()) throw ShapeError("model input size does not match the data");
  if (test_set.size() > 0 && test_set.dim() != train_set.dim()) throw ShapeError("train and test widths differ");
  if (spec.family.kind != Family::Kind::Gaussian &&
      (train_set.classes != spec.family.classes || test_set.classes != spec.family.classes)) {
    throw ShapeError("dataset classes do not match the family");
  }

  const Model& model = spec.model;
  const Family& family = spec.family;
  const OptimizerSpec& opt = spec.optimizer;
  const auto n = static_cast<std::size_t>(train_set.size());
  const int k = family.kind == Family::Kind::Gaussian ? 2 : family.classes;

  std::vector<int> test_labels(static_cast<std::size_t>(test_set.size()));
  for (Eigen::Index i = 0; i < test_set.size(); ++i) test_labels[static_cast<std::size_t>(i)] = test_set.true_label(i);

  Eigen::VectorXd theta = init_parameters(model, stream.child("init"));
  SgdState sgd{theta, Eigen::VectorXd::Zero(theta.size())};
  IvonConfig ivon_cfg = opt.ivon;
  if (ivon_cfg.ess <= 0.0) ivon_cfg.ess = static_cast<double>(std::max<std::size_t>(n, 1));
  IvonState ivon = ivon_init(theta, ivon_cfg);
  VonState von{theta, Eigen::MatrixXd::Identity(theta.size(), theta.size()), 1.0};

  OlsAccumulator ols(k);
  ClasswiseOlsAccumulator ols_cw(k);
  Eigen::VectorXd u_bar = ols.normalized();
  Eigen::MatrixXd u_bar_cw = ols_cw.normalized();

  TrainResult result;
  auto current_mean = [&]() -> const Eigen::VectorXd& {
    if (opt.kind == OptimizerKind::Ivon) return ivon.m;
    if (opt.kind == OptimizerKind::Von) return von.mean;
    return sgd.theta;
  };
  auto current_posterior = [&]() -> std::optional<GaussianPosterior> {
    switch (opt.kind) {
      case OptimizerKind::Ivon:
        return ivon_posterior(ivon, ivon_cfg);
      case OptimizerKind::Von:
        return von.posterior();
      case OptimizerKind::Vgd:
        return GaussianPosterior(sgd.theta, Isotropic{opt.posterior_variance});
      default:
        return std::nullopt;
    }
  };
  auto probe = [&](int epoch) {
    NoiseProbe p;
    p.stream = stream.child("noise", static_cast<std::uint64_t>(epoch));
    p.samples = spec.noise_samples;
    p.method = reseeded(opt.method, p.stream.child("mc"));
    switch (opt.kind) {
      case OptimizerKind::Gd:
      case OptimizerKind::Sam:
        if (spec.smoothing.kind == SmoothingKind::Ls) p.source = NoiseSource::Ls;
        if (spec.smoothing.kind == SmoothingKind::Ols) p.source = NoiseSource::Ols;
        p.alpha = spec.smoothing.alpha;
        p.u_bar = u_bar;
        if (spec.smoothing.classwise) p.u_bar_by_class = u_bar_cw;
        break;
      case OptimizerKind::Ivon:
        p.source = opt.ivon_noise;
        break;
      case OptimizerKind::Vgd:
      case OptimizerKind::Von:
        p.source = NoiseSource::Exact;
        break;
      case OptimizerKind::Newton:
        break;
    }
    if (p.source == NoiseSource::Exact || p.source == NoiseSource::Taylor || p.source == NoiseSource::Sampled) {
      p.posterior = current_posterior();
    }
    result.snapshots.push_back({epoch, noise_dump(p, model, current_mean(), train_set, family, epoch)});
  };
  auto wants_probe = [&](int epoch) {
    return std::find(spec.probe_epochs.begin(), spec.probe_epochs.end(), epoch) != spec.probe_epochs.end();
  };

  if (wants_probe(0)) probe(0);

  const Problem full = full_batch_kind(opt.kind) ? make_problem(train_set, family) : Problem{};
  const std::size_t batch = spec.batch_size == 0 ? n : std::min<std::size_t>(static_cast<std::size_t>(spec.batch_size), n);

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    const double lr = opt.schedule.at(epoch, spec.epochs);
    const auto epoch_id = static_cast<std::uint64_t>(epoch);
    if (full_batch_kind(opt.kind)) {
      const Stream step_stream = stream.child("step", epoch_id);
      switch (opt.kind) {
        case OptimizerKind::Vgd: {
          const auto& lin = std::get<LinearModel>(model);
          sgd.theta = vgd_step({sgd.theta, lr}, full, lin, family, reseeded(opt.method, step_stream),
                               opt.posterior_variance)
                          .theta;
          break;
        }
        case OptimizerKind::Newton:
          sgd.theta = newton_step({sgd.theta, lr}, full, std::get<LinearModel>(model), family).theta;
          break;
        default: {
          von.rho = std::min(lr, 1.0);
          von = von_step(von, full, std::get<LinearModel>(model), family, reseeded(opt.method, step_stream));
          break;
        }
      }
    } else if (n > 0) {
      const auto order = shuffled(n, stream.child("batch", epoch_id));
      const Stream step_stream = stream.child("step", epoch_id);
      std::uint64_t batch_index = 0;
      for (std::size_t start = 0; start < n; start += batch, ++batch_index) {
        const std::size_t stop = std::min(n, start + batch);
        const double scale = 1.0 / static_cast<double>(stop - start);
        bool first_call = true;
        GradientFn grad = [&](const Eigen::VectorXd& params) {
          Eigen::VectorXd total = Eigen::VectorXd::Zero(params.size());
          for (std::size_t b = start; b < stop; ++b) {
            const auto i = static_cast<Eigen::Index>(order[b]);
            const int label = train_set.labels[order[b]];
            const Eigen::VectorXd x = train_set.features.row(i).transpose();
            const ExampleEval ev =
                evaluate_example(model, params, x, smoothed_target(family, label, spec.smoothing, u_bar, u_bar_cw), family);
            total += ev.grad;
            if (first_call && spec.smoothing.kind == SmoothingKind::Ols) {
              if (spec.smoothing.classwise) {
                ols_cw.add(label, ev.logits);
              } else {
                ols.add(ev.logits);
              }
            }
          }
          first_call = false;
          return Eigen::VectorXd(scale * total);
        };
        switch (opt.kind) {
          case OptimizerKind::Gd:
            sgd = sgd_step(sgd, grad(sgd.theta), lr, opt.momentum, opt.weight_decay);
            break;
          case OptimizerKind::Sam: {
            const Eigen::VectorXd g1 = grad(sgd.theta);
            const double norm = g1.norm();
            const Eigen::VectorXd g2 =
                (norm > 0.0 && opt.sam_radius > 0.0) ? grad(sgd.theta + (opt.sam_radius / norm) * g1) : g1;
            sgd = sgd_step(sgd, g2, lr, opt.momentum, opt.weight_decay);
            break;
          }
          default:
            ivon = ivon_step(ivon, ivon_cfg, lr, grad, step_stream.child(batch_index));
            break;
        }
      }
      if (spec.smoothing.kind == SmoothingKind::Ols) {
        u_bar = ols.normalized();
        u_bar_cw = ols_cw.normalized();
        ols.reset();
        ols_cw.reset();
      }
    }

    const Eigen::VectorXd& mean = current_mean();
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.lr = lr;
    m.train_loss = mean_loss(model, mean, train_set.features, train_set.labels, family);
    m.test_acc = accuracy(model, mean, test_set.features, test_labels, family);
    result.metrics.push_back(m);
    if (wants_probe(epoch + 1)) probe(epoch + 1);
  }

  result.theta = current_mean();
  result.posterior = current_posterior();
  return result;
}

}  // namespace varls
