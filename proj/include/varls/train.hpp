#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varls/data.hpp"
#include "varls/glm.hpp"
#include "varls/models.hpp"
#include "varls/noise.hpp"
#include "varls/optim.hpp"
#include "varls/posterior.hpp"
#include "varls/quadrature.hpp"
#include "varls/rng.hpp"

namespace varls {

enum class ScheduleKind { Constant, Step, Cosine };

/// Per-epoch learning rate. Step decay multiplies by `gamma` at each
/// milestone epoch; cosine decays to zero after a linear warmup.
struct Schedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double lr = 0.1;
  double gamma = 0.1;
  std::vector<int> milestones;
  int warmup = 5;

  /// Rate used during the 0-based `epoch` of a run lasting `epochs`.
  double at(int epoch, int epochs) const;
  void validate() const;
};

enum class OptimizerKind { Gd, Sam, Ivon, Vgd, Newton, Von };

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::Gd;
  Schedule schedule;
  double momentum = 0.9;      // gd, sam
  double weight_decay = 1e-3;  // gd, sam; ivon uses ivon.weight_decay
  double sam_radius = 0.05;
  IvonConfig ivon;
  NoiseSource ivon_noise = NoiseSource::Taylor;  // how IVON dumps report eps
  double posterior_variance = 1.0;               // vgd
  ExpectationMethod method = GaussHermite{64};   // vgd, von, exact dumps

  void validate() const;
};

enum class SmoothingKind { None, Ls, Ols };

struct SmoothingSpec {
  SmoothingKind kind = SmoothingKind::None;
  double alpha = 0.0;
  bool classwise = false;  // Ols: per-class distributions of correct predictions
};

struct TrainSpec {
  Model model = LinearModel{};
  Family family = Family::bernoulli();
  OptimizerSpec optimizer;
  SmoothingSpec smoothing;
  int epochs = 10;
  int batch_size = 0;  // 0: full batch
  std::vector<int> probe_epochs;  // epochs (1-based, 0 = initial state) at which noise is dumped
  int noise_samples = 32;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double test_acc = 0.0;
  double lr = 0.0;
};

struct NoiseSnapshot {
  int epoch = 0;
  std::vector<LabelNoiseRecord> records;
};

struct TrainResult {
  Eigen::VectorXd theta;  // point estimate or posterior mean
  std::optional<GaussianPosterior> posterior;
  std::vector<EpochMetrics> metrics;
  std::vector<NoiseSnapshot> snapshots;

  double final_test_acc() const { return metrics.empty() ? 0.0 : metrics.back().test_acc; }
};

double accuracy(const Model& model, const Eigen::VectorXd& theta, const Eigen::MatrixXd& features,
                const std::vector<int>& labels, const Family& family);

/// Mean loss on hard targets.
double mean_loss(const Model& model, const Eigen::VectorXd& theta, const Eigen::MatrixXd& features,
                 const std::vector<int>& labels, const Family& family);

/// Trains on `train` (its possibly noisy labels) and scores the clean labels
/// of `test` after every epoch. All randomness derives from `stream`:
/// child "init" for parameters, "batch"/epoch for shuffling, "step"/epoch for
/// optimizer sampling and "noise"/epoch for dumps.
TrainResult train(const TrainSpec& spec, const LabeledDataset& train_set, const LabeledDataset& test_set,
                  Stream stream);

}  // namespace varls
