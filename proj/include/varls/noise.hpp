#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "varls/data.hpp"
#include "varls/glm.hpp"
#include "varls/models.hpp"
#include "varls/posterior.hpp"
#include "varls/quadrature.hpp"
#include "varls/rng.hpp"

namespace varls {

// ---------------------------------------------------------------------------
// Classical and online label smoothing.

/// (1 - alpha) y + alpha / K for a one-hot y and alpha in (0, 1).
Eigen::VectorXd ls_smooth(const Eigen::VectorXd& y, double alpha);
/// alpha (u - y) with u uniform; the noise that ls_smooth adds.
Eigen::VectorXd ls_noise(const Eigen::VectorXd& y, double alpha);

/// Running sum of softmax outputs over one epoch. The normalised sum from
/// epoch t - 1 smooths the labels of epoch t.
class OlsAccumulator {
 public:
  explicit OlsAccumulator(int classes);

  /// Adds softmax(f) for K logits, or (1 - sigmoid(f), sigmoid(f)) for a
  /// single Bernoulli logit.
  void add(const Eigen::VectorXd& logits);
  int classes() const { return static_cast<int>(sum_.size()); }
  long count() const { return count_; }
  const Eigen::VectorXd& sum() const { return sum_; }
  /// sum / total, or uniform when nothing has been accumulated.
  Eigen::VectorXd normalized() const;
  void reset();

 private:
  Eigen::VectorXd sum_;
  long count_ = 0;
};

/// Per-class variant: row c averages the softmax outputs of training
/// examples labelled c that the model currently predicts correctly.
/// Rows without such examples fall back to uniform.
class ClasswiseOlsAccumulator {
 public:
  explicit ClasswiseOlsAccumulator(int classes);

  /// Adds softmax(f) to row `label` when f predicts `label`.
  void add(int label, const Eigen::VectorXd& logits);
  int classes() const { return static_cast<int>(sum_.rows()); }
  Eigen::MatrixXd normalized() const;
  void reset();

 private:
  Eigen::MatrixXd sum_;
};

/// alpha (u_bar - y); alpha in [0, 1).
Eigen::VectorXd ols_noise(const Eigen::VectorXd& u_bar, const Eigen::VectorXd& y, double alpha);

// ---------------------------------------------------------------------------
// Label noise induced by a Gaussian posterior.

/// A'(f_mean) - E_q[A'(f)] for a linear model, where f's marginal under q is
/// exact. The Bernoulli/Gauss-Hermite path sums mirrored node pairs of
/// tanh differences, so eps(-f) == -eps(f) holds bit for bit.
Eigen::VectorXd label_noise_exact(const GaussianPosterior& q, const LinearModel& model, const Eigen::VectorXd& x,
                                  const Family& family, const ExpectationMethod& method);

/// Same quantity from predictive moments directly.
Eigen::VectorXd label_noise_from_moments(const PredictiveMoments& moments, const Family& family,
                                         const ExpectationMethod& method);

/// First-order noise A''(f) z for a logit-space perturbation z.
Eigen::VectorXd taylor_noise(const Family& family, const Eigen::VectorXd& f, const Eigen::VectorXd& perturbation);

/// Single-sample Taylor noise A''(f) J Sigma^{1/2} e with e ~ N(0, I_P) from
/// `stream`. For a linear model J is the fixed feature embedding.
Eigen::VectorXd label_noise_taylor(const GaussianPosterior& q, const LinearModel& model, const Eigen::VectorXd& x,
                                   const Family& family, Stream stream);

/// The network form: J is the output Jacobian at the posterior mean. The
/// posterior must be isotropic or diagonal.
Eigen::VectorXd label_noise_nn(const GaussianPosterior& q, const Model& model, const Eigen::VectorXd& x,
                               const Family& family, Stream stream);

/// A'(f(mean)) - (1/S) sum_s A'(f(theta_s)), theta_s ~ q: the sample-averaged
/// alternative to the single-sample Taylor form.
Eigen::VectorXd label_noise_sampled(const GaussianPosterior& q, const Model& model, const Eigen::VectorXd& x,
                                    const Family& family, int samples, Stream stream);

// ---------------------------------------------------------------------------
// Per-example dumps.

struct LabelNoiseRecord {
  long id = 0;
  int epoch = 0;
  int true_class = 0;
  int noisy_class = 0;
  Eigen::VectorXd epsilon;  // length family.outputs()
  double epsilon_norm = 0.0;
  double predictive_variance = 0.0;  // sum of per-output variances
  double feature_norm = 0.0;
  Eigen::VectorXd link;  // A'(f) at the point estimate / posterior mean
};

enum class NoiseSource {
  None,      // no smoothing: eps = 0
  Ls,        // alpha (u - y)
  Ols,       // alpha (u_bar - y)
  Exact,     // label_noise_exact (linear models)
  Taylor,    // label_noise_nn
  Sampled,   // label_noise_sampled
};

struct NoiseProbe {
  NoiseSource source = NoiseSource::None;
  double alpha = 0.0;
  Eigen::VectorXd u_bar;                     // Ols
  Eigen::MatrixXd u_bar_by_class;            // Ols, class-wise; overrides u_bar when non-empty
  std::optional<GaussianPosterior> posterior;  // Exact / Taylor / Sampled
  ExpectationMethod method = GaussHermite{64};  // Exact
  int samples = 32;                           // Sampled
  Stream stream{0, "noise"};                  // example i uses stream.child(i)
};

/// One record per example of `data`, evaluated at parameters `theta` (the
/// posterior mean for variational sources).
std::vector<LabelNoiseRecord> noise_dump(const NoiseProbe& probe, const Model& model, const Eigen::VectorXd& theta,
                                         const LabeledDataset& data, const Family& family, int epoch);

/// Records sorted by decreasing ||eps||, ties by id.
std::vector<LabelNoiseRecord> sort_by_noise(std::vector<LabelNoiseRecord> records);

/// Smoothed label y + eps as a length-K class distribution. Bernoulli
/// records expand to (1 - y1, y1). Values are not clamped.
Eigen::VectorXd smoothed_label(const LabelNoiseRecord& record, const Family& family);

}  // namespace varls
