#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "varls/config.hpp"
#include "varls/quadrature.hpp"

namespace varls {

/// Worker count for independent cells, from VARLS_WORKERS (default 1).
int worker_count();

struct CellResult {
  std::uint64_t seed = 0;
  int value_index = -1;  // position in the sweep grid, -1 without a sweep
  double value = 0.0;
  TrainResult result;
};

/// Runs every (seed, grid value) cell of an experiment and writes its files
/// under `out`. A single cell writes directly into `out`.
std::vector<CellResult> run_train(const Json& config, const std::optional<std::uint64_t>& seed,
                                  const std::filesystem::path& out, const std::string& command = "train");

/// Training with per-example noise dumps at `probe_epochs` (default: 25%,
/// 50% and 100% of the epochs).
std::vector<CellResult> run_noise_dump(Json config, const std::optional<std::uint64_t>& seed,
                                       const std::filesystem::path& out, const std::vector<int>& probe_epochs = {});

struct Fig2Options {
  double variance = 1.0;
  double lo = -8.0;
  double hi = 8.0;
  double step = 0.05;
  ExpectationMethod method = GaussHermite{64};
  std::uint64_t seed = 0;
};

struct Fig2Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Fig2Result {
  std::vector<double> f;
  std::vector<double> eps;
  std::vector<double> eps_se;  // Monte Carlo standard errors, zero for quadrature
  std::vector<Fig2Check> checks;
  double peak_location = 0.0;  // positive peak of |eps| on the grid
  double peak_height = 0.0;

  bool passed() const;
};

/// Symmetric grid lo + (hi - lo) i / n; mirrored points are exact negatives
/// when lo == -hi.
std::vector<double> make_grid(double lo, double hi, double step);

Fig2Result compute_fig2(const Fig2Options& options);
/// Writes fig2.csv (f, eps, abs_eps) and fig2.svg; throws NumericalError when
/// a shape check fails.
Fig2Result run_fig2(const Fig2Options& options, const std::filesystem::path& out);

struct PairStats {
  std::string a;
  std::string b;
  int epoch_a = 0;
  int epoch_b = 0;
  std::vector<long> ids;
  std::vector<double> sym_kl;
  std::vector<double> cosine;
  double mean_kl = 0.0;
  double median_kl = 0.0;
  double mean_cosine = 0.0;
};

/// Symmetric KL after flooring both distributions at 1e-6 and renormalising.
double symmetric_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double cosine_similarity(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Records of one dump at `epoch` (default: the last epoch present).
std::vector<LabelNoiseRecord> select_epoch(const std::vector<LabelNoiseRecord>& records, std::optional<int> epoch,
                                           int* chosen = nullptr);

PairStats compare_records(const std::string& a, const std::vector<LabelNoiseRecord>& ra, const std::string& b,
                          const std::vector<LabelNoiseRecord>& rb);

/// Compares every pair of dumps (run directories holding noise.csv, or the
/// files themselves) and writes compare.csv, compare_summary.csv and
/// compare.svg.
std::vector<PairStats> run_compare(const std::vector<std::filesystem::path>& inputs, std::optional<int> epoch,
                                   bool log_scale, const std::filesystem::path& out);

/// Corrupts the configured training split and writes noisy.csv plus the
/// corruption.json sidecar.
void run_corrupt(const Json& config, const std::optional<std::uint64_t>& seed, const std::filesystem::path& out);

}  // namespace varls
