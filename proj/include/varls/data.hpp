#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "varls/glm.hpp"
#include "varls/problem.hpp"
#include "varls/rng.hpp"

namespace varls {

enum class Split { Train, Test };

struct Provenance {
  std::string source;
  std::uint64_t seed = 0;
  std::string corruption;  // empty when labels are clean
};

/// Features (N x d) with class ids in [0, K). `clean_labels` is present
/// exactly when `labels` were produced by a corruption process.
struct LabeledDataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::optional<std::vector<int>> clean_labels;
  int classes = 2;
  Split split = Split::Train;
  Provenance provenance;

  Eigen::Index size() const { return features.rows(); }
  int dim() const { return static_cast<int>(features.cols()); }
  /// Label that was originally assigned (the clean one after corruption).
  int true_label(Eigen::Index i) const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// IDX (MNIST) files: big-endian u32 header fields followed by u8 payload.

struct IdxImages {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
  std::uint32_t count() const { return rows * cols == 0 ? 0 : static_cast<std::uint32_t>(pixels.size() / (rows * cols)); }
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// Pixels scaled to [0, 1]; labels must lie in [0, 10). `limit` > 0 keeps the
/// first `limit` examples.
LabeledDataset parse_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                         std::size_t limit = 0);

// ---------------------------------------------------------------------------
// Synthetic data.

/// K centers drawn uniformly on the sphere of the given radius in R^d.
Eigen::MatrixXd random_centers(int classes, int dim, double radius, Stream stream);

/// `per_class` points per class from N(center_c, scale^2 I), class-major order.
LabeledDataset gaussian_blobs(const Eigen::MatrixXd& centers, int per_class, double scale, Stream stream,
                              Split split = Split::Train);

// ---------------------------------------------------------------------------
// Splits, normalisation, CSV.

/// Random permutation split; train receives round(fraction * N) examples.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double train_fraction, Stream stream);

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // per-feature std, 1 where the std is zero

  static Standardizer fit(const LabeledDataset& train);
  LabeledDataset apply(LabeledDataset data) const;
};

/// Header `label,clean_label,x0,...`; clean_label is -1 when absent. Leading
/// `#` comment lines (the optional preamble) are skipped on import.
void export_csv(const LabeledDataset& data, const std::filesystem::path& path, const std::string& preamble = "");
LabeledDataset import_csv(const std::filesystem::path& path, int classes, Split split = Split::Train);

/// Hard targets for `family` from the (possibly noisy) labels.
Problem make_problem(const LabeledDataset& data, const Family& family);

}  // namespace varls
