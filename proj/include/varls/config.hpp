#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "varls/corrupt.hpp"
#include "varls/data.hpp"
#include "varls/train.hpp"

namespace varls {

using Json = nlohmann::json;

struct DatasetSpec {
  enum class Kind { Blobs, Idx, Csv };
  Kind kind = Kind::Blobs;
  int classes = 2;
  // blobs
  int dim = 2;
  int per_class = 200;
  int test_per_class = 200;
  double radius = 2.0;
  double scale = 1.0;
  // idx
  std::string images, labels, test_images, test_labels;
  long limit = 0;
  long test_limit = 0;
  // csv
  std::string train_csv, test_csv;
  // idx / csv without a test file
  double train_fraction = 0.8;
  bool standardize = true;
  bool has_seed = false;
  std::uint64_t seed = 0;  // fixed data seed; otherwise the run seed
};

struct ModelSpec {
  enum class Kind { Linear, Mlp };
  Kind kind = Kind::Linear;
  std::vector<int> hidden;
  Activation activation = Activation::Tanh;
  bool bias = true;
};

struct CorruptionSpec {
  enum class Kind { None, Symmetric, Pairflip, Datadep };
  Kind kind = Kind::None;
  double rate = 0.0;
  double kappa = 0.0;
  double beta = 0.0;
  bool allow_degenerate = false;
  std::vector<int> order;
};

struct SweepSpec {
  enum class Kind { None, Ls, Sam };
  Kind kind = Kind::None;
  std::vector<double> values;
};

/// Fully resolved experiment description. `resolved` echoes every field,
/// defaults included, and is what output files embed.
struct ExperimentConfig {
  Json resolved;
  std::vector<std::uint64_t> seeds;
  DatasetSpec dataset;
  ModelSpec model;
  std::string family = "auto";
  TrainSpec train;  // model field is filled in by build_model once data widths are known
  CorruptionSpec corruption;
  SweepSpec sweep;
  int top_k = 10;
};

Json load_json(const std::filesystem::path& path);

/// Applies `a.b.c=value`; the value is parsed as JSON and falls back to a
/// plain string.
void apply_override(Json& config, const std::string& assignment);

/// Validates and fills defaults. Errors are ConfigError with JSON-pointer
/// paths.
ExperimentConfig parse_config(const Json& config);

Family build_family(const ExperimentConfig& config);
Model build_model(const ModelSpec& spec, int input_dim, int outputs);

/// Clean train/test splits for `seed`, standardised on train when requested.
std::pair<LabeledDataset, LabeledDataset> load_data(const DatasetSpec& spec, std::uint64_t seed);

/// Applies the configured corruption to a training split with stream
/// (seed, "corrupt").
LabeledDataset apply_configured_corruption(const CorruptionSpec& spec, LabeledDataset train, std::uint64_t seed);

TransitionMatrix build_transition(const CorruptionSpec& spec, int classes);

}  // namespace varls
