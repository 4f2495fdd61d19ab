#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "varls/noise.hpp"
#include "varls/train.hpp"

namespace varls {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest round-trip decimal form ("%.17g").
std::string format_number(double v);

/// First line of every CSV the tool writes: a comment carrying the tool
/// version, the subcommand, the master seed and the resolved config.
std::string csv_preamble(const std::string& command, std::uint64_t seed, const std::string& config_json);

void write_text(const std::filesystem::path& path, const std::string& text);

/// epoch,train_loss,test_acc,lr
void write_metrics_csv(const std::filesystem::path& path, const std::string& preamble,
                       const std::vector<EpochMetrics>& metrics);

/// id,epoch,true_class,noisy_class,eps_0..,eps_norm,pred_var,feature_norm,link_0..
void write_noise_csv(const std::filesystem::path& path, const std::string& preamble,
                     const std::vector<NoiseSnapshot>& snapshots);
std::vector<LabelNoiseRecord> read_noise_csv(const std::filesystem::path& path);

/// rank,group,id,epoch,eps_norm: the top_k largest and smallest ||eps|| per snapshot.
void write_ranking_csv(const std::filesystem::path& path, const std::string& preamble,
                       const std::vector<NoiseSnapshot>& snapshots, int top_k);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Minimal SVG charts with a fixed 640 x 400 viewBox. Non-positive values are
/// dropped on log axes.
void write_svg_lines(const std::filesystem::path& path, const PlotOptions& options, const std::vector<Series>& series);
void write_svg_scatter(const std::filesystem::path& path, const PlotOptions& options, const std::vector<Series>& series);

}  // namespace varls
