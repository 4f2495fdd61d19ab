#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "varls/commands.hpp"
#include "varls/error.hpp"
#include "varls/report.hpp"

namespace fs = std::filesystem;

namespace {

varls::Json read_config(const std::string& path, const std::vector<std::string>& overrides) {
  varls::Json config = path.empty() ? varls::Json::object() : varls::load_json(path);
  for (const auto& o : overrides) varls::apply_override(config, o);
  return config;
}

std::vector<int> parse_epochs(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw varls::ConfigError("/probe_epochs: bad epoch \"" + item + "\"");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label noise from variational learning: training sweeps, noise dumps and diagnostics"};
  app.set_version_flag("--version", std::string("varls ") + varls::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "master seed; replaces the config's seed list");
    cmd->add_option("--out", out, "output directory")->capture_default_str();
    cmd->add_option("--override", overrides, "dot-path override, e.g. optimizer.lr=0.05 (repeatable)");
  };

  auto* train = app.add_subcommand("train", "train one config, or an LS/SAM grid over seeds");
  common(train);

  auto* dump = app.add_subcommand("noise-dump", "train and dump per-example label noise");
  common(dump);
  std::string probe_text;
  dump->add_option("--epochs-at", probe_text, "comma-separated checkpoint epochs (default 25%,50%,100%)");

  auto* corrupt = app.add_subcommand("corrupt", "write a corrupted copy of the training split with a sidecar");
  common(corrupt);

  auto* fig2 = app.add_subcommand("fig2", "label-noise curve of logistic regression against the posterior mean");
  varls::Fig2Options fopt;
  std::string method = "gauss-hermite";
  int nodes = 64;
  int samples = 1000000;
  std::uint64_t fig2_seed = 0;
  std::string fig2_out = "out";
  fig2->add_option("--variance", fopt.variance, "predictive variance")->capture_default_str();
  fig2->add_option("--min", fopt.lo, "grid start")->capture_default_str();
  fig2->add_option("--max", fopt.hi, "grid end")->capture_default_str();
  fig2->add_option("--step", fopt.step, "grid spacing")->capture_default_str();
  fig2->add_option("--method", method, "gauss-hermite or monte-carlo")
      ->check(CLI::IsMember({"gauss-hermite", "monte-carlo"}))
      ->capture_default_str();
  fig2->add_option("--nodes", nodes, "quadrature nodes")->capture_default_str();
  fig2->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str();
  fig2->add_option("--seed", fig2_seed, "Monte Carlo seed")->capture_default_str();
  fig2->add_option("--out", fig2_out, "output directory")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "compare smoothed labels across noise dumps");
  std::vector<std::string> inputs;
  std::optional<int> epoch;
  bool log_scale = false;
  std::string compare_out = "out";
  compare->add_option("inputs", inputs, "run directories or noise.csv files")->required()->expected(2, -1);
  compare->add_option("--epoch", epoch, "epoch to compare (default: final)");
  compare->add_flag("--log-scale", log_scale, "log-scale divergence axis");
  compare->add_option("--out", compare_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) {
      const auto cells = varls::run_train(read_config(config_path, overrides), seed, out);
      for (const auto& c : cells) {
        std::cout << "seed " << c.seed;
        if (c.value_index >= 0) std::cout << " value " << c.value;
        std::cout << " test_acc " << c.result.final_test_acc() << "\n";
      }
    } else if (dump->parsed()) {
      const auto cells = varls::run_noise_dump(read_config(config_path, overrides), seed, out, parse_epochs(probe_text));
      std::cout << "wrote noise dumps for " << cells.size() << " run(s) under " << out << "\n";
    } else if (corrupt->parsed()) {
      varls::run_corrupt(read_config(config_path, overrides), seed, out);
      std::cout << "wrote " << (fs::path(out) / "noisy.csv").string() << "\n";
    } else if (fig2->parsed()) {
      if (method == "gauss-hermite") {
        fopt.method = varls::GaussHermite{nodes};
      } else {
        fopt.method = varls::MonteCarlo{samples, varls::Stream(fig2_seed, "fig2")};
      }
      fopt.seed = fig2_seed;
      const auto r = varls::run_fig2(fopt, fig2_out);
      for (const auto& c : r.checks) std::cout << (c.passed ? "ok   " : "FAIL ") << c.name << ": " << c.detail << "\n";
    } else if (compare->parsed()) {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      for (const auto& p : varls::run_compare(paths, epoch, log_scale, compare_out)) {
        std::cout << p.a << " vs " << p.b << ": mean symmetric KL " << p.mean_kl << ", mean cosine " << p.mean_cosine
                  << "\n";
      }
    }
  } catch (const varls::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
