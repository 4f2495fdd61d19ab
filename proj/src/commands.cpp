#include "varls/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "varls/corrupt.hpp"
#include "varls/error.hpp"
#include "varls/noise.hpp"
#include "varls/report.hpp"

namespace varls {

namespace fs = std::filesystem;

namespace {

struct CellPlan {
  std::uint64_t seed = 0;
  std::size_t seed_index = 0;
  int value_index = -1;
  double value = 0.0;
  fs::path dir;
  Json config;
};

std::string value_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string sweep_name(SweepSpec::Kind kind) {
  switch (kind) {
    case SweepSpec::Kind::Ls: return "ls";
    case SweepSpec::Kind::Sam: return "sam";
    case SweepSpec::Kind::None: break;
  }
  return "train";
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Runs `fn(i)` for i in [0, n) on up to worker_count() threads. The first
// exception (lowest index) is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Json cell_config(const ExperimentConfig& cfg, std::uint64_t seed, int value_index, double value) {
  Json c = cfg.resolved;
  c["seeds"] = Json::array({seed});
  if (cfg.sweep.kind == SweepSpec::Kind::Ls) {
    c["smoothing"] = Json{{"kind", "ls"}, {"alpha", value}};
  } else if (cfg.sweep.kind == SweepSpec::Kind::Sam) {
    c["optimizer"]["radius"] = value;
  }
  if (value_index >= 0) c["sweep"] = Json{{"kind", sweep_name(cfg.sweep.kind)}, {"value", value}, {"index", value_index}};
  return c;
}

std::vector<int> default_probes(int epochs) {
  if (epochs <= 0) return {0};
  std::vector<int> p = {std::max(1, static_cast<int>(std::lround(0.25 * epochs))),
                        std::max(1, static_cast<int>(std::lround(0.5 * epochs))), epochs};
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return p;
}

fs::path dump_path(const fs::path& input) {
  return fs::is_directory(input) ? input / "noise.csv" : input;
}

std::string run_label(const fs::path& input) {
  const fs::path p = fs::is_directory(input) ? input : input.parent_path();
  std::string name = p.filename().string();
  if (name.empty() || name == ".") name = fs::absolute(p).lexically_normal().filename().string();
  return name.empty() ? input.string() : name;
}

}  // namespace

int worker_count() {
  const char* env = std::getenv("VARLS_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 256) throw ConfigError("VARLS_WORKERS must be an integer in [1, 256]");
  return static_cast<int>(v);
}

std::vector<CellResult> run_train(const Json& config, const std::optional<std::uint64_t>& seed, const fs::path& out,
                                  const std::string& command) {
  Json raw = config;
  if (seed) raw["seeds"] = Json::array({*seed});
  const ExperimentConfig cfg = parse_config(raw);
  const Family family = build_family(cfg);

  // data per seed, shared read-only by that seed's cells
  std::vector<std::pair<LabeledDataset, LabeledDataset>> data(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), [&](std::size_t s) {
    auto [train_set, test_set] = load_data(cfg.dataset, cfg.seeds[s]);
    train_set = apply_configured_corruption(cfg.corruption, std::move(train_set), cfg.seeds[s]);
    data[s] = {std::move(train_set), std::move(test_set)};
  });

  std::vector<CellPlan> plans;
  const bool single = cfg.seeds.size() == 1 && cfg.sweep.kind == SweepSpec::Kind::None;
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    const fs::path seed_dir = single ? out : out / ("seed_" + std::to_string(cfg.seeds[s]));
    if (cfg.sweep.kind == SweepSpec::Kind::None) {
      plans.push_back({cfg.seeds[s], s, -1, 0.0, seed_dir, cell_config(cfg, cfg.seeds[s], -1, 0.0)});
    } else {
      for (std::size_t v = 0; v < cfg.sweep.values.size(); ++v) {
        const double value = cfg.sweep.values[v];
        plans.push_back({cfg.seeds[s], s, static_cast<int>(v), value,
                         seed_dir / (sweep_name(cfg.sweep.kind) + "_" + value_tag(value)),
                         cell_config(cfg, cfg.seeds[s], static_cast<int>(v), value)});
      }
    }
  }

  std::vector<CellResult> results(plans.size());
  parallel_for(plans.size(), [&](std::size_t c) {
    const CellPlan& plan = plans[c];
    const auto& [train_set, test_set] = data[plan.seed_index];
    TrainSpec spec = cfg.train;
    spec.model = build_model(cfg.model, train_set.dim(), family.outputs());
    spec.family = family;
    if (cfg.sweep.kind == SweepSpec::Kind::Ls) spec.smoothing = {SmoothingKind::Ls, plan.value, false};
    if (cfg.sweep.kind == SweepSpec::Kind::Sam) spec.optimizer.sam_radius = plan.value;
    const std::uint64_t stream_index = plan.value_index < 0 ? 0 : static_cast<std::uint64_t>(plan.value_index);
    const Stream stream(plan.seed, sweep_name(cfg.sweep.kind), stream_index);

    const auto start = std::chrono::steady_clock::now();
    TrainResult r;
    try {
      r = train(spec, train_set, test_set, stream);
    } catch (const ConfigError&) {
      throw;
    } catch (const FormatError&) {
      throw;
    } catch (const NumericalError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("/: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string cfg_text = plan.config.dump();
    const std::string preamble = csv_preamble(command, plan.seed, cfg_text);
    write_metrics_csv(plan.dir / "metrics.csv", preamble, r.metrics);
    if (!r.snapshots.empty()) {
      write_noise_csv(plan.dir / "noise.csv", preamble, r.snapshots);
      write_ranking_csv(plan.dir / "ranking.csv", preamble, r.snapshots, cfg.top_k);
    }
    Json result = {{"version", kVersion},
                   {"command", command},
                   {"seed", plan.seed},
                   {"config", plan.config},
                   {"epochs", r.metrics.size()},
                   {"final_test_acc", r.final_test_acc()},
                   {"wall_clock_seconds", seconds}};
    write_text(plan.dir / "result.json", result.dump(2) + "\n");
    results[c] = {plan.seed, plan.value_index, plan.value, std::move(r)};
  });

  if (!single) {
    const std::string preamble = csv_preamble(command, cfg.seeds.front(), cfg.resolved.dump());
    std::ostringstream summary;
    summary << preamble << "seed,sweep,value,final_test_acc\n";
    for (const auto& c : results) {
      summary << c.seed << ',' << sweep_name(cfg.sweep.kind) << ',' << format_number(c.value) << ','
              << format_number(c.result.final_test_acc()) << '\n';
    }
    write_text(out / "summary.csv", summary.str());

    // per-seed best over the grid, then mean and std over seeds
    std::ostringstream best;
    best << preamble << "seed,best_value,best_test_acc\n";
    std::vector<double> bests;
    for (std::uint64_t s : cfg.seeds) {
      const CellResult* top = nullptr;
      for (const auto& c : results) {
        if (c.seed == s && (top == nullptr || c.result.final_test_acc() > top->result.final_test_acc())) top = &c;
      }
      bests.push_back(top->result.final_test_acc());
      best << s << ',' << format_number(top->value) << ',' << format_number(top->result.final_test_acc()) << '\n';
    }
    best << "mean,," << format_number(mean_of(bests)) << '\n';
    best << "std,," << format_number(std_of(bests)) << '\n';
    write_text(out / "best.csv", best.str());
  }
  return results;
}

std::vector<CellResult> run_noise_dump(Json config, const std::optional<std::uint64_t>& seed, const fs::path& out,
                                       const std::vector<int>& probe_epochs) {
  if (!probe_epochs.empty()) {
    config["probe_epochs"] = probe_epochs;
  } else if (!config.contains("probe_epochs") || config["probe_epochs"].empty()) {
    const int epochs = config.contains("epochs") && config["epochs"].is_number_integer() ? config["epochs"].get<int>() : 20;
    config["probe_epochs"] = default_probes(epochs);
  }
  return run_train(config, seed, out, "noise-dump");
}

bool Fig2Result::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Fig2Check& c) { return c.passed; });
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step) || !(step > 0.0) || !(hi >= lo)) {
    throw ConfigError("/grid: need finite lo <= hi and step > 0");
  }
  const long n = std::lround((hi - lo) / step);
  if (n > 10000000) throw ConfigError("/grid: too many points");
  std::vector<double> f(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) {
    const auto k = static_cast<double>(i);
    f[static_cast<std::size_t>(i)] = n == 0 ? lo : (lo * static_cast<double>(n - i) + hi * k) / static_cast<double>(n);
  }
  if (lo == -hi) {
    for (long i = 0; i <= n; ++i) f[static_cast<std::size_t>(i)] = hi * static_cast<double>(2 * i - n) / static_cast<double>(n);
  }
  return f;
}

Fig2Result compute_fig2(const Fig2Options& options) {
  if (!(options.variance >= 0.0) || !std::isfinite(options.variance)) throw ConfigError("/variance: must be non-negative");
  try {
    validate(options.method);
  } catch (const Error& e) {
    throw ConfigError(std::string("/method: ") + e.what());
  }
  Fig2Result r;
  r.f = make_grid(options.lo, options.hi, options.step);
  const Family family = Family::bernoulli();
  ExpectationMethod method = options.method;
  if (auto* mc = std::get_if<MonteCarlo>(&method)) mc->stream = Stream(options.seed, "fig2");
  const bool quadrature = std::holds_alternative<GaussHermite>(method);
  for (std::size_t i = 0; i < r.f.size(); ++i) {
    PredictiveMoments m{Eigen::VectorXd::Constant(1, r.f[i]), Eigen::VectorXd::Constant(1, options.variance)};
    if (quadrature) {
      r.eps.push_back(label_noise_from_moments(m, family, method)[0]);
      r.eps_se.push_back(0.0);
    } else {
      const VectorEstimate e = expected_link_estimate(m, family, for_example(method, i));
      r.eps.push_back(sigmoid(r.f[i]) - e.value[0]);
      r.eps_se.push_back(e.std_error[0]);
    }
  }

  const std::size_t n = r.f.size();
  auto add = [&](std::string name, bool ok, std::string detail) { r.checks.push_back({std::move(name), ok, std::move(detail)}); };
  char buf[160];
  if (options.variance == 0.0) {
    const bool flat = std::all_of(r.eps.begin(), r.eps.end(), [](double e) { return e == 0.0; });
    add("flat_zero", flat, flat ? "every eps is 0" : "non-zero eps with zero variance");
    return r;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (r.f[i] == 0.0) {
      const double tol = quadrature ? 1e-10 : 3.0 * r.eps_se[i] + 1e-12;
      std::snprintf(buf, sizeof buf, "eps(0) = %.3e", r.eps[i]);
      add("zero_at_origin", std::abs(r.eps[i]) <= tol, buf);
    }
  }
  if (options.lo == -options.hi && quadrature) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(r.eps[i] + r.eps[n - 1 - i]));
    std::snprintf(buf, sizeof buf, "max |eps(f) + eps(-f)| = %.3e", worst);
    add("odd", worst <= 1e-12, buf);
  }
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = std::abs(r.eps[i - 1]), b = std::abs(r.eps[i]), c = std::abs(r.eps[i + 1]);
    if (b > a && b >= c) peaks.push_back(i);
  }
  bool two = peaks.size() == 2 && r.f[peaks[0]] < 0.0 && r.f[peaks[1]] > 0.0;
  if (two) {
    r.peak_location = r.f[peaks[1]];
    r.peak_height = std::abs(r.eps[peaks[1]]);
    two = std::abs(r.f[peaks[0]] + r.f[peaks[1]]) <= 1e-9 * (1.0 + r.peak_location);
  }
  std::snprintf(buf, sizeof buf, "%zu local maxima of |eps|, positive peak at f = %.4g (|eps| = %.6g)", peaks.size(),
                r.peak_location, r.peak_height);
  add("two_symmetric_peaks", two, buf);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(r.f[i]) == 8.0) {
      std::snprintf(buf, sizeof buf, "|eps(%g)| = %.3e", r.f[i], std::abs(r.eps[i]));
      add("small_tail", std::abs(r.eps[i]) < 1e-2, buf);
    }
  }
  return r;
}

Fig2Result run_fig2(const Fig2Options& options, const fs::path& out) {
  Fig2Result r = compute_fig2(options);
  Json cfg = {{"variance", options.variance}, {"lo", options.lo}, {"hi", options.hi}, {"step", options.step}};
  if (const auto* gh = std::get_if<GaussHermite>(&options.method)) {
    cfg["method"] = {{"kind", "gauss-hermite"}, {"nodes", gh->nodes}};
  } else {
    cfg["method"] = {{"kind", "monte-carlo"}, {"samples", std::get<MonteCarlo>(options.method).samples}};
  }
  std::ostringstream csv;
  csv << csv_preamble("fig2", options.seed, cfg.dump()) << "f,eps,abs_eps\n";
  for (std::size_t i = 0; i < r.f.size(); ++i) {
    csv << format_number(r.f[i]) << ',' << format_number(r.eps[i]) << ',' << format_number(std::abs(r.eps[i])) << '\n';
  }
  write_text(out / "fig2.csv", csv.str());
  Series s{"|eps|", r.f, {}};
  for (double e : r.eps) s.y.push_back(std::abs(e));
  char title[96];
  std::snprintf(title, sizeof title, "label noise magnitude, predictive variance %g", options.variance);
  write_svg_lines(out / "fig2.svg", {title, "posterior mean of f", "|eps|", false, false}, {s});
  if (!r.passed()) {
    std::string failed;
    for (const auto& c : r.checks) {
      if (!c.passed) failed += (failed.empty() ? "" : "; ") + c.name + " (" + c.detail + ")";
    }
    throw NumericalError("curve shape check failed: " + failed);
  }
  return r;
}

double symmetric_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ShapeError("distributions differ in length");
  const Eigen::ArrayXd a = p.array().max(1e-6) / p.array().max(1e-6).sum();
  const Eigen::ArrayXd b = q.array().max(1e-6) / q.array().max(1e-6).sum();
  return ((a - b) * (a.log() - b.log())).sum();
}

double cosine_similarity(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ShapeError("distributions differ in length");
  const double denom = p.norm() * q.norm();
  return denom > 0.0 ? p.dot(q) / denom : 0.0;
}

std::vector<LabelNoiseRecord> select_epoch(const std::vector<LabelNoiseRecord>& records, std::optional<int> epoch,
                                           int* chosen) {
  if (records.empty()) throw FormatError("noise dump is empty");
  int e = epoch.value_or(std::max_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
                           return a.epoch < b.epoch;
                         })->epoch);
  std::vector<LabelNoiseRecord> out;
  for (const auto& r : records) {
    if (r.epoch == e) out.push_back(r);
  }
  if (out.empty()) throw FormatError("noise dump has no records at epoch " + std::to_string(e));
  if (chosen != nullptr) *chosen = e;
  return out;
}

PairStats compare_records(const std::string& a, const std::vector<LabelNoiseRecord>& ra, const std::string& b,
                          const std::vector<LabelNoiseRecord>& rb) {
  std::map<long, const LabelNoiseRecord*> ia, ib;
  for (const auto& r : ra) ia[r.id] = &r;
  for (const auto& r : rb) ib[r.id] = &r;
  std::vector<long> only_a, only_b;
  for (const auto& [id, r] : ia) {
    if (!ib.count(id)) only_a.push_back(id);
  }
  for (const auto& [id, r] : ib) {
    if (!ia.count(id)) only_b.push_back(id);
  }
  if (!only_a.empty() || !only_b.empty()) {
    auto list = [](const std::vector<long>& ids) {
      std::string s;
      for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? " " : "") + std::to_string(ids[i]);
      if (ids.size() > 20) s += " ... (" + std::to_string(ids.size()) + " total)";
      return s.empty() ? std::string("none") : s;
    };
    throw FormatError("example ids differ: only in " + a + ": " + list(only_a) + "; only in " + b + ": " + list(only_b));
  }
  PairStats p;
  p.a = a;
  p.b = b;
  for (const auto& [id, r] : ia) {
    const LabelNoiseRecord& s = *ib[id];
    if (r->epsilon.size() != s.epsilon.size()) throw FormatError("dumps have different label widths");
    if (r->noisy_class != s.noisy_class) {
      throw FormatError("example " + std::to_string(id) + " has different observed labels in " + a + " and " + b);
    }
    const Family fam = r->epsilon.size() == 1 ? Family::bernoulli() : Family::categorical(static_cast<int>(r->epsilon.size()));
    const Eigen::VectorXd pa = smoothed_label(*r, fam);
    const Eigen::VectorXd pb = smoothed_label(s, fam);
    p.ids.push_back(id);
    p.sym_kl.push_back(symmetric_kl(pa, pb));
    p.cosine.push_back(cosine_similarity(pa, pb));
  }
  p.mean_kl = mean_of(p.sym_kl);
  p.mean_cosine = mean_of(p.cosine);
  std::vector<double> sorted = p.sym_kl;
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty()) {
    const std::size_t m = sorted.size() / 2;
    p.median_kl = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  }
  return p;
}

std::vector<PairStats> run_compare(const std::vector<fs::path>& inputs, std::optional<int> epoch, bool log_scale,
                                   const fs::path& out) {
  if (inputs.size() < 2) throw ConfigError("/inputs: compare needs at least two noise dumps");
  std::vector<std::string> labels;
  std::vector<std::vector<LabelNoiseRecord>> dumps;
  std::vector<int> epochs;
  for (const auto& in : inputs) {
    const fs::path p = dump_path(in);
    if (!fs::exists(p)) throw FormatError(p.string() + ": noise dump not found");
    int chosen = 0;
    dumps.push_back(select_epoch(read_noise_csv(p), epoch, &chosen));
    epochs.push_back(chosen);
    std::string label = run_label(in);
    for (int k = 2; std::find(labels.begin(), labels.end(), label) != labels.end(); ++k) {
      label = run_label(in) + "#" + std::to_string(k);
    }
    labels.push_back(label);
  }
  std::vector<PairStats> pairs;
  for (std::size_t i = 0; i < dumps.size(); ++i) {
    for (std::size_t j = i + 1; j < dumps.size(); ++j) {
      PairStats p = compare_records(labels[i], dumps[i], labels[j], dumps[j]);
      p.epoch_a = epochs[i];
      p.epoch_b = epochs[j];
      pairs.push_back(std::move(p));
    }
  }
  Json cfg = {{"inputs", Json::array()}, {"epoch", epoch ? Json(*epoch) : Json("final")}, {"log_scale", log_scale}};
  for (const auto& in : inputs) cfg["inputs"].push_back(in.string());
  const std::string preamble = csv_preamble("compare", 0, cfg.dump());

  std::ostringstream detail;
  detail << preamble << "id";
  for (const auto& p : pairs) detail << ",sym_kl[" << p.a << "|" << p.b << "],cosine[" << p.a << "|" << p.b << "]";
  detail << '\n';
  for (std::size_t r = 0; r < pairs.front().ids.size(); ++r) {
    detail << pairs.front().ids[r];
    for (const auto& p : pairs) detail << ',' << format_number(p.sym_kl[r]) << ',' << format_number(p.cosine[r]);
    detail << '\n';
  }
  write_text(out / "compare.csv", detail.str());

  std::ostringstream summary;
  summary << preamble << "run_a,run_b,epoch_a,epoch_b,examples,mean_sym_kl,median_sym_kl,mean_cosine\n";
  for (const auto& p : pairs) {
    summary << p.a << ',' << p.b << ',' << p.epoch_a << ',' << p.epoch_b << ',' << p.ids.size() << ','
            << format_number(p.mean_kl) << ',' << format_number(p.median_kl) << ',' << format_number(p.mean_cosine)
            << '\n';
  }
  write_text(out / "compare_summary.csv", summary.str());

  std::vector<Series> series;
  for (const auto& p : pairs) {
    Series s{p.a + " vs " + p.b, {}, {}};
    for (std::size_t r = 0; r < p.ids.size(); ++r) {
      s.x.push_back(static_cast<double>(p.ids[r]));
      s.y.push_back(p.sym_kl[r]);
    }
    series.push_back(std::move(s));
  }
  write_svg_scatter(out / "compare.svg", {"smoothed-label divergence", "example id", "symmetric KL", false, log_scale},
                    series);
  return pairs;
}

void run_corrupt(const Json& config, const std::optional<std::uint64_t>& seed, const fs::path& out) {
  Json raw = config;
  if (seed) raw["seeds"] = Json::array({*seed});
  const ExperimentConfig cfg = parse_config(raw);
  if (cfg.corruption.kind == CorruptionSpec::Kind::None) throw ConfigError("/corruption/kind: choose a corruption");
  const std::uint64_t s = cfg.seeds.front();
  Json resolved = cfg.resolved;
  resolved["seeds"] = Json::array({s});
  auto data = load_data(cfg.dataset, s);
  const LabeledDataset noisy = apply_configured_corruption(cfg.corruption, std::move(data.first), s);
  const TransitionMatrix p = build_transition(cfg.corruption, noisy.classes);
  const EmpiricalTransition emp = empirical_transition(*noisy.clean_labels, noisy.labels, noisy.classes);

  export_csv(noisy, out / "noisy.csv", csv_preamble("corrupt", s, resolved.dump()));
  auto rows = [](const Eigen::MatrixXd& m) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
      j.push_back(row);
    }
    return j;
  };
  long flipped = 0;
  for (std::size_t i = 0; i < noisy.labels.size(); ++i) flipped += noisy.labels[i] != (*noisy.clean_labels)[i];
  Json side = {{"version", kVersion},
               {"seed", s},
               {"config", resolved},
               {"corruption", resolved["corruption"]},
               {"examples", noisy.labels.size()},
               {"flipped", flipped},
               {"transition", rows(p.matrix())},
               {"empirical_transition", rows(emp.matrix)},
               {"empty_rows", emp.empty_rows}};
  write_text(out / "corruption.json", side.dump(2) + "\n");
}

}  // namespace varls
