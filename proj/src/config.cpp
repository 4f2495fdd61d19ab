#include "varls/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "varls/corrupt.hpp"
#include "varls/error.hpp"

namespace varls {

namespace {

const std::vector<double> kLsGrid = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
const std::vector<double> kSamGrid = {0.0, 0.05, 0.1, 0.15, 0.2, 0.5};

[[noreturn]] void fail(const std::string& ptr, const std::string& message) {
  throw ConfigError((ptr.empty() ? std::string("/") : ptr) + ": " + message);
}

// Reads one JSON object, remembering which keys were consumed and the value
// (default or given) of each so that the resolved config can be echoed.
class Section {
 public:
  Section(const Json* src, std::string ptr) : ptr_(std::move(ptr)) {
    if (src != nullptr && !src->is_null()) {
      if (!src->is_object()) fail(ptr_, "expected an object");
      src_ = *src;
    } else {
      src_ = Json::object();
    }
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + key; }
  bool has(const std::string& key) const { return src_.contains(key) && !src_[key].is_null(); }
  const Json* child(const std::string& key) {
    seen_.insert(key);
    return has(key) ? &src_[key] : nullptr;
  }

  double number(const std::string& key, double def, const std::function<bool(double)>& ok = nullptr,
                const std::string& rule = "") {
    seen_.insert(key);
    double v = def;
    if (has(key)) {
      if (!src_[key].is_number()) fail(at(key), "expected a number");
      v = src_[key].get<double>();
    }
    if (!std::isfinite(v) || (ok && !ok(v))) fail(at(key), rule.empty() ? "out of range" : rule);
    out[key] = v;
    return v;
  }

  long integer(const std::string& key, long def, const std::function<bool(long)>& ok = nullptr,
               const std::string& rule = "") {
    seen_.insert(key);
    long v = def;
    if (has(key)) {
      if (!src_[key].is_number_integer()) fail(at(key), "expected an integer");
      v = src_[key].get<long>();
    }
    if (ok && !ok(v)) fail(at(key), rule.empty() ? "out of range" : rule);
    out[key] = v;
    return v;
  }

  bool flag(const std::string& key, bool def) {
    seen_.insert(key);
    bool v = def;
    if (has(key)) {
      if (!src_[key].is_boolean()) fail(at(key), "expected true or false");
      v = src_[key].get<bool>();
    }
    out[key] = v;
    return v;
  }

  std::string text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {}) {
    seen_.insert(key);
    std::string v = def;
    if (has(key)) {
      if (!src_[key].is_string()) fail(at(key), "expected a string");
      v = src_[key].get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(at(key), "expected one of " + list + " (got \"" + v + "\")");
    }
    out[key] = v;
    return v;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
    seen_.insert(key);
    std::vector<double> v = def;
    if (has(key)) {
      if (!src_[key].is_array()) fail(at(key), "expected an array of numbers");
      v.clear();
      for (std::size_t i = 0; i < src_[key].size(); ++i) {
        const Json& e = src_[key][i];
        if (!e.is_number() || !std::isfinite(e.get<double>())) fail(at(key) + "/" + std::to_string(i), "expected a number");
        v.push_back(e.get<double>());
      }
    }
    out[key] = v;
    return v;
  }

  std::vector<long> integers(const std::string& key, const std::vector<long>& def,
                             const std::function<bool(long)>& ok = nullptr, const std::string& rule = "") {
    seen_.insert(key);
    std::vector<long> v = def;
    if (has(key)) {
      if (!src_[key].is_array()) fail(at(key), "expected an array of integers");
      v.clear();
      for (std::size_t i = 0; i < src_[key].size(); ++i) {
        const Json& e = src_[key][i];
        if (!e.is_number_integer()) fail(at(key) + "/" + std::to_string(i), "expected an integer");
        if (ok && !ok(e.get<long>())) fail(at(key) + "/" + std::to_string(i), rule.empty() ? "out of range" : rule);
        v.push_back(e.get<long>());
      }
    }
    out[key] = v;
    return v;
  }

  void finish() const {
    for (const auto& item : src_.items()) {
      if (!seen_.count(item.key())) fail(at(item.key()), "unknown key");
    }
  }

  Json out = Json::object();

 private:
  Json src_;
  std::string ptr_;
  std::set<std::string> seen_;
};

auto positive = [](double v) { return v > 0.0; };
auto non_negative = [](double v) { return v >= 0.0; };
auto unit_open = [](double v) { return v >= 0.0 && v < 1.0; };

DatasetSpec parse_dataset(Section& root, Json& resolved) {
  Section s(root.child("dataset"), "/dataset");
  DatasetSpec d;
  const std::string kind = s.text("kind", "blobs", {"blobs", "idx", "csv"});
  d.kind = kind == "blobs" ? DatasetSpec::Kind::Blobs : kind == "idx" ? DatasetSpec::Kind::Idx : DatasetSpec::Kind::Csv;
  d.classes = static_cast<int>(
      s.integer("classes", kind == "idx" ? 10 : 2, [](long v) { return v >= 2 && v <= 1000; }, "must lie in [2, 1000]"));
  if (d.kind == DatasetSpec::Kind::Idx && d.classes != 10) fail(s.at("classes"), "IDX digit data has 10 classes");
  d.standardize = s.flag("standardize", true);
  if (s.has("seed")) {
    const Json* seed = s.child("seed");
    if (!seed->is_number_integer() || seed->get<long>() < 0) fail(s.at("seed"), "expected a non-negative integer");
    d.has_seed = true;
    d.seed = seed->get<std::uint64_t>();
    s.out["seed"] = d.seed;
  } else {
    s.child("seed");
  }
  switch (d.kind) {
    case DatasetSpec::Kind::Blobs:
      d.dim = static_cast<int>(s.integer("dim", 2, [](long v) { return v >= 1 && v <= 100000; }, "must be positive"));
      d.per_class = static_cast<int>(s.integer("per_class", 200, [](long v) { return v >= 1; }, "must be positive"));
      d.test_per_class =
          static_cast<int>(s.integer("test_per_class", 200, [](long v) { return v >= 0; }, "must be non-negative"));
      d.radius = s.number("radius", 2.0, positive, "must be positive");
      d.scale = s.number("scale", 1.0, non_negative, "must be non-negative");
      break;
    case DatasetSpec::Kind::Idx: {
      d.images = s.text("images", "");
      d.labels = s.text("labels", "");
      d.test_images = s.text("test_images", "");
      d.test_labels = s.text("test_labels", "");
      d.limit = s.integer("limit", 0, [](long v) { return v >= 0; }, "must be non-negative");
      d.test_limit = s.integer("test_limit", 0, [](long v) { return v >= 0; }, "must be non-negative");
      d.train_fraction = s.number("train_fraction", 0.8, [](double v) { return v > 0.0 && v <= 1.0; }, "must lie in (0, 1]");
      for (const auto& [key, path] : {std::pair{"images", d.images}, std::pair{"labels", d.labels}}) {
        if (path.empty()) fail(s.at(key), "required for idx datasets");
      }
      if (d.test_images.empty() != d.test_labels.empty()) fail(s.at("test_images"), "give both test files or neither");
      break;
    }
    case DatasetSpec::Kind::Csv:
      d.train_csv = s.text("train", "");
      d.test_csv = s.text("test", "");
      d.train_fraction = s.number("train_fraction", 0.8, [](double v) { return v > 0.0 && v <= 1.0; }, "must lie in (0, 1]");
      if (d.train_csv.empty()) fail(s.at("train"), "required for csv datasets");
      break;
  }
  s.finish();
  resolved["dataset"] = s.out;
  return d;
}

ModelSpec parse_model(Section& root, Json& resolved) {
  Section s(root.child("model"), "/model");
  ModelSpec m;
  m.kind = s.text("kind", "linear", {"linear", "mlp"}) == "linear" ? ModelSpec::Kind::Linear : ModelSpec::Kind::Mlp;
  m.bias = s.flag("bias", true);
  if (m.kind == ModelSpec::Kind::Mlp) {
    const auto hidden = s.integers("hidden", {32}, [](long v) { return v >= 1 && v <= 512; }, "must lie in [1, 512]");
    if (hidden.empty() || hidden.size() > 3) fail(s.at("hidden"), "expected 1 to 3 hidden layers");
    m.hidden.assign(hidden.begin(), hidden.end());
    const std::string act = s.text("activation", "tanh", {"tanh", "relu", "identity"});
    m.activation = act == "tanh" ? Activation::Tanh : act == "relu" ? Activation::Relu : Activation::Identity;
  }
  s.finish();
  resolved["model"] = s.out;
  return m;
}

Schedule parse_schedule(Section& s) {
  Schedule sc;
  const std::string kind = s.text("schedule", "constant", {"constant", "step", "cosine"});
  sc.kind = kind == "constant" ? ScheduleKind::Constant : kind == "step" ? ScheduleKind::Step : ScheduleKind::Cosine;
  sc.lr = s.number("lr", 0.1, positive, "must be positive");
  if (sc.kind == ScheduleKind::Step) {
    sc.gamma = s.number("gamma", 0.1, positive, "must be positive");
    const auto ms = s.integers("milestones", {}, [](long v) { return v >= 0; }, "must be non-negative");
    sc.milestones.assign(ms.begin(), ms.end());
  }
  if (sc.kind == ScheduleKind::Cosine) {
    sc.warmup = static_cast<int>(s.integer("warmup", 5, [](long v) { return v >= 0; }, "must be non-negative"));
  }
  return sc;
}

ExpectationMethod parse_method(Section& parent) {
  Section s(parent.child("method"), parent.at("method"));
  ExpectationMethod method;
  if (s.text("kind", "gauss-hermite", {"gauss-hermite", "monte-carlo"}) == "gauss-hermite") {
    method = GaussHermite{static_cast<int>(
        s.integer("nodes", 64, [](long v) { return v >= 2 && v <= 256; }, "must lie in [2, 256]"))};
  } else {
    method = MonteCarlo{static_cast<int>(s.integer("samples", 1000, [](long v) { return v >= 1; }, "must be positive")),
                        Stream(0, "mc")};
  }
  s.finish();
  parent.out["method"] = s.out;
  return method;
}

OptimizerSpec parse_optimizer(Section& root, Json& resolved) {
  Section s(root.child("optimizer"), "/optimizer");
  OptimizerSpec o;
  const std::string kind = s.text("kind", "gd", {"gd", "sam", "ivon", "vgd", "newton", "von"});
  static const std::map<std::string, OptimizerKind> kinds = {
      {"gd", OptimizerKind::Gd},   {"sam", OptimizerKind::Sam},       {"ivon", OptimizerKind::Ivon},
      {"vgd", OptimizerKind::Vgd}, {"newton", OptimizerKind::Newton}, {"von", OptimizerKind::Von}};
  o.kind = kinds.at(kind);
  o.schedule = parse_schedule(s);
  if (o.kind == OptimizerKind::Gd || o.kind == OptimizerKind::Sam) {
    o.momentum = s.number("momentum", 0.9, unit_open, "must lie in [0, 1)");
    o.weight_decay = s.number("weight_decay", 1e-3, non_negative, "must be non-negative");
  }
  if (o.kind == OptimizerKind::Sam) o.sam_radius = s.number("radius", 0.05, non_negative, "must be non-negative");
  if (o.kind == OptimizerKind::Ivon) {
    o.ivon.weight_decay = s.number("weight_decay", 1e-3, positive, "must be positive");
    o.ivon.beta1 = s.number("beta1", 0.9, unit_open, "must lie in [0, 1)");
    o.ivon.beta2 = s.number("beta2", 1.0 - 1e-5, [](double v) { return v >= 0.0 && v <= 1.0; }, "must lie in [0, 1]");
    o.ivon.hess_init = s.number("hess_init", 0.9, positive, "must be positive");
    o.ivon.ess = s.number("ess", 0.0, non_negative, "must be non-negative (0 selects the training-set size)");
    o.ivon.rescale_lr = s.flag("rescale_lr", false);
    o.ivon.mc_samples = static_cast<int>(s.integer("mc_samples", 1, [](long v) { return v >= 1; }, "must be positive"));
    const std::string noise = s.text("noise", "taylor", {"taylor", "sampled", "none"});
    o.ivon_noise = noise == "taylor" ? NoiseSource::Taylor : noise == "sampled" ? NoiseSource::Sampled : NoiseSource::None;
  }
  if (o.kind == OptimizerKind::Vgd) {
    o.posterior_variance = s.number("posterior_variance", 1.0, positive, "must be positive");
  }
  if (o.kind == OptimizerKind::Vgd || o.kind == OptimizerKind::Von || o.kind == OptimizerKind::Ivon) {
    o.method = parse_method(s);
  } else {
    s.child("method");
  }
  if (o.kind == OptimizerKind::Von && o.schedule.lr > 1.0) fail(s.at("lr"), "von step size must lie in (0, 1]");
  s.finish();
  resolved["optimizer"] = s.out;
  return o;
}

SmoothingSpec parse_smoothing(Section& root, Json& resolved) {
  Section s(root.child("smoothing"), "/smoothing");
  SmoothingSpec sm;
  const std::string kind = s.text("kind", "none", {"none", "ls", "ols"});
  sm.kind = kind == "none" ? SmoothingKind::None : kind == "ls" ? SmoothingKind::Ls : SmoothingKind::Ols;
  if (sm.kind != SmoothingKind::None) sm.alpha = s.number("alpha", 0.1, unit_open, "must lie in [0, 1)");
  if (sm.kind == SmoothingKind::Ols) sm.classwise = s.text("mode", "global", {"global", "classwise"}) == "classwise";
  s.finish();
  resolved["smoothing"] = s.out;
  return sm;
}

CorruptionSpec parse_corruption(Section& root, Json& resolved, int classes) {
  Section s(root.child("corruption"), "/corruption");
  CorruptionSpec c;
  const std::string kind = s.text("kind", "none", {"none", "symmetric", "pairflip", "datadep"});
  if (kind == "symmetric") {
    c.kind = CorruptionSpec::Kind::Symmetric;
    c.rate = s.number("rate", 0.2, unit_open, "must lie in [0, 1)");
  } else if (kind == "pairflip") {
    c.kind = CorruptionSpec::Kind::Pairflip;
    c.rate = s.number("rate", 0.2, [](double v) { return v >= 0.0 && v <= 1.0; }, "must lie in [0, 1]");
    const auto order = s.integers("order", {});
    c.order.assign(order.begin(), order.end());
  } else if (kind == "datadep") {
    c.kind = CorruptionSpec::Kind::Datadep;
    c.kappa = s.number("kappa", 0.1, non_negative, "must be non-negative");
    c.beta = s.number("beta", 0.05, non_negative, "must be non-negative");
    c.allow_degenerate = s.flag("allow_degenerate", false);
  }
  s.finish();
  resolved["corruption"] = s.out;
  try {
    if (c.kind != CorruptionSpec::Kind::None) build_transition(c, classes);
  } catch (const Error& e) {
    fail("/corruption", e.what());
  }
  return c;
}

SweepSpec parse_sweep(Section& root, Json& resolved) {
  Section s(root.child("sweep"), "/sweep");
  SweepSpec sw;
  const std::string kind = s.text("kind", "none", {"none", "ls", "sam"});
  if (kind == "ls") {
    sw.kind = SweepSpec::Kind::Ls;
    sw.values = s.numbers("values", kLsGrid);
    for (std::size_t i = 0; i < sw.values.size(); ++i) {
      if (!unit_open(sw.values[i])) fail(s.at("values") + "/" + std::to_string(i), "must lie in [0, 1)");
    }
  } else if (kind == "sam") {
    sw.kind = SweepSpec::Kind::Sam;
    sw.values = s.numbers("values", kSamGrid);
    for (std::size_t i = 0; i < sw.values.size(); ++i) {
      if (!non_negative(sw.values[i])) fail(s.at("values") + "/" + std::to_string(i), "must be non-negative");
    }
  }
  if (sw.kind != SweepSpec::Kind::None && sw.values.empty()) fail(s.at("values"), "must not be empty");
  s.finish();
  resolved["sweep"] = s.out;
  return sw;
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override \"" + assignment + "\" is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::parse_error&) {
    value = raw;
  }
  if (!config.is_object()) config = Json::object();
  Json* node = &config;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) throw ConfigError("override \"" + assignment + "\" has an empty path segment");
    path.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    Json& next = (*node)[path[i]];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw ConfigError("override \"" + assignment + "\": " + path[i] + " is not an object");
    node = &next;
  }
  (*node)[path.back()] = value;
}

ExperimentConfig parse_config(const Json& config) {
  Section root(&config, "");
  ExperimentConfig out;
  Json resolved = Json::object();

  const auto seeds = root.integers("seeds", {0}, [](long v) { return v >= 0; }, "must be non-negative");
  if (seeds.empty()) fail("/seeds", "must not be empty");
  for (long s : seeds) out.seeds.push_back(static_cast<std::uint64_t>(s));

  out.dataset = parse_dataset(root, resolved);
  out.model = parse_model(root, resolved);
  out.family = root.text("family", "auto", {"auto", "bernoulli", "categorical"});
  if (out.family == "auto") out.family = out.dataset.classes == 2 ? "bernoulli" : "categorical";
  if (out.family == "bernoulli" && out.dataset.classes != 2) fail("/family", "bernoulli needs 2 classes");
  root.out["family"] = out.family;

  TrainSpec& t = out.train;
  t.optimizer = parse_optimizer(root, resolved);
  t.smoothing = parse_smoothing(root, resolved);
  t.epochs = static_cast<int>(root.integer("epochs", 20, [](long v) { return v >= 0; }, "must be non-negative"));
  t.batch_size = static_cast<int>(root.integer("batch_size", 50, [](long v) { return v >= 0; }, "must be non-negative"));
  const auto probes = root.integers("probe_epochs", {}, [&](long v) { return v >= 0 && v <= t.epochs; },
                                    "must lie in [0, epochs]");
  t.probe_epochs.assign(probes.begin(), probes.end());
  t.noise_samples = static_cast<int>(root.integer("noise_samples", 32, [](long v) { return v >= 1; }, "must be positive"));
  out.top_k = static_cast<int>(root.integer("top_k", 10, [](long v) { return v >= 0; }, "must be non-negative"));
  out.corruption = parse_corruption(root, resolved, out.dataset.classes);
  out.sweep = parse_sweep(root, resolved);

  const bool full_batch = t.optimizer.kind == OptimizerKind::Vgd || t.optimizer.kind == OptimizerKind::Newton ||
                          t.optimizer.kind == OptimizerKind::Von;
  if (full_batch && out.model.kind != ModelSpec::Kind::Linear) fail("/model/kind", "vgd, newton and von need a linear model");
  if (full_batch && t.smoothing.kind != SmoothingKind::None) fail("/smoothing/kind", "not available with vgd, newton or von");
  if (out.sweep.kind == SweepSpec::Kind::Ls && (t.optimizer.kind != OptimizerKind::Gd && t.optimizer.kind != OptimizerKind::Sam)) {
    fail("/sweep/kind", "the label-smoothing grid needs optimizer gd or sam");
  }
  if (out.sweep.kind == SweepSpec::Kind::Sam && t.optimizer.kind != OptimizerKind::Sam) {
    fail("/sweep/kind", "the SAM grid needs optimizer sam");
  }
  root.finish();

  for (auto& [key, value] : root.out.items()) resolved[key] = value;
  out.resolved = resolved;
  return out;
}

Family build_family(const ExperimentConfig& config) {
  return config.family == "bernoulli" ? Family::bernoulli() : Family::categorical(config.dataset.classes);
}

Model build_model(const ModelSpec& spec, int input_dim, int outputs) {
  if (spec.kind == ModelSpec::Kind::Linear) return LinearModel{input_dim, outputs, spec.bias};
  MlpModel mlp;
  mlp.sizes.push_back(input_dim);
  for (int h : spec.hidden) mlp.sizes.push_back(h);
  mlp.sizes.push_back(outputs);
  mlp.activation = spec.activation;
  mlp.validate();
  return mlp;
}

std::pair<LabeledDataset, LabeledDataset> load_data(const DatasetSpec& spec, std::uint64_t seed) {
  const std::uint64_t s = spec.has_seed ? spec.seed : seed;
  LabeledDataset train_set;
  LabeledDataset test_set;
  switch (spec.kind) {
    case DatasetSpec::Kind::Blobs: {
      const Eigen::MatrixXd centers = random_centers(spec.classes, spec.dim, spec.radius, Stream(s, "centers"));
      train_set = gaussian_blobs(centers, spec.per_class, spec.scale, Stream(s, "train"), Split::Train);
      test_set = gaussian_blobs(centers, spec.test_per_class, spec.scale, Stream(s, "test"), Split::Test);
      train_set.provenance = {"blobs", s, ""};
      test_set.provenance = {"blobs", s, ""};
      break;
    }
    case DatasetSpec::Kind::Idx: {
      LabeledDataset all = parse_idx(spec.images, spec.labels, static_cast<std::size_t>(spec.limit));
      if (!spec.test_images.empty()) {
        train_set = std::move(all);
        test_set = parse_idx(spec.test_images, spec.test_labels, static_cast<std::size_t>(spec.test_limit));
      } else {
        std::tie(train_set, test_set) = split(all, spec.train_fraction, Stream(s, "split"));
      }
      test_set.split = Split::Test;
      break;
    }
    case DatasetSpec::Kind::Csv: {
      LabeledDataset all = import_csv(spec.train_csv, spec.classes, Split::Train);
      if (!spec.test_csv.empty()) {
        train_set = std::move(all);
        test_set = import_csv(spec.test_csv, spec.classes, Split::Test);
      } else {
        std::tie(train_set, test_set) = split(all, spec.train_fraction, Stream(s, "split"));
      }
      test_set.split = Split::Test;
      break;
    }
  }
  if (spec.standardize) {
    const Standardizer z = Standardizer::fit(train_set);
    train_set = z.apply(std::move(train_set));
    test_set = z.apply(std::move(test_set));
  }
  return {std::move(train_set), std::move(test_set)};
}

TransitionMatrix build_transition(const CorruptionSpec& spec, int classes) {
  switch (spec.kind) {
    case CorruptionSpec::Kind::Symmetric:
      return symmetric_matrix(classes, spec.rate);
    case CorruptionSpec::Kind::Pairflip:
      return pairflip_matrix(classes, spec.rate, spec.order);
    case CorruptionSpec::Kind::Datadep:
      return datadep_matrix(classes, spec.kappa, spec.beta, spec.allow_degenerate);
    case CorruptionSpec::Kind::None:
      break;
  }
  return TransitionMatrix(Eigen::MatrixXd::Identity(classes, classes));
}

LabeledDataset apply_configured_corruption(const CorruptionSpec& spec, LabeledDataset train, std::uint64_t seed) {
  if (spec.kind == CorruptionSpec::Kind::None) return train;
  const TransitionMatrix p = build_transition(spec, train.classes);
  LabeledDataset out = corrupt_dataset(std::move(train), p, Stream(seed, "corrupt"));
  static const char* names[] = {"none", "symmetric", "pairflip", "datadep"};
  out.provenance.corruption = names[static_cast<int>(spec.kind)];
  return out;
}

}  // namespace varls
