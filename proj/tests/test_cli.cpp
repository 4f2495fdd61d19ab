#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "varls/commands.hpp"
#include "varls/config.hpp"
#include "varls/error.hpp"
#include "varls/report.hpp"

using namespace varls;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "varls_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json small_config() {
  return Json::parse(R"({
    "seeds": [1],
    "dataset": {"kind": "blobs", "classes": 3, "dim": 4, "per_class": 30, "test_per_class": 20,
                "radius": 2.0, "scale": 1.0},
    "model": {"kind": "linear"},
    "optimizer": {"kind": "gd", "lr": 0.05},
    "epochs": 4,
    "batch_size": 16
  })");
}

std::string config_error(const Json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(VARLS_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config validation reports JSON pointers") {
  Json j = small_config();
  j["optimizer"]["lr"] = -1.0;
  CHECK(config_error(j).find("/optimizer/lr") != std::string::npos);
  j = small_config();
  j["optimizer"]["lrr"] = 0.1;
  CHECK(config_error(j).find("/optimizer/lrr") != std::string::npos);
  j = small_config();
  j["corruption"] = {{"kind", "datadep"}, {"kappa", 0.5}, {"beta", 0.2}};
  CHECK(config_error(j).find("/corruption") != std::string::npos);
  j = small_config();
  j["epochs"] = "ten";
  CHECK(config_error(j).find("/epochs") != std::string::npos);

  j = small_config();
  apply_override(j, "optimizer.lr=0.25");
  apply_override(j, "optimizer.kind=ivon");
  apply_override(j, "smoothing.kind=ls");
  CHECK(j["optimizer"]["lr"] == 0.25);
  CHECK(j["optimizer"]["kind"] == "ivon");
  const ExperimentConfig cfg = parse_config(j);
  CHECK(cfg.train.optimizer.kind == OptimizerKind::Ivon);
  CHECK(cfg.resolved["optimizer"]["lr"] == 0.25);
  CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
}

TEST_CASE("zero epochs writes a header-only metrics file") {
  Json j = small_config();
  j["epochs"] = 0;
  const fs::path out = scratch("zero");
  run_train(j, std::nullopt, out);
  const std::string text = slurp(out / "metrics.csv");
  CHECK(text.rfind("# varls ", 0) == 0);
  CHECK(text.substr(text.find('\n') + 1) == "epoch,train_loss,test_acc,lr\n");
}

TEST_CASE("sweeps run one cell per grid value") {
  for (const char* kind : {"ls", "sam"}) {
    Json j = small_config();
    j["seeds"] = {1, 2};
    j["epochs"] = 2;
    j["sweep"] = {{"kind", kind}};
    j["optimizer"]["kind"] = std::string(kind) == "sam" ? "sam" : "gd";
    const fs::path out = scratch(std::string("sweep_") + kind);
    const auto cells = run_train(j, std::nullopt, out);
    CHECK(cells.size() == 12);
    int dirs = 0;
    for (const auto& e : fs::directory_iterator(out / "seed_2")) dirs += e.is_directory();
    CHECK(dirs == 6);
    const std::string best = slurp(out / "best.csv");
    CHECK(best.find("\nmean,,") != std::string::npos);
    CHECK(best.find("\nstd,,") != std::string::npos);
  }
}

TEST_CASE("reruns are byte identical") {
  Json j = small_config();
  j["optimizer"]["kind"] = "ivon";
  j["corruption"] = {{"kind", "symmetric"}, {"rate", 0.3}};
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  run_noise_dump(j, 5, a);
  run_noise_dump(j, 5, b);
  for (const char* f : {"metrics.csv", "noise.csv", "ranking.csv"}) {
    CHECK(!slurp(a / f).empty());
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("label smoothing dumps are constant within a noisy class") {
  Json j = small_config();
  j["smoothing"] = {{"kind", "ls"}, {"alpha", 0.2}};
  const fs::path out = scratch("ls_dump");
  run_noise_dump(j, std::nullopt, out);
  const auto records = read_noise_csv(out / "noise.csv");
  REQUIRE(!records.empty());
  for (const auto& r : records) {
    Eigen::VectorXd want = Eigen::VectorXd::Constant(3, 0.2 / 3);
    want[r.noisy_class] -= 0.2;
    CHECK((r.epsilon - want).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("compare") {
  Json j = small_config();
  j["smoothing"] = {{"kind", "ls"}, {"alpha", 0.1}};
  j["dataset"]["seed"] = 11;
  const fs::path a = scratch("cmp_a"), b = scratch("cmp_b"), o = scratch("cmp_out");
  run_noise_dump(j, 1, a);
  run_noise_dump(j, 2, b);
  auto stats = run_compare({a, a}, std::nullopt, false, o);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].mean_kl == 0.0);
  CHECK(stats[0].mean_cosine == doctest::Approx(1.0));
  stats = run_compare({a, b}, std::nullopt, false, o);
  CHECK(stats[0].mean_kl <= 1e-15);
  CHECK(fs::exists(o / "compare.svg"));

  Json k = j;
  k["dataset"]["per_class"] = 20;
  const fs::path c = scratch("cmp_c");
  run_noise_dump(k, 1, c);
  try {
    run_compare({a, c}, std::nullopt, false, o);
    FAIL("expected an id mismatch");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("ids") != std::string::npos);
  }
}

TEST_CASE("corrupt writes the transition sidecar") {
  Json j = small_config();
  j["dataset"]["classes"] = 4;
  j["dataset"]["per_class"] = 500;
  j["corruption"] = {{"kind", "pairflip"}, {"rate", 0.2}};
  const fs::path out = scratch("corrupt");
  run_corrupt(j, std::nullopt, out);
  Json side = Json::parse(slurp(out / "corruption.json"));
  CHECK(side["transition"][0][0] == 0.8);
  CHECK(side["transition"][0][1] == 0.2);
  CHECK(side["transition"][3][0] == 0.2);
  CHECK(side["transition"][1][3] == 0.0);
  CHECK(side["empirical_transition"][1][3] == 0.0);
  CHECK(side["flipped"].get<long>() > 300);

  j["corruption"] = {{"kind", "datadep"}, {"kappa", 0.1}, {"beta", 0.05}};
  run_corrupt(j, std::nullopt, out);
  side = Json::parse(slurp(out / "corruption.json"));
  CHECK(side["transition"][0][0].get<double>() == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(side["transition"][1][1].get<double>() == doctest::Approx(0.80).epsilon(1e-15));
  CHECK(slurp(out / "noisy.csv").rfind("# varls ", 0) == 0);
}

TEST_CASE("fig2 command") {
  const fs::path out = scratch("fig2");
  Fig2Options opt;
  const Fig2Result r = run_fig2(opt, out);
  CHECK(r.passed());
  CHECK(r.peak_location == doctest::Approx(1.55));
  CHECK(fs::exists(out / "fig2.svg"));
  opt.variance = 0.0;
  const Fig2Result flat = compute_fig2(opt);
  CHECK(flat.passed());
  for (double e : flat.eps) CHECK(e == 0.0);
}

TEST_CASE("binary exit codes") {
  const fs::path dir = scratch("bin");
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("train --no-such-flag") == 2);
  std::ofstream(dir / "bad.json") << R"({"optimizer": {"lr": -1}})";
  CHECK(run_binary("train --config " + (dir / "bad.json").string() + " --out " + dir.string()) == 2);
  std::ofstream(dir / "missing.json") << R"({"dataset": {"kind": "idx", "images": "/nonexistent/a.idx",
      "labels": "/nonexistent/b.idx"}})";
  CHECK(run_binary("train --config " + (dir / "missing.json").string() + " --out " + dir.string()) == 3);
  CHECK(run_binary("fig2 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "fig2.csv"));
}
