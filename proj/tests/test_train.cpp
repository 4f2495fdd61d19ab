#include <doctest.h>

#include <cmath>

#include "varls/data.hpp"
#include "varls/error.hpp"
#include "varls/train.hpp"

using namespace varls;

namespace {

struct Blobs {
  LabeledDataset train, test;
};

Blobs make_blobs(int classes, int dim, double radius, double scale, std::uint64_t seed) {
  const Eigen::MatrixXd centers = random_centers(classes, dim, radius, Stream(seed, "centers"));
  return {gaussian_blobs(centers, 40, scale, Stream(seed, "train")),
          gaussian_blobs(centers, 40, scale, Stream(seed, "test"), Split::Test)};
}

TrainSpec linear_spec(int dim, int classes) {
  TrainSpec spec;
  spec.model = LinearModel{dim, classes, true};
  spec.family = Family::categorical(classes);
  spec.optimizer.schedule.lr = 0.05;
  spec.epochs = 5;
  spec.batch_size = 16;
  return spec;
}

}  // namespace

TEST_CASE("schedules") {
  Schedule s;
  s.lr = 0.2;
  CHECK(s.at(0, 10) == 0.2);
  CHECK(s.at(9, 10) == 0.2);

  s.kind = ScheduleKind::Step;
  s.milestones = {3, 6};
  s.gamma = 0.5;
  CHECK(s.at(2, 10) == 0.2);
  CHECK(s.at(3, 10) == doctest::Approx(0.1));
  CHECK(s.at(7, 10) == doctest::Approx(0.05));

  s.kind = ScheduleKind::Cosine;
  s.warmup = 2;
  CHECK(s.at(0, 10) == doctest::Approx(0.1));
  CHECK(s.at(1, 10) == doctest::Approx(0.2));
  CHECK(s.at(2, 10) == doctest::Approx(0.2));
  CHECK(s.at(6, 10) == doctest::Approx(0.1));
  for (int e = 3; e < 10; ++e) CHECK(s.at(e, 10) <= s.at(e - 1, 10));

  s.lr = -1.0;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
}

TEST_CASE("zero epochs returns the initial state with no metrics") {
  const Blobs b = make_blobs(3, 4, 3.0, 1.0, 1);
  TrainSpec spec = linear_spec(4, 3);
  spec.epochs = 0;
  const TrainResult r = train(spec, b.train, b.test, Stream(1, "t"));
  CHECK(r.metrics.empty());
  CHECK(r.theta == init_parameters(spec.model, Stream(1, "t").child("init")));
}

TEST_CASE("training is deterministic for every optimizer") {
  const Blobs b = make_blobs(3, 4, 3.0, 1.0, 2);
  for (OptimizerKind kind : {OptimizerKind::Gd, OptimizerKind::Sam, OptimizerKind::Ivon}) {
    TrainSpec spec = linear_spec(4, 3);
    spec.optimizer.kind = kind;
    spec.probe_epochs = {0, 5};
    spec.noise_samples = 4;
    const TrainResult a = train(spec, b.train, b.test, Stream(3, "t"));
    const TrainResult c = train(spec, b.train, b.test, Stream(3, "t"));
    CHECK(a.theta == c.theta);
    REQUIRE(a.metrics.size() == 5);
    CHECK(a.metrics.back().test_acc == c.metrics.back().test_acc);
    REQUIRE(a.snapshots.size() == 2);
    CHECK(a.snapshots[1].records[7].epsilon == c.snapshots[1].records[7].epsilon);
    const TrainResult other = train(spec, b.train, b.test, Stream(4, "t"));
    CHECK(other.theta != a.theta);
  }
}

TEST_CASE("GD separates well separated blobs") {
  const Blobs b = make_blobs(4, 5, 8.0, 0.3, 5);
  // separability: every point is closer to its own centroid by a wide margin
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(4, 5);
  for (Eigen::Index i = 0; i < b.train.size(); ++i) centroids.row(b.train.labels[i]) += b.train.features.row(i) / 40.0;
  for (Eigen::Index i = 0; i < b.train.size(); ++i) {
    const int y = b.train.labels[i];
    const double own = (b.train.features.row(i) - centroids.row(y)).norm();
    for (int c = 0; c < 4; ++c) {
      if (c != y) REQUIRE((b.train.features.row(i) - centroids.row(c)).norm() > own + 1.0);
    }
  }
  TrainSpec spec = linear_spec(5, 4);
  spec.epochs = 200;
  spec.batch_size = 0;
  spec.optimizer.weight_decay = 0.0;
  const TrainResult r = train(spec, b.train, b.test, Stream(6, "t"));
  CHECK(accuracy(spec.model, r.theta, b.train.features, b.train.labels, spec.family) == 1.0);
  CHECK(r.metrics.back().train_loss < r.metrics.front().train_loss);
}

TEST_CASE("variational optimizers carry a posterior") {
  const Blobs b = make_blobs(2, 3, 2.0, 1.0, 7);
  TrainSpec spec;
  spec.model = LinearModel{3, 1, true};
  spec.family = Family::bernoulli();
  spec.epochs = 3;
  spec.optimizer.schedule.lr = 0.5;
  spec.probe_epochs = {3};
  for (OptimizerKind kind : {OptimizerKind::Von, OptimizerKind::Ivon}) {
    spec.optimizer.kind = kind;
    const TrainResult r = train(spec, b.train, b.test, Stream(8, "t"));
    REQUIRE(r.posterior);
    CHECK(r.posterior->mean() == r.theta);
    CHECK(r.snapshots.at(0).records.size() == static_cast<std::size_t>(b.train.size()));
  }
  spec.optimizer.kind = OptimizerKind::Newton;
  spec.model = MlpModel{{3, 4, 1}};
  CHECK_THROWS(train(spec, b.train, b.test, Stream(8, "t")));
}

TEST_CASE("OLS and LS runs differ from plain training") {
  const Blobs b = make_blobs(3, 4, 2.0, 1.5, 9);
  TrainSpec spec = linear_spec(4, 3);
  const TrainResult plain = train(spec, b.train, b.test, Stream(10, "t"));
  spec.smoothing = {SmoothingKind::Ls, 0.3, false};
  const TrainResult ls = train(spec, b.train, b.test, Stream(10, "t"));
  spec.smoothing = {SmoothingKind::Ols, 0.3, false};
  const TrainResult ols = train(spec, b.train, b.test, Stream(10, "t"));
  CHECK(plain.theta != ls.theta);
  CHECK(ols.theta != ls.theta);
}
