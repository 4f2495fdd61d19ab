#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iterator>
#include <string>

#include "varls/data.hpp"
#include "varls/error.hpp"

using namespace varls;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "varls_test_data";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

IdxImages synthetic_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols) {
  IdxImages img;
  img.rows = rows;
  img.cols = cols;
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) img.pixels.push_back(static_cast<std::uint8_t>((i * 37) % 256));
  return img;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("IDX files round-trip byte for byte") {
  const fs::path images = scratch("img.idx"), labels = scratch("lab.idx");
  write_idx_images(images, synthetic_images(12, 4, 3));
  write_idx_labels(labels, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1});
  const auto raw = file_bytes(images);
  CHECK(raw[2] == 0x08);
  CHECK(raw[3] == 0x03);  // 2051 big-endian

  const IdxImages back = read_idx_images(images);
  CHECK(back.count() == 12);
  write_idx_images(scratch("img2.idx"), back);
  CHECK(file_bytes(scratch("img2.idx")) == raw);
  write_idx_labels(scratch("lab2.idx"), read_idx_labels(labels));
  CHECK(file_bytes(scratch("lab2.idx")) == file_bytes(labels));

  const LabeledDataset ds = parse_idx(images, labels);
  CHECK(ds.size() == 12);
  CHECK(ds.dim() == 12);
  CHECK(ds.classes == 10);
  CHECK(ds.features(0, 1) == doctest::Approx(37.0 / 255.0));
  CHECK(ds.labels[9] == 9);
  CHECK(parse_idx(images, labels, 5).size() == 5);
}

TEST_CASE("IDX errors name offsets and lengths") {
  const fs::path images = scratch("t_img.idx"), labels = scratch("t_lab.idx");
  write_idx_images(images, synthetic_images(3, 2, 2));
  auto bytes = file_bytes(images);
  bytes.resize(bytes.size() - 2);
  put_bytes(images, bytes);
  const std::string truncated = message_of([&] { read_idx_images(images); });
  CHECK(truncated.find("expected 28") != std::string::npos);
  CHECK(truncated.find("found 26") != std::string::npos);

  put_bytes(images, {0, 0, 8, 1, 0, 0, 0, 0});
  CHECK(message_of([&] { read_idx_images(images); }).find("bad magic") != std::string::npos);
  put_bytes(images, {0, 0, 8});
  CHECK(message_of([&] { read_idx_images(images); }).find("offset 0") != std::string::npos);

  write_idx_images(images, synthetic_images(3, 2, 2));
  write_idx_labels(labels, {1, 17, 2});
  const std::string range = message_of([&] { parse_idx(images, labels); });
  CHECK(range.find("17") != std::string::npos);
  CHECK_THROWS_AS(parse_idx(images, labels), FormatError);

  write_idx_labels(labels, {1, 2});
  CHECK(message_of([&] { parse_idx(images, labels); }).find("does not match") != std::string::npos);
  CHECK_THROWS_AS(read_idx_images(scratch("missing.idx")), FormatError);
}

TEST_CASE("blobs") {
  const Eigen::MatrixXd centers = random_centers(4, 3, 2.0, Stream(1, "centers"));
  CHECK(centers.rowwise().norm().isApproxToConstant(2.0, 1e-12));
  SUBCASE("zero scale puts every point on its centre") {
    const LabeledDataset ds = gaussian_blobs(centers, 5, 0.0, Stream(2, "b"));
    CHECK(ds.size() == 20);
    for (Eigen::Index i = 0; i < ds.size(); ++i) CHECK(ds.features.row(i) == centers.row(ds.labels[i]));
  }
  SUBCASE("same stream, same data") {
    CHECK(gaussian_blobs(centers, 5, 1.0, Stream(3, "b")).features ==
          gaussian_blobs(centers, 5, 1.0, Stream(3, "b")).features);
  }
  SUBCASE("two-class Bayes accuracy matches the Gaussian CDF") {
    const double mu = 0.8;
    Eigen::MatrixXd c(2, 2);
    c << -mu, 0.0, mu, 0.0;
    const int per = 50000;
    const LabeledDataset ds = gaussian_blobs(c, per, 1.0, Stream(4, "b"));
    long correct = 0;
    for (Eigen::Index i = 0; i < ds.size(); ++i) correct += (ds.features(i, 0) > 0.0) == (ds.labels[i] == 1);
    const double acc = static_cast<double>(correct) / ds.size();
    const double bayes = 0.5 * std::erfc(-mu / std::sqrt(2.0));
    CHECK(std::abs(acc - bayes) <= 4.0 * std::sqrt(bayes * (1 - bayes) / ds.size()));
  }
}

TEST_CASE("splits, standardisation and CSV") {
  const Eigen::MatrixXd centers = random_centers(3, 4, 3.0, Stream(5, "centers"));
  LabeledDataset ds = gaussian_blobs(centers, 40, 1.5, Stream(6, "b"));
  ds.features.col(2).array() += 10.0;

  const auto [all, none] = split(ds, 1.0, Stream(7, "s"));
  CHECK(all.size() == ds.size());
  CHECK(none.size() == 0);
  const auto [tr, te] = split(ds, 0.75, Stream(7, "s"));
  CHECK(tr.size() == 90);
  CHECK(te.size() == 30);
  CHECK(te.split == Split::Test);
  const auto [tr2, te2] = split(ds, 0.75, Stream(7, "s"));
  CHECK(tr.labels == tr2.labels);

  const Standardizer z = Standardizer::fit(tr);
  const LabeledDataset ztr = z.apply(tr);
  const Eigen::RowVectorXd mean = ztr.features.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() <= 1e-9);
  const Eigen::RowVectorXd sd = ((ztr.features.rowwise() - mean).colwise().squaredNorm() / ztr.size()).cwiseSqrt();
  CHECK((sd.array() - 1.0).abs().maxCoeff() <= 1e-9);
  const LabeledDataset zte = z.apply(te);
  CHECK(zte.features(0, 2) == doctest::Approx((te.features(0, 2) - z.mean[2]) / z.scale[2]));

  LabeledDataset noisy = ds;
  noisy.clean_labels = noisy.labels;
  noisy.labels[0] = (noisy.labels[0] + 1) % 3;
  const fs::path path = scratch("ds.csv");
  export_csv(noisy, path, "# comment line\n");
  const LabeledDataset back = import_csv(path, 3);
  CHECK(back.labels == noisy.labels);
  REQUIRE(back.clean_labels);
  CHECK(*back.clean_labels == *noisy.clean_labels);
  CHECK((back.features - noisy.features).cwiseAbs().maxCoeff() <= 1e-9);
  export_csv(ds, path);
  CHECK(!import_csv(path, 3).clean_labels);
}

TEST_CASE("problems carry family targets") {
  LabeledDataset ds;
  ds.classes = 3;
  ds.features = Eigen::MatrixXd::Identity(3, 2);
  ds.labels = {2, 0, 1};
  const Problem p = make_problem(ds, Family::categorical(3));
  CHECK(p.targets.row(0) == Eigen::RowVector3d(0, 0, 1));
  ds.labels[1] = 5;
  CHECK_THROWS(ds.validate());
}
