#include "varls/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "varls/error.hpp"

namespace varls {

namespace {

constexpr std::uint32_t kImagesMagic = 2051;
constexpr std::uint32_t kLabelsMagic = 2049;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t offset, const std::filesystem::path& path) {
  if (b.size() < offset + 4) {
    throw FormatError(path.string() + ": truncated header at byte offset " + std::to_string(offset) +
                      " (file has " + std::to_string(b.size()) + " bytes)");
  }
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    throw FormatError(path.string() + ": bad magic " + std::to_string(got) + " at byte offset 0, expected " +
                      std::to_string(want));
  }
}

void check_length(std::size_t have, std::size_t want, const std::filesystem::path& path) {
  if (have != want) {
    throw FormatError(path.string() + ": expected " + std::to_string(want) + " bytes from the header, found " +
                      std::to_string(have));
  }
}

}  // namespace

int LabeledDataset::true_label(Eigen::Index i) const {
  return clean_labels ? (*clean_labels)[static_cast<std::size_t>(i)] : labels[static_cast<std::size_t>(i)];
}

void LabeledDataset::validate() const {
  if (classes < 2) throw InvalidInput("dataset needs at least two classes");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw ShapeError("label count does not match the number of feature rows");
  }
  if (!features.allFinite()) throw InvalidInput("features must be finite");
  auto check = [&](const std::vector<int>& ls) {
    for (std::size_t i = 0; i < ls.size(); ++i) {
      if (ls[i] < 0 || ls[i] >= classes) {
        throw InvalidInput("label " + std::to_string(ls[i]) + " at index " + std::to_string(i) + " outside [0, " +
                           std::to_string(classes) + ")");
      }
    }
  };
  check(labels);
  if (clean_labels) {
    if (clean_labels->size() != labels.size()) throw ShapeError("clean label count does not match");
    check(*clean_labels);
  }
}

IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto b = read_bytes(path);
  check_magic(be32(b, 0, path), kImagesMagic, path);
  const std::uint32_t count = be32(b, 4, path);
  IdxImages img;
  img.rows = be32(b, 8, path);
  img.cols = be32(b, 12, path);
  const std::size_t payload = std::size_t{count} * img.rows * img.cols;
  check_length(b.size(), 16 + payload, path);
  img.pixels.assign(b.begin() + 16, b.end());
  if (count > 0 && img.count() != count) throw FormatError(path.string() + ": zero-sized images");
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto b = read_bytes(path);
  check_magic(be32(b, 0, path), kLabelsMagic, path);
  const std::uint32_t count = be32(b, 4, path);
  check_length(b.size(), 8 + std::size_t{count}, path);
  return {b.begin() + 8, b.end()};
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  std::vector<std::uint8_t> b;
  b.reserve(16 + images.pixels.size());
  put_be32(b, kImagesMagic);
  put_be32(b, images.count());
  put_be32(b, images.rows);
  put_be32(b, images.cols);
  b.insert(b.end(), images.pixels.begin(), images.pixels.end());
  write_bytes(path, b);
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> b;
  b.reserve(8 + labels.size());
  put_be32(b, kLabelsMagic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  write_bytes(path, b);
}

LabeledDataset parse_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                         std::size_t limit) {
  const IdxImages img = read_idx_images(images);
  const auto lab = read_idx_labels(labels);
  if (img.count() != lab.size()) {
    throw FormatError("image count " + std::to_string(img.count()) + " in " + images.string() +
                      " does not match label count " + std::to_string(lab.size()) + " in " + labels.string());
  }
  std::size_t n = lab.size();
  if (limit > 0) n = std::min(n, limit);
  const std::size_t d = std::size_t{img.rows} * img.cols;
  LabeledDataset ds;
  ds.classes = 10;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (lab[i] >= 10) {
      throw FormatError(labels.string() + ": label " + std::to_string(lab[i]) + " at byte offset " +
                        std::to_string(8 + i) + " is outside [0, 10)");
    }
    ds.labels[i] = lab[i];
    for (std::size_t j = 0; j < d; ++j) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = img.pixels[i * d + j] / 255.0;
    }
  }
  ds.provenance.source = "idx:" + images.string();
  return ds;
}

Eigen::MatrixXd random_centers(int classes, int dim, double radius, Stream stream) {
  Eigen::MatrixXd c(classes, dim);
  for (int k = 0; k < classes; ++k) {
    for (int j = 0; j < dim; ++j) c(k, j) = stream.normal();
    c.row(k) *= radius / c.row(k).norm();
  }
  return c;
}

LabeledDataset gaussian_blobs(const Eigen::MatrixXd& centers, int per_class, double scale, Stream stream,
                              Split split) {
  if (centers.rows() < 2) throw InvalidInput("blobs need at least two centers");
  if (per_class < 0 || !(scale >= 0.0)) throw InvalidInput("blob size and scale must be non-negative");
  for (Eigen::Index a = 0; a < centers.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < centers.rows(); ++b) {
      if ((centers.row(a) - centers.row(b)).norm() == 0.0) throw InvalidInput("blob centers must be distinct");
    }
  }
  const Eigen::Index k = centers.rows(), d = centers.cols();
  LabeledDataset ds;
  ds.classes = static_cast<int>(k);
  ds.split = split;
  ds.features.resize(k * per_class, d);
  ds.labels.resize(static_cast<std::size_t>(k * per_class));
  Eigen::Index row = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      for (Eigen::Index j = 0; j < d; ++j) ds.features(row, j) = centers(c, j) + scale * stream.normal();
      ds.labels[static_cast<std::size_t>(row)] = static_cast<int>(c);
    }
  }
  ds.provenance.source = "blobs";
  return ds;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double train_fraction,
                                                Stream stream) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw InvalidInput("train fraction must lie in [0, 1]");
  const std::size_t n = static_cast<std::size_t>(data.size());
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[stream.below(i)]);
  const std::size_t n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));

  auto take = [&](std::size_t begin, std::size_t end, Split tag) {
    LabeledDataset out;
    out.classes = data.classes;
    out.split = tag;
    out.provenance = data.provenance;
    out.features.resize(static_cast<Eigen::Index>(end - begin), data.features.cols());
    if (data.clean_labels) out.clean_labels.emplace();
    for (std::size_t r = begin; r < end; ++r) {
      out.features.row(static_cast<Eigen::Index>(r - begin)) = data.features.row(static_cast<Eigen::Index>(perm[r]));
      out.labels.push_back(data.labels[perm[r]]);
      if (data.clean_labels) out.clean_labels->push_back((*data.clean_labels)[perm[r]]);
    }
    return out;
  };
  return {take(0, n_train, Split::Train), take(n_train, n, Split::Test)};
}

Standardizer Standardizer::fit(const LabeledDataset& train) {
  Standardizer s;
  const double n = static_cast<double>(train.size());
  if (n == 0) throw InvalidInput("cannot fit normalisation on an empty dataset");
  s.mean = train.features.colwise().mean();
  const Eigen::MatrixXd centred = train.features.rowwise() - s.mean;
  s.scale = (centred.colwise().squaredNorm() / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (s.scale[j] == 0.0) s.scale[j] = 1.0;
  }
  return s;
}

LabeledDataset Standardizer::apply(LabeledDataset data) const {
  if (data.features.cols() != mean.size()) throw ShapeError("normaliser fitted on a different feature width");
  data.features = ((data.features.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  return data;
}

void export_csv(const LabeledDataset& data, const std::filesystem::path& path, const std::string& preamble) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << preamble << "label,clean_label";
  for (int j = 0; j < data.dim(); ++j) out << ",x" << j;
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << data.labels[static_cast<std::size_t>(i)] << ','
        << (data.clean_labels ? (*data.clean_labels)[static_cast<std::size_t>(i)] : -1);
    for (int j = 0; j < data.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.features(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

LabeledDataset import_csv(const std::filesystem::path& path, int classes, Split split_tag) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  do {
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header row");
    ++line_no;
  } while (!line.empty() && line[0] == '#');
  const auto width = std::count(line.begin(), line.end(), ',') + 1;
  if (width < 2) throw FormatError(path.string() + ": header needs label and clean_label columns");
  std::vector<std::vector<double>> rows;
  std::vector<int> labels, clean;
  bool any_clean = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    if (static_cast<long>(vals.size()) != width) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " columns, found " + std::to_string(vals.size()));
    }
    labels.push_back(static_cast<int>(vals[0]));
    clean.push_back(static_cast<int>(vals[1]));
    any_clean = any_clean || vals[1] >= 0;
    rows.emplace_back(vals.begin() + 2, vals.end());
  }
  LabeledDataset ds;
  ds.classes = classes;
  ds.split = split_tag;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), width - 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  ds.labels = std::move(labels);
  if (any_clean) ds.clean_labels = std::move(clean);
  ds.provenance.source = "csv:" + path.string();
  ds.validate();
  return ds;
}

Problem make_problem(const LabeledDataset& data, const Family& family) {
  Problem p;
  p.inputs = data.features;
  p.targets.resize(data.size(), family.outputs());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    p.targets.row(i) = hard_target(family, data.labels[static_cast<std::size_t>(i)]).transpose();
  }
  return p;
}

}  // namespace varls
