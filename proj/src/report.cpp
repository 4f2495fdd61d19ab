#include "varls/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "varls/error.hpp"

namespace varls {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& s, const std::filesystem::path& path, long line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": bad number \"" + s + "\"");
  }
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Frame {
  double x0, x1, y0, y1;
  bool log_x, log_y;
  static constexpr double left = 70, right = 620, top = 40, bottom = 350;

  double px(double v) const {
    const double t = log_x ? std::log10(v) : v;
    return left + (x1 > x0 ? (t - x0) / (x1 - x0) : 0.5) * (right - left);
  }
  double py(double v) const {
    const double t = log_y ? std::log10(v) : v;
    return bottom - (y1 > y0 ? (t - y0) / (y1 - y0) : 0.5) * (bottom - top);
  }
};

bool usable(double v, bool log_axis) { return std::isfinite(v) && (!log_axis || v > 0.0); }

Frame make_frame(const PlotOptions& o, const std::vector<Series>& series) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), o.log_x, o.log_y};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], o.log_x) || !usable(s.y[i], o.log_y)) continue;
      const double x = o.log_x ? std::log10(s.x[i]) : s.x[i];
      const double y = o.log_y ? std::log10(s.y[i]) : s.y[i];
      f.x0 = std::min(f.x0, x);
      f.x1 = std::max(f.x1, x);
      f.y0 = std::min(f.y0, y);
      f.y1 = std::max(f.y1, y);
    }
  }
  if (!(f.x0 <= f.x1)) f.x0 = 0, f.x1 = 1;
  if (!(f.y0 <= f.y1)) f.y0 = 0, f.y1 = 1;
  if (f.y0 == f.y1) f.y0 -= 1, f.y1 += 1;
  if (f.x0 == f.x1) f.x0 -= 1, f.x1 += 1;
  return f;
}

void write_chart(const std::filesystem::path& path, const PlotOptions& o, const std::vector<Series>& series,
                 bool lines) {
  const Frame f = make_frame(o, series);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\" width=\"640\" height=\"400\">\n";
  svg << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg << "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(o.title) << "</text>\n";
  svg << "<line x1=\"" << Frame::left << "\" y1=\"" << Frame::bottom << "\" x2=\"" << Frame::right << "\" y2=\""
      << Frame::bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << Frame::left << "\" y1=\"" << Frame::top << "\" x2=\"" << Frame::left << "\" y2=\""
      << Frame::bottom << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
    const double xp = Frame::left + (Frame::right - Frame::left) * t / 4.0;
    const double yp = Frame::bottom - (Frame::bottom - Frame::top) * t / 4.0;
    char xl[32], yl[32];
    std::snprintf(xl, sizeof xl, o.log_x ? "1e%.1f" : "%.3g", xv);
    std::snprintf(yl, sizeof yl, o.log_y ? "1e%.1f" : "%.3g", yv);
    svg << "<text x=\"" << fixed(xp) << "\" y=\"366\" text-anchor=\"middle\" font-size=\"10\">" << xl << "</text>\n";
    svg << "<text x=\"64\" y=\"" << fixed(yp + 3) << "\" text-anchor=\"end\" font-size=\"10\">" << yl << "</text>\n";
  }
  svg << "<text x=\"345\" y=\"390\" text-anchor=\"middle\" font-size=\"12\">" << escape(o.x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"195\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 195)\">"
      << escape(o.y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % (sizeof kPalette / sizeof kPalette[0])];
    if (lines) {
      svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!usable(s.x[i], o.log_x) || !usable(s.y[i], o.log_y)) continue;
        svg << fixed(f.px(s.x[i])) << "," << fixed(f.py(s.y[i])) << " ";
      }
      svg << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!usable(s.x[i], o.log_x) || !usable(s.y[i], o.log_y)) continue;
        svg << "<circle cx=\"" << fixed(f.px(s.x[i])) << "\" cy=\"" << fixed(f.py(s.y[i])) << "\" r=\"2\" fill=\""
            << colour << "\" fill-opacity=\"0.6\"/>\n";
      }
    }
    svg << "<text x=\"" << Frame::right - 4 << "\" y=\"" << 50 + 14 * k << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
        << colour << "\">" << escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  write_text(path, svg.str());
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_preamble(const std::string& command, std::uint64_t seed, const std::string& config_json) {
  return "# varls " + std::string(kVersion) + " command=" + command + " seed=" + std::to_string(seed) +
         " config=" + config_json + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw FormatError(path.string() + ": write failed");
}

void write_metrics_csv(const std::filesystem::path& path, const std::string& preamble,
                       const std::vector<EpochMetrics>& metrics) {
  std::ostringstream csv;
  csv << preamble << "epoch,train_loss,test_acc,lr\n";
  for (const auto& m : metrics) {
    csv << m.epoch << ',' << format_number(m.train_loss) << ',' << format_number(m.test_acc) << ','
        << format_number(m.lr) << '\n';
  }
  write_text(path, csv.str());
}

void write_noise_csv(const std::filesystem::path& path, const std::string& preamble,
                     const std::vector<NoiseSnapshot>& snapshots) {
  Eigen::Index eps_width = 0;
  Eigen::Index link_width = 0;
  for (const auto& s : snapshots) {
    if (!s.records.empty()) {
      eps_width = s.records.front().epsilon.size();
      link_width = s.records.front().link.size();
      break;
    }
  }
  std::ostringstream csv;
  csv << preamble << "id,epoch,true_class,noisy_class";
  for (Eigen::Index k = 0; k < eps_width; ++k) csv << ",eps_" << k;
  csv << ",eps_norm,pred_var,feature_norm";
  for (Eigen::Index k = 0; k < link_width; ++k) csv << ",link_" << k;
  csv << '\n';
  for (const auto& s : snapshots) {
    for (const auto& r : s.records) {
      csv << r.id << ',' << r.epoch << ',' << r.true_class << ',' << r.noisy_class;
      for (Eigen::Index k = 0; k < r.epsilon.size(); ++k) csv << ',' << format_number(r.epsilon[k]);
      csv << ',' << format_number(r.epsilon_norm) << ',' << format_number(r.predictive_variance) << ','
          << format_number(r.feature_norm);
      for (Eigen::Index k = 0; k < r.link.size(); ++k) csv << ',' << format_number(r.link[k]);
      csv << '\n';
    }
  }
  write_text(path, csv.str());
}

std::vector<LabelNoiseRecord> read_noise_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open noise dump");
  std::string line;
  long line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.size() < 7 || header[0] != "id") throw FormatError(path.string() + ": missing noise dump header");
  std::size_t eps_width = 0;
  std::size_t link_width = 0;
  for (const auto& h : header) {
    if (h.rfind("eps_", 0) == 0 && h != "eps_norm") ++eps_width;
    if (h.rfind("link_", 0) == 0) ++link_width;
  }
  const std::size_t expected = 4 + eps_width + 3 + link_width;
  if (header.size() != expected) throw FormatError(path.string() + ": unexpected noise dump columns");
  std::vector<LabelNoiseRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    if (cells.size() != expected) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                        " fields, found " + std::to_string(cells.size()));
    }
    LabelNoiseRecord r;
    r.id = static_cast<long>(parse_double(cells[0], path, line_no));
    r.epoch = static_cast<int>(parse_double(cells[1], path, line_no));
    r.true_class = static_cast<int>(parse_double(cells[2], path, line_no));
    r.noisy_class = static_cast<int>(parse_double(cells[3], path, line_no));
    r.epsilon.resize(static_cast<Eigen::Index>(eps_width));
    for (std::size_t k = 0; k < eps_width; ++k) r.epsilon[static_cast<Eigen::Index>(k)] = parse_double(cells[4 + k], path, line_no);
    r.epsilon_norm = parse_double(cells[4 + eps_width], path, line_no);
    r.predictive_variance = parse_double(cells[5 + eps_width], path, line_no);
    r.feature_norm = parse_double(cells[6 + eps_width], path, line_no);
    r.link.resize(static_cast<Eigen::Index>(link_width));
    for (std::size_t k = 0; k < link_width; ++k) {
      r.link[static_cast<Eigen::Index>(k)] = parse_double(cells[7 + eps_width + k], path, line_no);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_ranking_csv(const std::filesystem::path& path, const std::string& preamble,
                       const std::vector<NoiseSnapshot>& snapshots, int top_k) {
  std::ostringstream csv;
  csv << preamble << "rank,group,id,epoch,eps_norm\n";
  for (const auto& s : snapshots) {
    const auto sorted = sort_by_noise(s.records);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(top_k, 0)), sorted.size());
    for (std::size_t i = 0; i < k; ++i) {
      csv << i + 1 << ",top," << sorted[i].id << ',' << s.epoch << ',' << format_number(sorted[i].epsilon_norm) << '\n';
    }
    for (std::size_t i = 0; i < k; ++i) {
      const auto& r = sorted[sorted.size() - 1 - i];
      csv << i + 1 << ",bottom," << r.id << ',' << s.epoch << ',' << format_number(r.epsilon_norm) << '\n';
    }
  }
  write_text(path, csv.str());
}

void write_svg_lines(const std::filesystem::path& path, const PlotOptions& options, const std::vector<Series>& series) {
  write_chart(path, options, series, true);
}

void write_svg_scatter(const std::filesystem::path& path, const PlotOptions& options,
                       const std::vector<Series>& series) {
  write_chart(path, options, series, false);
}

}  // namespace varls
