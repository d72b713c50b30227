#include "reds/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace reds {

std::string format_double(double v) {
  std::array<char, 40> buffer{};
  std::snprintf(buffer.data(), buffer.size(), "%.17g", v);
  return buffer.data();
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::Io, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

void append_array(std::string& out, const auto& values) {
  out.push_back('[');
  bool first = true;
  for (double v : values) {
    if (!first) out.push_back(',');
    out += format_double(v);
    first = false;
  }
  out.push_back(']');
}

void append_vector(std::string& out, const Vector& v) {
  append_array(out, std::vector<double>(v.data(), v.data() + v.size()));
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string method_label(const Trajectory& t) {
  if (t.selector == Selector::Reds) return t.method == Method::Projection ? "reds-proj" : "reds-lin";
  return to_string(t.selector);
}

}  // namespace

std::string trajectory_json_line(const Trajectory& t, const std::vector<std::string>& fixed_names) {
  std::string out = "{";
  out += "\"seed_index\":" + std::to_string(t.seed_index);
  out += ",\"path_index\":" + std::to_string(t.path_index);
  out += ",\"selector\":" + quoted(to_string(t.selector));
  out += ",\"method\":" + quoted(to_string(t.method));
  out += ",\"label\":" + quoted(method_label(t));
  out += ",\"status\":" + quoted(to_string(t.status));
  out += ",\"steps_taken\":" + std::to_string(t.steps_taken);
  out += ",\"resamples\":" + std::to_string(t.resamples);
  out += ",\"note\":" + quoted(t.note);
  out += ",\"seed_direction\":";
  append_vector(out, t.seed_direction);
  out += ",\"points\":[";
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    if (i) out.push_back(',');
    append_vector(out, t.points[i]);
  }
  out += "]";
  auto per_feature = [&](const char* key, auto member) {
    out += ",\"" + std::string(key) + "\":{";
    for (std::size_t j = 0; j < fixed_names.size(); ++j) {
      if (j) out.push_back(',');
      std::vector<double> values;
      for (const auto& r : t.records) values.push_back((r.*member)[j]);
      out += quoted(fixed_names[j]) + ":";
      append_array(out, values);
    }
    out += "}";
  };
  per_feature("sq_dy", &StepRecord::sq_dy);
  per_feature("cos_dy", &StepRecord::cos_dy);
  std::vector<double> dx, consecutive;
  for (const auto& r : t.records) {
    dx.push_back(r.sq_dx);
    consecutive.push_back(r.consecutive_dx);
  }
  out += ",\"sq_dx\":";
  append_array(out, dx);
  out += ",\"consecutive_dx\":";
  append_array(out, consecutive);
  out += "}";
  return out;
}

std::string summary_csv(const std::vector<std::pair<std::string, std::vector<StepAggregate>>>& methods,
                        const std::vector<std::string>& fixed_names) {
  std::string out = "method,step";
  for (const auto& n : fixed_names) out += ",mean_sq_dy_" + n;
  out += ",mean_sq_dx,count\n";
  for (const auto& [name, aggregates] : methods) {
    for (const auto& a : aggregates) {
      out += name + "," + std::to_string(a.step);
      for (double v : a.mean_sq_dy) out += "," + format_double(v);
      out += "," + format_double(a.mean_sq_dx) + "," + std::to_string(a.count) + "\n";
    }
  }
  return out;
}

std::string comparison_csv(const ComparisonReport& report, const std::vector<std::string>& fixed_names) {
  std::string out = "method,step";
  for (const auto& n : fixed_names) out += ",mean_sq_dy_" + n;
  out += ",mean_sq_dx,log10_mean_sq_dy_total,log10_mean_sq_dx,mean_log10_sq_dy_total,mean_log10_sq_dx,count\n";
  for (const auto& run : report.runs) {
    for (const auto& a : run.aggregates) {
      double mean_log_total = 0.0;
      for (double v : a.mean_log10_sq_dy) mean_log_total += v;
      const double total = a.total_mean_sq_dy();
      out += run.method.name + "," + std::to_string(a.step);
      for (double v : a.mean_sq_dy) out += "," + format_double(v);
      out += "," + format_double(a.mean_sq_dx);
      out += "," + format_double(std::log10(std::max(total, kLogFloor)));
      out += "," + format_double(a.log10_mean_sq_dx);
      out += "," + format_double(mean_log_total);
      out += "," + format_double(a.mean_log10_sq_dx);
      out += "," + std::to_string(a.count) + "\n";
    }
  }
  return out;
}

std::string dominance_csv(const ComparisonReport& report) {
  std::string out = "a,b,step,delta_log10_dy,delta_log10_dx,a_dominates\n";
  Index step = report.summaries.empty() ? 0 : report.summaries.front().step;
  for (const auto& p : report.pairwise) {
    out += p.a + "," + p.b + "," + std::to_string(step) + "," + format_double(p.delta_log10_dy) + "," +
           format_double(p.delta_log10_dx) + "," + (p.a_dominates ? "true" : "false") + "\n";
  }
  return out;
}

std::string comparison_svg(const ComparisonReport& report) {
  constexpr double kWidth = 640, kHeight = 480, kLeft = 70, kRight = 150, kTop = 20, kBottom = 50;
  static constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::vector<std::vector<std::pair<double, double>>> curves;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& run : report.runs) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& a : run.aggregates) {
      const double x = std::log10(std::max(a.total_mean_sq_dy(), kLogFloor));
      const double y = a.log10_mean_sq_dx;
      pts.emplace_back(x, y);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
    curves.push_back(std::move(pts));
  }
  if (xmax <= xmin) { xmin -= 0.5; xmax += 0.5; }
  if (ymax <= ymin) { ymin -= 0.5; ymax += 0.5; }
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };
  auto num = [](double v) {
    std::array<char, 32> b{};
    std::snprintf(b.data(), b.size(), "%.2f", v);
    return std::string(b.data());
  };

  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight << "' viewBox='0 0 "
    << kWidth << " " << kHeight << "'>\n";
  s << "<rect x='0' y='0' width='" << kWidth << "' height='" << kHeight << "' fill='white'/>\n";
  s << "<line x1='" << kLeft << "' y1='" << kHeight - kBottom << "' x2='" << kWidth - kRight << "' y2='"
    << kHeight - kBottom << "' stroke='black'/>\n";
  s << "<line x1='" << kLeft << "' y1='" << kTop << "' x2='" << kLeft << "' y2='" << kHeight - kBottom
    << "' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    s << "<text x='" << num(sx(xv)) << "' y='" << kHeight - kBottom + 16 << "' font-size='10' text-anchor='middle'>"
      << num(xv) << "</text>\n";
    s << "<text x='" << kLeft - 6 << "' y='" << num(sy(yv) + 3) << "' font-size='10' text-anchor='end'>" << num(yv)
      << "</text>\n";
  }
  s << "<text x='" << kLeft + pw / 2 << "' y='" << kHeight - 10
    << "' font-size='12' text-anchor='middle'>log10 mean squared fixed-feature change</text>\n";
  s << "<text x='14' y='" << kTop + ph / 2 << "' font-size='12' text-anchor='middle' transform='rotate(-90 14 "
    << kTop + ph / 2 << ")'>log10 mean squared changing-feature change</text>\n";
  for (std::size_t m = 0; m < report.runs.size(); ++m) {
    const auto& name = report.runs[m].method.name;
    const char* color = kColors[m % kColors.size()];
    const auto& pts = curves[m];
    s << "<polyline data-method='" << name << "'";
    if (!pts.empty()) {
      s << " data-final-x='" << format_double(pts.back().first) << "' data-final-y='"
        << format_double(pts.back().second) << "'";
    }
    s << " fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) s << ' ';
      s << num(sx(pts[i].first)) << ',' << num(sy(pts[i].second));
    }
    s << "'/>\n";
    for (const auto& [x, y] : pts) {
      s << "<circle cx='" << num(sx(x)) << "' cy='" << num(sy(y)) << "' r='2.5' fill='" << color << "'/>\n";
    }
    const double ly = kTop + 14.0 * static_cast<double>(m + 1);
    s << "<line x1='" << kWidth - kRight + 10 << "' y1='" << ly - 4 << "' x2='" << kWidth - kRight + 30 << "' y2='"
      << ly - 4 << "' stroke='" << color << "' stroke-width='2'/>\n";
    s << "<text x='" << kWidth - kRight + 34 << "' y='" << ly << "' font-size='11'>" << name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + root_.string() + ": " + ec.message());
}

void OutputDir::write(const std::string& relative, std::string_view bytes) {
  const auto path = root_ / relative;
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  file.close();
  if (!file) fail(ErrorKind::Io, "failed writing " + path.string());
  auto existing = std::find_if(files_.begin(), files_.end(), [&](const FileEntry& f) { return f.path == relative; });
  FileEntry entry{relative, bytes.size(), sha256_hex(bytes)};
  if (existing != files_.end()) {
    *existing = entry;
  } else {
    files_.push_back(entry);
  }
}

}  // namespace reds
