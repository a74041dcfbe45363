#include "ngsac/io.hpp"

#include "ngsac/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace ngsac {

namespace {

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, std::string("bad number for ") + what + ": '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, std::string("missing ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

}  // namespace

void write_correspondences(std::ostream& out, const CorrespondenceFile& f) {
  out << "ngsac-correspondences\n";
  out << "version " << kCorrespondenceFormatMajor << '.' << kCorrespondenceFormatMinor << '\n';
  write_comment_block(out, f.comments);
  out << "fields x1,y1,x2,y2" << (f.has_ratio ? ",ratio" : "") << (f.has_label ? ",label" : "") << '\n';
  out << "intrinsics " << (f.scaled_intrinsics ? "scaled" : "identity") << '\n';
  out << "scale " << full(f.scale) << '\n';
  if (f.gt_model) {
    out << "gt_model " << (f.gt_model->kind == MatrixKind::Essential ? "essential" : "fundamental");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ' ' << full(f.gt_model->m(r, c));
    }
    out << '\n';
  }
  if (f.gt_pose) {
    out << "gt_pose";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ' ' << full(f.gt_pose->rotation(r, c));
    }
    for (int i = 0; i < 3; ++i) out << ' ' << full(f.gt_pose->translation(i));
    out << '\n';
  }
  out << "count " << f.correspondences.size() << '\n';
  out << "data\n";
  for (const auto& c : f.correspondences) {
    out << full(c.x1) << ',' << full(c.y1) << ',' << full(c.x2) << ',' << full(c.y2);
    if (f.has_ratio) {
      require(c.ratio.has_value(), "ratio column declared but missing");
      out << ',' << full(*c.ratio);
    }
    if (f.has_label) {
      require(c.gt_inlier.has_value(), "label column declared but missing");
      out << ',' << (*c.gt_inlier ? 1 : 0);
    }
    out << '\n';
  }
}

CorrespondenceFile read_correspondences(std::istream& in) {
  CorrespondenceFile f;
  if (next_line(in, "magic") != "ngsac-correspondences") {
    throw Error(ErrorCode::ParseError, "not a correspondence file");
  }
  const auto version = words(next_line(in, "version"));
  if (version.size() != 2 || version[0] != "version") throw Error(ErrorCode::ParseError, "bad version line");
  const auto parts = split(version[1], '.');
  if (parts.size() != 2) throw Error(ErrorCode::ParseError, "bad version number");
  if (parts[0] != std::to_string(kCorrespondenceFormatMajor)) {
    throw Error(ErrorCode::VersionMismatch, "unsupported correspondence format version " + version[1]);
  }
  std::size_t count = 0;
  bool have_fields = false, have_count = false;
  while (true) {
    const std::string line = next_line(in, "header");
    if (line == "data") break;
    if (!line.empty() && line[0] == '#') {
      f.comments.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    const auto w = words(line);
    if (w.empty()) continue;
    if (w[0] == "fields" && w.size() == 2) {
      const auto cols = split(w[1], ',');
      if (cols.size() < 4 || cols[0] != "x1" || cols[1] != "y1" || cols[2] != "x2" || cols[3] != "y2") {
        throw Error(ErrorCode::ParseError, "fields must start with x1,y1,x2,y2");
      }
      std::size_t i = 4;
      if (i < cols.size() && cols[i] == "ratio") f.has_ratio = true, ++i;
      if (i < cols.size() && cols[i] == "label") f.has_label = true, ++i;
      if (i != cols.size()) throw Error(ErrorCode::ParseError, "unknown field in '" + w[1] + "'");
      have_fields = true;
    } else if (w[0] == "intrinsics" && w.size() == 2) {
      if (w[1] != "identity" && w[1] != "scaled") throw Error(ErrorCode::ParseError, "bad intrinsics flag");
      f.scaled_intrinsics = w[1] == "scaled";
    } else if (w[0] == "scale" && w.size() == 2) {
      f.scale = parse_double(w[1], "scale");
    } else if (w[0] == "gt_model" && w.size() == 11) {
      Model3x3 m;
      if (w[1] != "essential" && w[1] != "fundamental") throw Error(ErrorCode::ParseError, "bad model kind");
      m.kind = w[1] == "essential" ? MatrixKind::Essential : MatrixKind::Fundamental;
      for (int k = 0; k < 9; ++k) m.m(k / 3, k % 3) = parse_double(w[2 + k], "gt_model");
      f.gt_model = m;
    } else if (w[0] == "gt_pose" && w.size() == 13) {
      Pose p;
      for (int k = 0; k < 9; ++k) p.rotation(k / 3, k % 3) = parse_double(w[1 + k], "gt_pose");
      for (int k = 0; k < 3; ++k) p.translation(k) = parse_double(w[10 + k], "gt_pose");
      f.gt_pose = p;
    } else if (w[0] == "count" && w.size() == 2) {
      count = static_cast<std::size_t>(parse_double(w[1], "count"));
      have_count = true;
    } else {
      throw Error(ErrorCode::ParseError, "unknown header line '" + line + "'");
    }
  }
  if (!have_fields || !have_count) throw Error(ErrorCode::ParseError, "header lacks fields or count");
  const std::size_t width = 4 + f.has_ratio + f.has_label;
  f.correspondences.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto cols = split(next_line(in, "data row"), ',');
    if (cols.size() != width) throw Error(ErrorCode::ParseError, "row " + std::to_string(i) + " has wrong width");
    Correspondence c;
    c.x1 = parse_double(cols[0], "x1");
    c.y1 = parse_double(cols[1], "y1");
    c.x2 = parse_double(cols[2], "x2");
    c.y2 = parse_double(cols[3], "y2");
    std::size_t k = 4;
    if (f.has_ratio) c.ratio = parse_double(cols[k++], "ratio");
    if (f.has_label) {
      if (cols[k] != "0" && cols[k] != "1") throw Error(ErrorCode::ParseError, "label must be 0 or 1");
      c.gt_inlier = cols[k] == "1";
    }
    if (!is_valid(c)) throw Error(ErrorCode::ParseError, "invalid correspondence in row " + std::to_string(i));
    f.correspondences.push_back(c);
  }
  return f;
}

const char* const kMetricHeader =
    "task,method,M,outlier_rate,seed,angular_error_deg,pct_inliers,f_score,mean_epi,median_epi,error,wall_ms";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& s, const char* what) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, what);
}

}  // namespace

std::string metric_row(const MetricRecord& r) {
  std::ostringstream ss;
  ss << r.task << ',' << r.method << ',' << r.m << ',' << format_double(r.outlier_rate) << ',' << r.seed
     << ',' << opt(r.angular_error_deg) << ',' << opt(r.pct_inliers) << ',' << opt(r.f_score) << ','
     << opt(r.mean_epi) << ',' << opt(r.median_epi) << ',' << r.error << ',' << format_double(r.wall_ms);
  return ss.str();
}

void write_comment_block(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& l : lines) out << "# " << l << '\n';
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& records,
                       const std::vector<std::string>& config_echo) {
  write_comment_block(out, config_echo);
  out << kMetricHeader << '\n';
  for (const auto& r : records) out << metric_row(r) << '\n';
}

std::vector<MetricRecord> read_metrics_csv(std::istream& in) {
  std::vector<MetricRecord> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kMetricHeader) throw Error(ErrorCode::ParseError, "unexpected metrics header");
      header = true;
      continue;
    }
    const auto c = split(line, ',');
    if (c.size() != 12) throw Error(ErrorCode::ParseError, "metrics row has wrong width");
    MetricRecord r;
    r.task = c[0];
    r.method = c[1];
    r.m = static_cast<std::size_t>(parse_double(c[2], "M"));
    r.outlier_rate = parse_double(c[3], "outlier_rate");
    try {
      r.seed = std::stoull(c[4]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad seed '" + c[4] + "'");
    }
    r.angular_error_deg = parse_opt(c[5], "angular_error_deg");
    r.pct_inliers = parse_opt(c[6], "pct_inliers");
    r.f_score = parse_opt(c[7], "f_score");
    r.mean_epi = parse_opt(c[8], "mean_epi");
    r.median_epi = parse_opt(c[9], "median_epi");
    r.error = c[10];
    r.wall_ms = parse_double(c[11], "wall_ms");
    out.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorCode::ParseError, "metrics file has no header");
  return out;
}

std::string report_to_json(const EstimateReport<Model3x3>& r,
                           const std::vector<std::pair<std::string, std::string>>& config_echo,
                           const std::optional<MetricRecord>& metrics) {
  using nlohmann::ordered_json;
  ordered_json j;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : config_echo) cfg[k] = v;
  j["config"] = cfg;
  auto mat = [](const Mat3& m) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < 3; ++i) a.push_back({m(i, 0), m(i, 1), m(i, 2)});
    return a;
  };
  j["model"] = {{"kind", r.model.kind == MatrixKind::Essential ? "essential" : "fundamental"},
                {"m", mat(r.model.m)}};
  j["pre_refit_model"] = mat(r.pre_refit_model.m);
  j["selected_index"] = r.selected_index;
  j["score"] = r.score;
  j["inlier_count"] = r.inlier_indices.size();
  j["inlier_indices"] = r.inlier_indices;
  j["pools_drawn"] = r.pools_drawn;
  j["hypotheses_drawn"] = r.hypotheses_drawn;
  j["rng_seed"] = r.rng_seed;
  j["refit_applied"] = r.refit_applied;
  j["log_probs"] = r.log_probs;
  j["warnings"] = r.warnings;
  if (metrics) {
    auto o = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    j["metrics"] = {{"angular_error_deg", o(metrics->angular_error_deg)},
                    {"pct_inliers", o(metrics->pct_inliers)},
                    {"f_score", o(metrics->f_score)},
                    {"mean_epi", o(metrics->mean_epi)},
                    {"median_epi", o(metrics->median_epi)}};
  }
  return j.dump(2);
}

}  // namespace ngsac
