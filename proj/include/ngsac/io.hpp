#pragma once

#include "ngsac/estimator.hpp"
#include "ngsac/geometry.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ngsac {

inline constexpr int kCorrespondenceFormatMajor = 1;
inline constexpr int kCorrespondenceFormatMinor = 0;

/// Self-describing correspondence file:
///   ngsac-correspondences
///   version 1.0
///   [# comment lines]
///   fields x1,y1,x2,y2[,ratio][,label]
///   intrinsics identity | scaled
///   scale <factor>
///   [gt_model essential|fundamental m00 m01 ... m22]
///   [gt_pose r00 ... r22 t0 t1 t2]
///   count <n>
///   data
///   <n comma-separated rows>
struct CorrespondenceFile {
  std::vector<Correspondence> correspondences;
  bool has_ratio = false;
  bool has_label = false;
  bool scaled_intrinsics = false;
  double scale = 1.0;
  std::optional<Model3x3> gt_model;
  std::optional<Pose> gt_pose;
  std::vector<std::string> comments;  // header '#' lines, without the prefix
};

void write_correspondences(std::ostream& out, const CorrespondenceFile& file);
/// Throws ParseError on malformed input and VersionMismatch on an unknown
/// major version.
CorrespondenceFile read_correspondences(std::istream& in);

/// One benchmark cell. Optional metrics are written as empty fields.
struct MetricRecord {
  std::string task;
  std::string method;
  std::size_t m = 0;
  double outlier_rate = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> angular_error_deg;
  std::optional<double> pct_inliers;
  std::optional<double> f_score;
  std::optional<double> mean_epi;
  std::optional<double> median_epi;
  std::string error;  // empty when the cell succeeded
  double wall_ms = 0.0;

  bool operator==(const MetricRecord&) const = default;
};

/// Fixed header; wall_ms is the last column.
extern const char* const kMetricHeader;

/// %.9g formatting shared by every CSV writer.
std::string format_double(double v);
std::string metric_row(const MetricRecord& r);
/// Writes '#'-prefixed comment lines.
void write_comment_block(std::ostream& out, const std::vector<std::string>& lines);
void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& records,
                       const std::vector<std::string>& config_echo = {});
/// Skips '#' comment lines; checks the header.
std::vector<MetricRecord> read_metrics_csv(std::istream& in);

/// Structured estimate record (JSON text).
std::string report_to_json(const EstimateReport<Model3x3>& report,
                           const std::vector<std::pair<std::string, std::string>>& config_echo = {},
                           const std::optional<MetricRecord>& metrics = std::nullopt);

}  // namespace ngsac
