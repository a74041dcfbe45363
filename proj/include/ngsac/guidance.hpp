#pragma once

#include "ngsac/geometry.hpp"
#include "ngsac/sampling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ngsac {

enum class HeadMode : std::uint32_t { WeightsOnly = 0, PointsAndWeights = 1 };

struct GuidanceNetSpec {
  std::size_t input_dim = 4;
  std::size_t hidden_dim = 32;
  std::size_t n_blocks = 3;
  HeadMode heads = HeadMode::WeightsOnly;
  /// Predicted points are anchor + point_range * (2 sig(z) - 1).
  double point_range = 1.5;

  bool operator==(const GuidanceNetSpec&) const = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct GuidanceNetParams {
  std::vector<double> values;
  std::uint32_t version = kModelFormatVersion;
};

/// Offsets of every tensor inside the flat parameter vector. Matrices are
/// stored column-major.
struct ParamLayout {
  struct Block {
    std::size_t w1, b1, w2, b2;
  };
  std::size_t w_in = 0, b_in = 0;
  std::vector<Block> blocks;
  std::size_t w_weights = 0, b_weights = 0;
  std::size_t w_points = 0, b_points = 0;
  std::size_t total = 0;
};

ParamLayout make_layout(const GuidanceNetSpec& spec);

/// Per-observation MLP: input layer, residual blocks of two
/// (linear, instance norm, ReLU) layers, a sigmoid weight head normalized by
/// its sum and, for PointsAndWeights, a 2D point head.
class GuidanceNet {
 public:
  GuidanceNet(GuidanceNetSpec spec, GuidanceNetParams params);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights; the weight head starts
  /// at zero so the initial distribution is uniform.
  static GuidanceNet initialize(const GuidanceNetSpec& spec, std::uint64_t seed);

  const GuidanceNetSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  const GuidanceNetParams& params() const { return params_; }
  std::vector<double>& values() { return params_.values; }
  const std::vector<double>& values() const { return params_.values; }
  std::size_t parameter_count() const { return params_.values.size(); }

 private:
  GuidanceNetSpec spec_;
  ParamLayout layout_;
  GuidanceNetParams params_;
};

/// Activations kept for the backward pass. Matrices are channels x set size.
struct ForwardCache {
  struct BlockCache {
    Eigen::MatrixXd input;
    Eigen::MatrixXd norm1, norm2;
    Eigen::VectorXd inv_std1, inv_std2;
    Eigen::MatrixXd act1;
  };
  Eigen::MatrixXd features;
  std::vector<BlockCache> blocks;
  Eigen::MatrixXd trunk;
  Eigen::VectorXd weight_sigmoid;
  double weight_sum = 0.0;
  Eigen::MatrixXd point_sigmoid;
  std::size_t set_size = 0;
};

struct GuidanceOutput {
  GuidanceDistribution weights;
  std::vector<double> log_weights;
  std::vector<Vec2> points;
  ForwardCache cache;
};

/// Runs the network on an n x input_dim feature matrix (one row per
/// observation). `anchors` (one per observation) are required for the point
/// head. Throws SetTooSmall for n < 2 and ShapeMismatch for wrong widths.
GuidanceOutput forward(const GuidanceNet& net, const Eigen::MatrixXd& features,
                       std::span<const Vec2> anchors = {});

/// Reverse-mode gradient of sum_i g_i log p_i + sum_i <gp_i, y_i>. With
/// `blockade` the weight head's gradient does not reach the shared trunk
/// (PointsAndWeights only).
std::vector<double> backward(const GuidanceNet& net, const ForwardCache& cache,
                             std::span<const double> grad_log_weights,
                             std::span<const Vec2> grad_points = {}, bool blockade = true);

struct InstanceNormResult {
  Eigen::MatrixXd out;
  Eigen::VectorXd inv_std;
};

/// Per-channel (row) normalization over the set (columns), eps in the
/// variance denominator.
InstanceNormResult instance_norm(const Eigen::MatrixXd& x, double eps = 1e-5);
Eigen::MatrixXd instance_norm_backward(const Eigen::MatrixXd& normalized,
                                       const Eigen::VectorXd& inv_std,
                                       const Eigen::MatrixXd& grad_out);

/// Order-independent sum: values are summed in ascending order so that any
/// permutation of the input gives a bitwise identical result.
double canonical_sum(std::span<const double> values);

std::vector<std::uint8_t> serialize(const GuidanceNet& net);
GuidanceNet deserialize(std::span<const std::uint8_t> bytes);
void save_model(const GuidanceNet& net, const std::filesystem::path& path);
GuidanceNet load_model(const std::filesystem::path& path);

/// (x1, y1, x2, y2[, ratio]) rows.
Eigen::MatrixXd correspondence_features(std::span<const Correspondence> corrs, bool with_ratio);

}  // namespace ngsac
