#include "ngsac/guidance.hpp"

#include "ngsac/error.hpp"
#include "ngsac/rng.hpp"
#include "ngsac/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ngsac {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using MatMap = Eigen::Map<const MatrixXd>;
using VecMap = Eigen::Map<const VectorXd>;

namespace {

Index idx(std::size_t v) { return static_cast<Index>(v); }

MatMap mat(const std::vector<double>& v, std::size_t offset, std::size_t rows, std::size_t cols) {
  return MatMap(v.data() + offset, idx(rows), idx(cols));
}

VecMap vec(const std::vector<double>& v, std::size_t offset, std::size_t n) {
  return VecMap(v.data() + offset, idx(n));
}

// y.col(j) = W x.col(j) + b, one matrix-vector product per observation so
// every column goes through the same arithmetic regardless of its position.
MatrixXd affine(const MatMap& w, const VecMap& b, const MatrixXd& x) {
  MatrixXd y(w.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    y.col(j).noalias() = w * x.col(j);
    y.col(j) += b;
  }
  return y;
}

MatrixXd relu(const MatrixXd& x) { return x.cwiseMax(0.0); }

double log_sigmoid(double z) {
  // -softplus(-z)
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

}  // namespace

double canonical_sum(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double s = 0.0;
  for (const double v : sorted) s += v;
  return s;
}

ParamLayout make_layout(const GuidanceNetSpec& spec) {
  require(spec.input_dim >= 1 && spec.hidden_dim >= 1, "network dims must be >= 1");
  ParamLayout l;
  std::size_t off = 0;
  const std::size_t h = spec.hidden_dim;
  l.w_in = off;
  off += h * spec.input_dim;
  l.b_in = off;
  off += h;
  for (std::size_t b = 0; b < spec.n_blocks; ++b) {
    ParamLayout::Block blk{};
    blk.w1 = off;
    off += h * h;
    blk.b1 = off;
    off += h;
    blk.w2 = off;
    off += h * h;
    blk.b2 = off;
    off += h;
    l.blocks.push_back(blk);
  }
  l.w_weights = off;
  off += h;
  l.b_weights = off;
  off += 1;
  if (spec.heads == HeadMode::PointsAndWeights) {
    l.w_points = off;
    off += 2 * h;
    l.b_points = off;
    off += 2;
  }
  l.total = off;
  return l;
}

GuidanceNet::GuidanceNet(GuidanceNetSpec spec, GuidanceNetParams params)
    : spec_(spec), layout_(make_layout(spec)), params_(std::move(params)) {
  if (params_.version != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "unsupported parameter version");
  }
  if (params_.values.size() != layout_.total) {
    throw Error(ErrorCode::ShapeMismatch, "parameter vector does not match the network layout");
  }
  for (const double v : params_.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::CorruptModel, "non-finite parameter");
  }
}

GuidanceNet GuidanceNet::initialize(const GuidanceNetSpec& spec, std::uint64_t seed) {
  const ParamLayout l = make_layout(spec);
  std::vector<double> v(l.total, 0.0);
  CounterRng rng(seed, 0x494E4954ULL);
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) v[offset + i] = rng.uniform(-bound, bound);
  };
  const std::size_t h = spec.hidden_dim;
  fill(l.w_in, h * spec.input_dim, spec.input_dim);
  fill(l.b_in, h, spec.input_dim);
  for (const auto& b : l.blocks) {
    fill(b.w1, h * h, h);
    fill(b.b1, h, h);
    fill(b.w2, h * h, h);
    fill(b.b2, h, h);
  }
  if (spec.heads == HeadMode::PointsAndWeights) {
    fill(l.w_points, 2 * h, h);
    fill(l.b_points, 2, h);
  }
  return GuidanceNet(spec, GuidanceNetParams{std::move(v), kModelFormatVersion});
}

InstanceNormResult instance_norm(const MatrixXd& x, double eps) {
  const Index n = x.cols();
  if (n < 2) throw Error(ErrorCode::SetTooSmall, "instance norm needs at least 2 observations");
  InstanceNormResult r{MatrixXd(x.rows(), n), VectorXd(x.rows())};
  std::vector<double> buf(static_cast<std::size_t>(n));
  for (Index c = 0; c < x.rows(); ++c) {
    for (Index j = 0; j < n; ++j) buf[static_cast<std::size_t>(j)] = x(c, j);
    const double mean = canonical_sum(buf) / static_cast<double>(n);
    for (Index j = 0; j < n; ++j) {
      const double d = x(c, j) - mean;
      buf[static_cast<std::size_t>(j)] = d * d;
    }
    const double var = canonical_sum(buf) / static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    r.inv_std(c) = inv;
    for (Index j = 0; j < n; ++j) r.out(c, j) = (x(c, j) - mean) * inv;
  }
  return r;
}

MatrixXd instance_norm_backward(const MatrixXd& normalized, const VectorXd& inv_std,
                                const MatrixXd& grad_out) {
  const double n = static_cast<double>(normalized.cols());
  const VectorXd mean_g = grad_out.rowwise().sum() / n;
  const VectorXd mean_gy = grad_out.cwiseProduct(normalized).rowwise().sum() / n;
  MatrixXd dx = grad_out;
  dx.colwise() -= mean_g;
  dx -= normalized.cwiseProduct(mean_gy.replicate(1, normalized.cols()));
  return inv_std.asDiagonal() * dx;
}

GuidanceOutput forward(const GuidanceNet& net, const MatrixXd& features, std::span<const Vec2> anchors) {
  const auto& spec = net.spec();
  const auto& l = net.layout();
  const auto& v = net.values();
  const std::size_t n = static_cast<std::size_t>(features.rows());
  const std::size_t h = spec.hidden_dim;
  if (n < 2) throw Error(ErrorCode::SetTooSmall, "guidance needs at least 2 observations");
  if (static_cast<std::size_t>(features.cols()) != spec.input_dim) {
    throw Error(ErrorCode::ShapeMismatch, "feature width does not match the network input");
  }
  const bool with_points = spec.heads == HeadMode::PointsAndWeights;
  if (with_points && anchors.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "point head needs one anchor per observation");
  }

  GuidanceOutput out;
  ForwardCache& cache = out.cache;
  cache.set_size = n;
  cache.features = features.transpose();
  MatrixXd x = affine(mat(v, l.w_in, h, spec.input_dim), vec(v, l.b_in, h), cache.features);
  for (const auto& b : l.blocks) {
    ForwardCache::BlockCache bc;
    bc.input = x;
    auto n1 = instance_norm(affine(mat(v, b.w1, h, h), vec(v, b.b1, h), x));
    bc.norm1 = std::move(n1.out);
    bc.inv_std1 = std::move(n1.inv_std);
    bc.act1 = relu(bc.norm1);
    auto n2 = instance_norm(affine(mat(v, b.w2, h, h), vec(v, b.b2, h), bc.act1));
    bc.norm2 = std::move(n2.out);
    bc.inv_std2 = std::move(n2.inv_std);
    x = x + relu(bc.norm2);
    cache.blocks.push_back(std::move(bc));
  }
  cache.trunk = x;

  const MatrixXd zw = affine(mat(v, l.w_weights, 1, h), vec(v, l.b_weights, 1), x);
  cache.weight_sigmoid.resize(idx(n));
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = sigmoid(zw(0, idx(i)));
    cache.weight_sigmoid(idx(i)) = s[i];
  }
  cache.weight_sum = canonical_sum(s);
  const double log_sum = std::log(cache.weight_sum);
  std::vector<double> w(n);
  out.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = s[i] / cache.weight_sum;
    out.log_weights[i] = log_sigmoid(zw(0, idx(i))) - log_sum;
  }
  out.weights = GuidanceDistribution(std::move(w));

  if (with_points) {
    const MatrixXd zp = affine(mat(v, l.w_points, 2, h), vec(v, l.b_points, 2), x);
    cache.point_sigmoid.resize(2, idx(n));
    out.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int d = 0; d < 2; ++d) {
        const double sg = sigmoid(zp(d, idx(i)));
        cache.point_sigmoid(d, idx(i)) = sg;
        out.points[i](d) = anchors[i](d) + spec.point_range * (2.0 * sg - 1.0);
      }
    }
  }
  return out;
}

std::vector<double> backward(const GuidanceNet& net, const ForwardCache& cache,
                             std::span<const double> grad_log_weights,
                             std::span<const Vec2> grad_points, bool blockade) {
  const auto& spec = net.spec();
  const auto& l = net.layout();
  const auto& v = net.values();
  const std::size_t n = cache.set_size;
  const std::size_t h = spec.hidden_dim;
  const bool with_points = spec.heads == HeadMode::PointsAndWeights;
  if (grad_log_weights.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "gradient size does not match the forward pass");
  }
  if (!grad_points.empty() && (!with_points || grad_points.size() != n)) {
    throw Error(ErrorCode::ShapeMismatch, "point gradient does not match the forward pass");
  }
  if (static_cast<std::size_t>(cache.trunk.cols()) != n ||
      static_cast<std::size_t>(cache.trunk.rows()) != h) {
    throw Error(ErrorCode::ShapeMismatch, "forward cache does not belong to this network");
  }

  std::vector<double> grad(l.total, 0.0);
  auto gmat = [&](std::size_t off, std::size_t rows, std::size_t cols) {
    return Eigen::Map<MatrixXd>(grad.data() + off, idx(rows), idx(cols));
  };
  auto gvec = [&](std::size_t off, std::size_t count) {
    return Eigen::Map<VectorXd>(grad.data() + off, idx(count));
  };

  // Weight head: log p_i = log s_i - log S.
  double total_g = 0.0;
  for (const double g : grad_log_weights) total_g += g;
  Eigen::RowVectorXd dzw(idx(n));
  for (std::size_t k = 0; k < n; ++k) {
    const double sk = cache.weight_sigmoid(idx(k));
    dzw(idx(k)) = (1.0 - sk) * (grad_log_weights[k] - total_g * sk / cache.weight_sum);
  }
  gmat(l.w_weights, 1, h) = dzw * cache.trunk.transpose();
  grad[l.b_weights] = dzw.sum();
  MatrixXd d_trunk = MatrixXd::Zero(idx(h), idx(n));
  if (!(with_points && blockade)) {
    d_trunk += mat(v, l.w_weights, 1, h).transpose() * dzw;
  }

  if (with_points && !grad_points.empty()) {
    MatrixXd dzp(2, idx(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (int d = 0; d < 2; ++d) {
        const double sg = cache.point_sigmoid(d, idx(i));
        dzp(d, idx(i)) = grad_points[i](d) * 2.0 * spec.point_range * sg * (1.0 - sg);
      }
    }
    gmat(l.w_points, 2, h) = dzp * cache.trunk.transpose();
    gvec(l.b_points, 2) = dzp.rowwise().sum();
    d_trunk += mat(v, l.w_points, 2, h).transpose() * dzp;
  }

  MatrixXd dx = d_trunk;
  for (std::size_t bi = l.blocks.size(); bi-- > 0;) {
    const auto& b = l.blocks[bi];
    const auto& bc = cache.blocks[bi];
    const MatrixXd dnorm2 = dx.cwiseProduct((bc.norm2.array() > 0.0).cast<double>().matrix());
    const MatrixXd dz2 = instance_norm_backward(bc.norm2, bc.inv_std2, dnorm2);
    gmat(b.w2, h, h) = dz2 * bc.act1.transpose();
    gvec(b.b2, h) = dz2.rowwise().sum();
    const MatrixXd dact1 = mat(v, b.w2, h, h).transpose() * dz2;
    const MatrixXd dnorm1 = dact1.cwiseProduct((bc.norm1.array() > 0.0).cast<double>().matrix());
    const MatrixXd dz1 = instance_norm_backward(bc.norm1, bc.inv_std1, dnorm1);
    gmat(b.w1, h, h) = dz1 * bc.input.transpose();
    gvec(b.b1, h) = dz1.rowwise().sum();
    dx += mat(v, b.w1, h, h).transpose() * dz1;
  }
  gmat(l.w_in, h, spec.input_dim) = dx * cache.features.transpose();
  gvec(l.b_in, h) = dx.rowwise().sum();
  return grad;
}

namespace {

constexpr char kMagic[8] = {'N', 'G', 'S', 'A', 'C', 'N', 'E', 'T'};

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint64_t u64() { return read(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
  double f64() {
    const std::uint64_t bits = read(8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::uint64_t read(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::CorruptModel, "model stream truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const GuidanceNet& net) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  const auto& spec = net.spec();
  put_u32(out, net.params().version);
  put_u32(out, static_cast<std::uint32_t>(spec.input_dim));
  put_u32(out, static_cast<std::uint32_t>(spec.hidden_dim));
  put_u32(out, static_cast<std::uint32_t>(spec.n_blocks));
  put_u32(out, static_cast<std::uint32_t>(spec.heads));
  put_f64(out, spec.point_range);
  put_u64(out, net.parameter_count());
  for (const double v : net.values()) put_f64(out, v);
  put_u64(out, fnv1a(out));
  return out;
}

GuidanceNet deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::CorruptModel, "bad magic");
  }
  Reader r(bytes.subspan(sizeof kMagic));
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version));
  }
  GuidanceNetSpec spec;
  spec.input_dim = r.u32();
  spec.hidden_dim = r.u32();
  spec.n_blocks = r.u32();
  const std::uint32_t heads = r.u32();
  if (heads > 1) throw Error(ErrorCode::CorruptModel, "unknown head mode");
  spec.heads = static_cast<HeadMode>(heads);
  spec.point_range = r.f64();
  const std::uint64_t count = r.u64();
  if (count > r.remaining() / 8) throw Error(ErrorCode::CorruptModel, "model stream truncated");
  std::vector<double> values(count);
  for (auto& v : values) v = r.f64();
  const std::size_t body = sizeof kMagic + r.position();
  const std::uint64_t checksum = r.u64();
  if (r.remaining() != 0) throw Error(ErrorCode::CorruptModel, "trailing bytes after checksum");
  if (checksum != fnv1a(bytes.first(body))) throw Error(ErrorCode::CorruptModel, "checksum mismatch");
  if (make_layout(spec).total != count) {
    throw Error(ErrorCode::CorruptModel, "parameter count does not match the network shape");
  }
  return GuidanceNet(spec, GuidanceNetParams{std::move(values), version});
}

void save_model(const GuidanceNet& net, const std::filesystem::path& path) {
  const auto bytes = serialize(net);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::PreconditionViolation, "cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GuidanceNet load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::PreconditionViolation, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

MatrixXd correspondence_features(std::span<const Correspondence> corrs, bool with_ratio) {
  MatrixXd f(idx(corrs.size()), with_ratio ? 5 : 4);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const auto& c = corrs[i];
    f(idx(i), 0) = c.x1;
    f(idx(i), 1) = c.y1;
    f(idx(i), 2) = c.x2;
    f(idx(i), 3) = c.y2;
    if (with_ratio) {
      require(c.ratio.has_value(), "ratio feature requested but missing");
      f(idx(i), 4) = *c.ratio;
    }
  }
  return f;
}

}  // namespace ngsac
