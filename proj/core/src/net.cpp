#include "jawgrasp/net.hpp"

#include "jawgrasp/errors.hpp"
#include "jawgrasp/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace jawgrasp {

using Mat = Eigen::MatrixXd;
using MatI = Eigen::MatrixXi;

void NetConfig::validate() const {
  auto positive = [](const std::vector<int>& w) {
    for (int v : w) {
      if (v <= 0) return false;
    }
    return true;
  };
  if (classes < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 classes");
  if (point_widths.empty() || !positive(point_widths) || !positive(head_widths)) {
    throw Error(ErrorCode::InvalidArgument, "layer widths must be positive and the point MLP nonempty");
  }
  if (use_input_transform && (transform_point_widths.empty() || !positive(transform_point_widths) ||
                              !positive(transform_head_widths))) {
    throw Error(ErrorCode::InvalidArgument, "transform widths must be positive and its point MLP nonempty");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  if (!(init_std > 0.0) || !std::isfinite(init_std)) throw Error(ErrorCode::InvalidArgument, "init_std must be positive");
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) {
    throw Error(ErrorCode::InvalidArgument, "input_scale must be positive");
  }
}

NetLayout NetLayout::of(const NetConfig& config) {
  config.validate();
  NetLayout l;
  auto add = [&](int in, int out) {
    LayerSlot s{l.total, in, out};
    l.total += s.size();
    return s;
  };
  auto chain = [&](int in, const std::vector<int>& widths, std::vector<LayerSlot>& slots) {
    for (int w : widths) {
      slots.push_back(add(in, w));
      in = w;
    }
    return in;
  };
  if (config.use_input_transform) {
    int in = chain(3, config.transform_point_widths, l.transform_point);
    in = chain(in, config.transform_head_widths, l.transform_head);
    l.transform_out = add(in, 9);
  }
  int in = chain(3, config.point_widths, l.point);
  in = chain(in, config.head_widths, l.head);
  l.out = add(in, config.classes);
  return l;
}

std::size_t parameter_count(const NetConfig& config) { return NetLayout::of(config).total; }

NetParams init_params(const NetConfig& config) {
  NetParams p;
  p.config = config;
  p.layout = NetLayout::of(config);
  p.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.layout.total));
  Rng rng(config.seed);
  auto fill = [&](const LayerSlot& s) {
    for (std::size_t i = 0; i < s.weight_count(); ++i) p.values[static_cast<Eigen::Index>(s.offset + i)] = config.init_std * rng.normal();
  };
  for (const auto& s : p.layout.transform_point) fill(s);
  for (const auto& s : p.layout.transform_head) fill(s);
  if (config.use_input_transform) {
    const auto& s = p.layout.transform_out;
    const auto bias = static_cast<Eigen::Index>(s.offset + s.weight_count());
    for (int k : {0, 4, 8}) p.values[bias + k] = 1.0;
  }
  for (const auto& s : p.layout.point) fill(s);
  for (const auto& s : p.layout.head) fill(s);
  fill(p.layout.out);
  return p;
}

void Batch::validate(int classes) const {
  if (batch == 0 || n_points == 0) throw Error(ErrorCode::ShapeMismatch, "empty batch");
  if (points.cols() != 3 || static_cast<std::size_t>(points.rows()) != batch * n_points) {
    throw Error(ErrorCode::ShapeMismatch, "batch points must be (B*N) x 3");
  }
  if (!points.allFinite()) throw Error(ErrorCode::InvalidArgument, "batch contains non-finite coordinates");
  if (!labels.empty()) {
    if (labels.size() != batch) throw Error(ErrorCode::ShapeMismatch, "one label per sample required");
    for (int y : labels) {
      if (y < 0 || y >= classes) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

namespace {

Eigen::Map<const Mat> weights(const Eigen::VectorXd& v, const LayerSlot& s) {
  return {v.data() + s.offset, s.in, s.out};
}

Eigen::Map<const Eigen::RowVectorXd> bias(const Eigen::VectorXd& v, const LayerSlot& s) {
  return {v.data() + s.offset + s.weight_count(), s.out};
}

Mat dense(const Mat& x, const Eigen::VectorXd& v, const LayerSlot& s, bool relu) {
  Mat z(x.rows(), s.out);
  z.noalias() = x * weights(v, s);
  z.rowwise() += bias(v, s);
  if (relu) z = z.cwiseMax(0.0);
  return z;
}

// Accumulates the layer's parameter gradient and returns d(input).
Mat dense_backward(const Mat& in, const Mat& out, const Eigen::VectorXd& v, const LayerSlot& s, Mat d_out,
                   bool relu, Eigen::VectorXd& grad, bool need_input_grad = true) {
  if (relu) d_out.array() *= (out.array() > 0.0).cast<double>();
  Eigen::Map<Mat> gw(grad.data() + s.offset, s.in, s.out);
  Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + s.offset + s.weight_count(), s.out);
  gw.noalias() += in.transpose() * d_out;
  gb += d_out.colwise().sum();
  if (!need_input_grad) return {};
  Mat d_in(in.rows(), s.in);
  d_in.noalias() = d_out * weights(v, s).transpose();
  return d_in;
}

// Per-sample, per-feature maximum; the first maximal row wins.
Mat max_pool(const Mat& h, std::size_t batch, std::size_t n, MatI& argmax) {
  const auto f = h.cols();
  Mat g(static_cast<Eigen::Index>(batch), f);
  argmax.resize(static_cast<Eigen::Index>(batch), f);
  for (Eigen::Index c = 0; c < f; ++c) {
    const double* col = h.col(c).data();
    for (std::size_t b = 0; b < batch; ++b) {
      const double* s = col + b * n;
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (s[i] > s[best]) best = i;
      }
      g(static_cast<Eigen::Index>(b), c) = s[best];
      argmax(static_cast<Eigen::Index>(b), c) = static_cast<int>(best);
    }
  }
  return g;
}

Mat unpool(const Mat& d, const MatI& argmax, std::size_t n) {
  Mat out = Mat::Zero(static_cast<Eigen::Index>(d.rows() * static_cast<Eigen::Index>(n)), d.cols());
  for (Eigen::Index c = 0; c < d.cols(); ++c) {
    for (Eigen::Index b = 0; b < d.rows(); ++b) out(b * static_cast<Eigen::Index>(n) + argmax(b, c), c) = d(b, c);
  }
  return out;
}

Eigen::Index block_start(std::size_t b, std::size_t n) { return static_cast<Eigen::Index>(b * n); }

}  // namespace

Eigen::MatrixXd forward(const NetParams& params, const Batch& batch, bool train_mode, std::uint64_t seed,
                        ForwardCache* cache) {
  const auto& cfg = params.config;
  const auto& L = params.layout;
  const auto& v = params.values;
  batch.validate(cfg.classes);
  if (static_cast<std::size_t>(v.size()) != L.total) throw Error(ErrorCode::ShapeMismatch, "parameter vector size mismatch");
  const std::size_t B = batch.batch;
  const std::size_t N = batch.n_points;

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  c.scaled_input = batch.points * cfg.input_scale;

  Mat xt;
  c.transforms.assign(B, Eigen::Matrix3d::Identity());
  if (cfg.use_input_transform) {
    c.transform_acts.push_back(c.scaled_input);
    for (const auto& s : L.transform_point) c.transform_acts.push_back(dense(c.transform_acts.back(), v, s, true));
    c.transform_head_acts.push_back(max_pool(c.transform_acts.back(), B, N, c.transform_argmax));
    if (!cache) c.transform_acts.clear();
    for (const auto& s : L.transform_head) c.transform_head_acts.push_back(dense(c.transform_head_acts.back(), v, s, true));
    const Mat o = dense(c.transform_head_acts.back(), v, L.transform_out, false);
    xt.resize(c.scaled_input.rows(), 3);
    for (std::size_t b = 0; b < B; ++b) {
      Eigen::Matrix3d t;
      for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) t(r, k) = o(static_cast<Eigen::Index>(b), 3 * r + k);
      }
      c.transforms[b] = t;
      xt.middleRows(block_start(b, N), static_cast<Eigen::Index>(N)).noalias() =
          c.scaled_input.middleRows(block_start(b, N), static_cast<Eigen::Index>(N)) * t;
    }
  } else {
    xt = c.scaled_input;
  }

  c.point_acts.push_back(std::move(xt));
  for (const auto& s : L.point) {
    c.point_acts.push_back(dense(c.point_acts.back(), v, s, true));
    if (!cache) c.point_acts.erase(c.point_acts.begin());
  }
  c.head_acts.push_back(max_pool(c.point_acts.back(), B, N, c.argmax));
  if (!cache) c.point_acts.clear();

  Rng rng(seed);
  const bool drop = train_mode && cfg.dropout > 0.0;
  for (const auto& s : L.head) {
    Mat h = dense(c.head_acts.back(), v, s, true);
    if (drop) {
      Mat mask(h.rows(), h.cols());
      const double keep = 1.0 / (1.0 - cfg.dropout);
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < cfg.dropout ? 0.0 : keep;
      h.array() *= mask.array();
      c.dropout_masks.push_back(std::move(mask));
    }
    c.head_acts.push_back(std::move(h));
  }
  c.logits = dense(c.head_acts.back(), v, L.out, false);
  return c.logits;
}

std::vector<Eigen::Matrix3d> input_transforms(const NetParams& params, const Batch& batch) {
  ForwardCache c;
  forward(params, batch, false, 0, &c);
  return c.transforms;
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Mat p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

double cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size() || labels.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "one label per logit row required");
  }
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= logits.cols()) throw Error(ErrorCode::LabelOutOfRange, "label outside logit range");
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    total += lse - logits(r, y);
  }
  return total / static_cast<double>(logits.rows());
}

Eigen::VectorXd backward(const NetParams& params, const Batch& batch, const ForwardCache& c) {
  const auto& cfg = params.config;
  const auto& L = params.layout;
  const auto& v = params.values;
  const std::size_t B = batch.batch;
  const std::size_t N = batch.n_points;
  if (batch.labels.size() != B) throw Error(ErrorCode::ShapeMismatch, "backward needs one label per sample");
  if (c.point_acts.size() != L.point.size() + 1) throw Error(ErrorCode::ShapeMismatch, "forward cache incomplete");

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(v.size());
  Mat d = softmax(c.logits);
  for (std::size_t b = 0; b < B; ++b) d(static_cast<Eigen::Index>(b), batch.labels[b]) -= 1.0;
  d /= static_cast<double>(B);

  d = dense_backward(c.head_acts.back(), c.logits, v, L.out, d, false, grad);
  for (std::size_t l = L.head.size(); l-- > 0;) {
    if (!c.dropout_masks.empty()) d.array() *= c.dropout_masks[l].array();
    d = dense_backward(c.head_acts[l], c.head_acts[l + 1], v, L.head[l], d, true, grad);
  }
  d = unpool(d, c.argmax, N);
  const bool need_input = cfg.use_input_transform;
  for (std::size_t l = L.point.size(); l-- > 0;) {
    d = dense_backward(c.point_acts[l], c.point_acts[l + 1], v, L.point[l], d, true, grad, l > 0 || need_input);
  }
  if (!cfg.use_input_transform) return grad;

  // d is d(loss)/d(X T); the transform gradient per sample is X^T d.
  Mat d_o(static_cast<Eigen::Index>(B), 9);
  for (std::size_t b = 0; b < B; ++b) {
    const Eigen::Matrix3d dt = c.scaled_input.middleRows(block_start(b, N), static_cast<Eigen::Index>(N)).transpose() *
                               d.middleRows(block_start(b, N), static_cast<Eigen::Index>(N));
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) d_o(static_cast<Eigen::Index>(b), 3 * r + k) = dt(r, k);
    }
  }
  d = dense_backward(c.transform_head_acts.back(), Mat(), v, L.transform_out, d_o, false, grad);
  for (std::size_t l = L.transform_head.size(); l-- > 0;) {
    d = dense_backward(c.transform_head_acts[l], c.transform_head_acts[l + 1], v, L.transform_head[l], d, true, grad);
  }
  d = unpool(d, c.transform_argmax, N);
  for (std::size_t l = L.transform_point.size(); l-- > 0;) {
    d = dense_backward(c.transform_acts[l], c.transform_acts[l + 1], v, L.transform_point[l], d, true, grad, l > 0);
  }
  return grad;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, const AdamOptions& o) {
  if (grads.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "gradient size mismatch");
  if (state.m.size() == 0) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer state size mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  state.m = o.beta1 * state.m + (1.0 - o.beta1) * grads;
  state.v = o.beta2 * state.v + (1.0 - o.beta2) * grads.cwiseAbs2();
  params.array() -= o.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + o.eps);
}

namespace {

constexpr char kModelMagic[7] = {'P', 'G', 'P', 'D', 'N', 'E', 'T'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void put(std::string& buf, T value) {
  static_assert(std::endian::native == std::endian::little);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

void put_widths(std::string& buf, const std::vector<int>& w) {
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(w.size()));
  for (int x : w) put<std::uint32_t>(buf, static_cast<std::uint32_t>(x));
}

struct ModelReader {
  std::string data;
  std::string file;
  std::size_t pos = 0;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > data.size()) throw ParseError(file, pos, "unexpected end of model file");
    T v;
    std::memcpy(&v, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::vector<int> widths() {
    const auto n = get<std::uint32_t>();
    if (n > 64) throw ParseError(file, pos, "implausible layer count");
    std::vector<int> w(n);
    for (auto& x : w) x = static_cast<int>(get<std::uint32_t>());
    return w;
  }
};

}  // namespace

void save_model(const NetParams& params, const std::filesystem::path& path) {
  const auto& c = params.config;
  std::string buf(kModelMagic, sizeof(kModelMagic));
  put<std::uint32_t>(buf, kModelVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(c.classes));
  put_widths(buf, c.point_widths);
  put_widths(buf, c.head_widths);
  put<std::uint8_t>(buf, c.use_input_transform ? 1 : 0);
  put_widths(buf, c.transform_point_widths);
  put_widths(buf, c.transform_head_widths);
  put<double>(buf, c.dropout);
  put<double>(buf, c.init_std);
  put<double>(buf, c.input_scale);
  put<std::uint64_t>(buf, c.seed);
  put<std::uint64_t>(buf, static_cast<std::uint64_t>(params.values.size()));
  for (Eigen::Index i = 0; i < params.values.size(); ++i) put<double>(buf, params.values[i]);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

NetParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  ModelReader r{{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}, path.string()};
  char magic[sizeof(kModelMagic)];
  for (char& ch : magic) ch = r.get<char>();
  if (std::memcmp(magic, kModelMagic, sizeof(kModelMagic)) != 0) throw ParseError(r.file, 0, "bad model magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion) throw ParseError(r.file, 7, "unsupported model version " + std::to_string(version));
  NetConfig c;
  c.classes = static_cast<int>(r.get<std::uint32_t>());
  c.point_widths = r.widths();
  c.head_widths = r.widths();
  c.use_input_transform = r.get<std::uint8_t>() != 0;
  c.transform_point_widths = r.widths();
  c.transform_head_widths = r.widths();
  c.dropout = r.get<double>();
  c.init_std = r.get<double>();
  c.input_scale = r.get<double>();
  c.seed = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();

  NetParams p;
  p.config = c;
  try {
    p.layout = NetLayout::of(c);
  } catch (const Error& e) {
    throw ParseError(r.file, r.pos, std::string("invalid stored config: ") + e.what());
  }
  if (count != p.layout.total) {
    throw ParseError(r.file, r.pos, "stored " + std::to_string(count) + " parameters, config needs " +
                                        std::to_string(p.layout.total));
  }
  p.values.resize(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values[i] = r.get<double>();
  if (r.pos != r.data.size()) throw ParseError(r.file, r.pos, "trailing bytes after parameters");
  if (!p.values.allFinite()) throw ParseError(r.file, r.pos, "non-finite parameter");
  return p;
}

}  // namespace jawgrasp
