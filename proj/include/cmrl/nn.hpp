#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cmrl/detail/text.hpp"
#include "cmrl/error.hpp"

namespace cmrl::nn {

using Matrix = Eigen::MatrixXd;  // rows are batch samples
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation { Relu, None };
enum class Head { Linear, Softmax };
enum class Phase { Train, Eval };

inline constexpr double kBnMomentum = 0.99;
inline constexpr double kBnEpsilon = 1e-5;

struct HiddenLayer {
  int width = 0;
  bool batch_norm = false;
  Activation activation = Activation::Relu;
};

struct MlpSpec {
  int input = 0;
  std::vector<HiddenLayer> hidden;
  int output = 0;
  Head head = Head::Linear;
  // Softmax is applied independently over consecutive blocks of these
  // widths. Empty means one block spanning the whole output.
  std::vector<int> softmax_blocks;

  std::vector<int> blocks() const {
    return softmax_blocks.empty() ? std::vector<int>{output} : softmax_blocks;
  }

  void validate() const {
    if (input < 1 || output < 1) throw Error("mlp: input and output widths must be >= 1");
    if (hidden.empty()) throw Error("mlp: at least one hidden layer required");
    for (const auto& h : hidden)
      if (h.width < 1) throw Error("mlp: hidden width must be >= 1");
    if (head == Head::Softmax) {
      int total = 0;
      for (int b : blocks()) {
        if (b < 1) throw Error("mlp: softmax blocks must be non-empty");
        total += b;
      }
      if (total != output) throw Error("mlp: softmax blocks must cover the output");
    }
  }

  bool operator==(const MlpSpec& o) const {
    if (input != o.input || output != o.output || head != o.head ||
        blocks() != o.blocks() || hidden.size() != o.hidden.size())
      return false;
    for (std::size_t i = 0; i < hidden.size(); ++i)
      if (hidden[i].width != o.hidden[i].width ||
          hidden[i].batch_norm != o.hidden[i].batch_norm ||
          hidden[i].activation != o.hidden[i].activation)
        return false;
    return true;
  }
};

/// Actor: hidden affine -> BN -> ReLU, softmax output.
inline MlpSpec actor_spec(int input, int output, int width, int depth = 2,
                          std::vector<int> blocks = {}) {
  MlpSpec s;
  s.input = input;
  s.output = output;
  s.head = Head::Softmax;
  s.softmax_blocks = std::move(blocks);
  s.hidden.assign(depth, HiddenLayer{width, true, Activation::Relu});
  return s;
}

/// Critic: hidden affine -> ReLU, scalar linear output.
inline MlpSpec critic_spec(int input, int width, int depth = 3) {
  MlpSpec s;
  s.input = input;
  s.output = 1;
  s.head = Head::Linear;
  s.hidden.assign(depth, HiddenLayer{width, false, Activation::Relu});
  return s;
}

struct DenseLayer {
  Matrix w;  // fan_in x fan_out
  Vector b;
  // Batch norm; empty when the layer has none.
  Vector gamma, beta, running_mean, running_var;

  bool has_bn() const { return gamma.size() > 0; }
};

struct MlpParams {
  MlpSpec spec;
  std::vector<DenseLayer> layers;  // hidden layers then the output layer
};

/// Zeroed copy with the same shapes, used for gradients and moments.
inline MlpParams zeros_like(const MlpParams& p) {
  MlpParams z = p;
  for (auto& l : z.layers) {
    l.w.setZero();
    l.b.setZero();
    l.gamma.setZero();
    l.beta.setZero();
    l.running_mean.setZero();
    l.running_var.setZero();
  }
  return z;
}

/// Visits each trainable tensor of `a` alongside the matching tensor of `b`.
template <typename A, typename B, typename F>
void for_each_trainable(A& a, B& b, F&& f) {
  if (a.layers.size() != b.layers.size()) throw Error("mlp: layer count mismatch");
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    auto& x = a.layers[i];
    auto& y = b.layers[i];
    if (x.w.rows() != y.w.rows() || x.w.cols() != y.w.cols() ||
        x.gamma.size() != y.gamma.size())
      throw Error(fmt::format("mlp: shape mismatch in layer {}", i));
    f(i, x.w, y.w);
    f(i, x.b, y.b);
    if (x.has_bn()) {
      f(i, x.gamma, y.gamma);
      f(i, x.beta, y.beta);
    }
  }
}

inline MlpParams init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  MlpParams p;
  p.spec = spec;
  int fan_in = spec.input;
  for (const auto& h : spec.hidden) {
    DenseLayer l;
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    l.w = Matrix::NullaryExpr(fan_in, h.width, [&] { return u(rng); });
    l.b = Vector::Zero(h.width);
    if (h.batch_norm) {
      l.gamma = Vector::Ones(h.width);
      l.beta = Vector::Zero(h.width);
      l.running_mean = Vector::Zero(h.width);
      l.running_var = Vector::Ones(h.width);
    }
    p.layers.push_back(std::move(l));
    fan_in = h.width;
  }
  DenseLayer out;
  std::uniform_real_distribution<double> u(-3e-3, 3e-3);
  out.w = Matrix::NullaryExpr(fan_in, spec.output, [&] { return u(rng); });
  out.b = Vector::Zero(spec.output);
  p.layers.push_back(std::move(out));
  return p;
}

struct LayerCache {
  Matrix input;   // x
  Matrix xhat;    // normalized pre-activation (BN layers only)
  RowVector inv_std;
  Matrix pre;     // value fed to the activation
};

struct ForwardResult {
  Matrix output;
  Matrix logits;  // output layer before the head
  Phase phase = Phase::Eval;
  std::vector<LayerCache> layers;
  // Batch statistics observed in train phase, one entry per hidden layer.
  std::vector<RowVector> batch_mean, batch_var;
};

namespace detail {

inline void softmax_rows(const Matrix& logits, const std::vector<int>& blocks, Matrix& out) {
  out.resize(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    int start = 0;
    for (int w : blocks) {
      const auto z = logits.row(r).segment(start, w);
      const double m = z.maxCoeff();
      auto y = out.row(r).segment(start, w);
      y = (z.array() - m).exp().matrix();
      y /= y.sum();
      start += w;
    }
  }
}

}  // namespace detail

/// Pure forward pass. Train phase normalizes with batch statistics and
/// reports them in the result; call commit_batch_stats to fold them into
/// the running averages.
inline ForwardResult forward(const MlpParams& p, const Matrix& x, Phase phase) {
  const auto& spec = p.spec;
  if (x.cols() != spec.input)
    throw Error(fmt::format("mlp: input width {} but spec expects {}", x.cols(), spec.input));
  const bool any_bn = std::any_of(spec.hidden.begin(), spec.hidden.end(),
                                  [](const HiddenLayer& h) { return h.batch_norm; });
  if (phase == Phase::Train && any_bn && x.rows() < 2)
    throw Error("mlp: batch norm in train phase needs a batch of at least 2");

  ForwardResult r;
  r.phase = phase;
  r.layers.resize(p.layers.size());
  Matrix a = x;
  const auto batch = static_cast<double>(x.rows());
  for (std::size_t i = 0; i + 1 < p.layers.size(); ++i) {
    const auto& l = p.layers[i];
    auto& c = r.layers[i];
    c.input = a;
    Matrix z = a * l.w;
    z.rowwise() += l.b.transpose();
    if (l.has_bn()) {
      RowVector mean, var;
      if (phase == Phase::Train) {
        mean = z.colwise().mean();
        var = (z.rowwise() - mean).array().square().colwise().sum() / batch;
        r.batch_mean.push_back(mean);
        r.batch_var.push_back(var);
      } else {
        mean = l.running_mean.transpose();
        var = l.running_var.transpose();
      }
      c.inv_std = (var.array() + kBnEpsilon).rsqrt().matrix();
      c.xhat = ((z.rowwise() - mean).array().rowwise() * c.inv_std.array()).matrix();
      c.pre = ((c.xhat.array().rowwise() * l.gamma.transpose().array()).rowwise() +
               l.beta.transpose().array())
                  .matrix();
    } else {
      c.pre = std::move(z);
    }
    a = spec.hidden[i].activation == Activation::Relu ? c.pre.cwiseMax(0.0) : c.pre;
  }
  const auto& out = p.layers.back();
  r.layers.back().input = a;
  r.logits = a * out.w;
  r.logits.rowwise() += out.b.transpose();
  if (spec.head == Head::Softmax) {
    detail::softmax_rows(r.logits, spec.blocks(), r.output);
  } else {
    r.output = r.logits;
  }
  return r;
}

/// Running statistics update with momentum 0.99 from a train-phase pass.
/// Running variance uses the unbiased batch estimate.
inline void commit_batch_stats(MlpParams& p, const ForwardResult& r) {
  if (r.phase != Phase::Train) return;
  std::size_t k = 0;
  for (std::size_t i = 0; i + 1 < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    if (!l.has_bn()) continue;
    const double b = static_cast<double>(r.layers[i].input.rows());
    l.running_mean = kBnMomentum * l.running_mean + (1.0 - kBnMomentum) * r.batch_mean[k].transpose();
    l.running_var = kBnMomentum * l.running_var +
                    (1.0 - kBnMomentum) * (r.batch_var[k].transpose() * (b / (b - 1.0)));
    ++k;
  }
}

inline ForwardResult train_forward(MlpParams& p, const Matrix& x) {
  auto r = forward(p, x, Phase::Train);
  commit_batch_stats(p, r);
  return r;
}

struct Gradients {
  MlpParams params;
  Matrix input;
};

/// Backward pass from gradients with respect to the pre-head logits.
inline Gradients backward_from_logits(const MlpParams& p, const ForwardResult& r,
                                      const Matrix& logit_grads) {
  if (logit_grads.rows() != r.logits.rows() || logit_grads.cols() != r.logits.cols())
    throw Error("mlp: output gradient shape mismatch");
  Gradients g;
  g.params = zeros_like(p);
  Matrix d = logit_grads;
  for (std::size_t i = p.layers.size(); i-- > 0;) {
    const auto& l = p.layers[i];
    const auto& c = r.layers[i];
    auto& gl = g.params.layers[i];
    if (i + 1 < p.layers.size()) {
      // d is dL/d(activation output); go back through activation and BN.
      if (p.spec.hidden[i].activation == Activation::Relu)
        d = (c.pre.array() > 0.0).select(d, 0.0);
      if (l.has_bn()) {
        gl.gamma = (d.array() * c.xhat.array()).colwise().sum().transpose();
        gl.beta = d.colwise().sum().transpose();
        const Matrix dxhat = (d.array().rowwise() * l.gamma.transpose().array()).matrix();
        if (r.phase == Phase::Train) {
          const double n = static_cast<double>(d.rows());
          const RowVector sum_dxhat = dxhat.colwise().sum();
          const RowVector sum_dxhat_xhat = (dxhat.array() * c.xhat.array()).colwise().sum();
          Matrix t = (n * dxhat.array()).matrix();
          t.rowwise() -= sum_dxhat;
          t -= (c.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
          d = ((t.array().rowwise() * c.inv_std.array()) / n).matrix();
        } else {
          d = (dxhat.array().rowwise() * c.inv_std.array()).matrix();
        }
      }
    }
    gl.w.noalias() = c.input.transpose() * d;
    gl.b = d.colwise().sum().transpose();
    Matrix prev = d * l.w.transpose();
    d = std::move(prev);
  }
  g.input = std::move(d);
  return g;
}

/// Backward pass from gradients with respect to the network output (after
/// the softmax head, if any).
inline Gradients backward(const MlpParams& p, const ForwardResult& r, const Matrix& output_grads) {
  if (output_grads.rows() != r.output.rows() || output_grads.cols() != r.output.cols())
    throw Error("mlp: output gradient shape mismatch");
  if (p.spec.head == Head::Linear) return backward_from_logits(p, r, output_grads);
  Matrix dz(output_grads.rows(), output_grads.cols());
  for (Eigen::Index row = 0; row < dz.rows(); ++row) {
    int start = 0;
    for (int w : p.spec.blocks()) {
      const auto y = r.output.row(row).segment(start, w);
      const auto gy = output_grads.row(row).segment(start, w);
      const double dot = y.dot(gy);
      dz.row(row).segment(start, w) = (y.array() * (gy.array() - dot)).matrix();
      start += w;
    }
  }
  return backward_from_logits(p, r, dz);
}

enum class OptimizerKind { Adam, Sgd };

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain SGD.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(const MlpParams& like, double lr, OptimizerKind kind = OptimizerKind::Adam)
      : kind_(kind), lr_(lr), m_(zeros_like(like)), v_(zeros_like(like)) {}

  double learning_rate() const { return lr_; }
  std::int64_t steps() const { return t_; }

  void step(MlpParams& p, const MlpParams& grads) {
    for_each_trainable(p, grads, [](std::size_t i, const auto&, const auto& g) {
      if (!g.allFinite()) throw Error(fmt::format("non-finite gradient in layer {}", i));
    });
    ++t_;
    if (kind_ == OptimizerKind::Sgd) {
      for_each_trainable(p, grads, [&](std::size_t, auto& x, const auto& g) { x -= lr_ * g; });
      return;
    }
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    const auto adam = [&](auto& x, const auto& g, auto& m, auto& v) {
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
      x.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
    };
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
      auto& x = p.layers[i];
      const auto& g = grads.layers[i];
      auto& m = m_.layers[i];
      auto& v = v_.layers[i];
      adam(x.w, g.w, m.w, v.w);
      adam(x.b, g.b, m.b, v.b);
      if (x.has_bn()) {
        adam(x.gamma, g.gamma, m.gamma, v.gamma);
        adam(x.beta, g.beta, m.beta, v.beta);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  OptimizerKind kind_ = OptimizerKind::Adam;
  double lr_ = 1e-3;
  std::int64_t t_ = 0;
  MlpParams m_, v_;
};

/// target <- tau * online + (1 - tau) * target, running statistics included.
inline void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error("soft_update: tau must lie in (0, 1]");
  if (!(target.spec == online.spec)) throw Error("soft_update: spec mismatch");
  for_each_trainable(target, online, [&](std::size_t, auto& t, const auto& o) {
    t = tau * o + (1.0 - tau) * t;
  });
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto& t = target.layers[i];
    const auto& o = online.layers[i];
    if (!t.has_bn()) continue;
    t.running_mean = tau * o.running_mean + (1.0 - tau) * t.running_mean;
    t.running_var = tau * o.running_var + (1.0 - tau) * t.running_var;
  }
}

// ---------------------------------------------------------------------------
// Checkpoints: "CMRL-CKPT v1" followed by one JSON document. Numbers are
// written with 17 significant digits so every double survives the trip.

struct Checkpoint {
  std::string topology_hash;
  std::string role;  // "actor <node>", "actor single" or "critic"
  MlpParams params;
};

namespace detail {

inline void append_array(std::string& out, const double* data, Eigen::Index n) {
  out += '[';
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) out += ',';
    out += cmrl::detail::format_g17(data[i]);
  }
  out += ']';
}

inline Vector read_vector(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace detail

inline std::string serialize(const Checkpoint& ck) {
  const auto& spec = ck.params.spec;
  nlohmann::json js;
  js["input"] = spec.input;
  js["output"] = spec.output;
  js["head"] = spec.head == Head::Softmax ? "softmax" : "linear";
  js["softmax_blocks"] = spec.softmax_blocks;
  js["hidden"] = nlohmann::json::array();
  for (const auto& h : spec.hidden)
    js["hidden"].push_back({{"width", h.width},
                            {"batch_norm", h.batch_norm},
                            {"activation", h.activation == Activation::Relu ? "relu" : "none"}});

  std::string out = "CMRL-CKPT v1\n{";
  out += "\"topology_hash\":" + nlohmann::json(ck.topology_hash).dump();
  out += ",\"role\":" + nlohmann::json(ck.role).dump();
  out += ",\"spec\":" + js.dump();
  out += ",\"layers\":[";
  for (std::size_t i = 0; i < ck.params.layers.size(); ++i) {
    const auto& l = ck.params.layers[i];
    if (i > 0) out += ',';
    // Column-major, matching Eigen's storage.
    out += fmt::format("{{\"rows\":{},\"cols\":{},\"w\":", l.w.rows(), l.w.cols());
    detail::append_array(out, l.w.data(), l.w.size());
    out += ",\"b\":";
    detail::append_array(out, l.b.data(), l.b.size());
    if (l.has_bn()) {
      out += ",\"gamma\":";
      detail::append_array(out, l.gamma.data(), l.gamma.size());
      out += ",\"beta\":";
      detail::append_array(out, l.beta.data(), l.beta.size());
      out += ",\"running_mean\":";
      detail::append_array(out, l.running_mean.data(), l.running_mean.size());
      out += ",\"running_var\":";
      detail::append_array(out, l.running_var.data(), l.running_var.size());
    }
    out += '}';
  }
  out += "]}\n";
  return out;
}

/// Parses a checkpoint; a non-empty expected_hash must match the stored one.
inline Checkpoint deserialize(std::string_view text, std::string_view expected_hash = {}) {
  const auto nl = text.find('\n');
  if (nl == std::string_view::npos || cmrl::detail::trim(text.substr(0, nl)) != "CMRL-CKPT v1")
    throw Error("checkpoint: expected header 'CMRL-CKPT v1'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.substr(nl + 1));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: malformed document: ") + e.what());
  }
  Checkpoint ck;
  try {
    ck.topology_hash = j.at("topology_hash").get<std::string>();
    if (!expected_hash.empty() && ck.topology_hash != expected_hash)
      throw Error(fmt::format("checkpoint: topology hash {} does not match {}",
                              ck.topology_hash, expected_hash));
    ck.role = j.at("role").get<std::string>();
    const auto& js = j.at("spec");
    auto& spec = ck.params.spec;
    spec.input = js.at("input").get<int>();
    spec.output = js.at("output").get<int>();
    spec.head = js.at("head").get<std::string>() == "softmax" ? Head::Softmax : Head::Linear;
    spec.softmax_blocks = js.at("softmax_blocks").get<std::vector<int>>();
    for (const auto& h : js.at("hidden"))
      spec.hidden.push_back({h.at("width").get<int>(), h.at("batch_norm").get<bool>(),
                             h.at("activation").get<std::string>() == "relu"
                                 ? Activation::Relu
                                 : Activation::None});
    spec.validate();
    for (const auto& jl : j.at("layers")) {
      DenseLayer l;
      const auto rows = jl.at("rows").get<Eigen::Index>();
      const auto cols = jl.at("cols").get<Eigen::Index>();
      const Vector w = detail::read_vector(jl.at("w"));
      if (w.size() != rows * cols) throw Error("checkpoint: weight size mismatch");
      l.w = Eigen::Map<const Matrix>(w.data(), rows, cols);
      l.b = detail::read_vector(jl.at("b"));
      if (jl.contains("gamma")) {
        l.gamma = detail::read_vector(jl.at("gamma"));
        l.beta = detail::read_vector(jl.at("beta"));
        l.running_mean = detail::read_vector(jl.at("running_mean"));
        l.running_var = detail::read_vector(jl.at("running_var"));
      }
      ck.params.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
  // Shape check against the spec.
  const auto expected = init(ck.params.spec, 0);
  if (expected.layers.size() != ck.params.layers.size())
    throw Error("checkpoint: layer count does not match spec");
  for (std::size_t i = 0; i < expected.layers.size(); ++i) {
    const auto& a = expected.layers[i];
    const auto& b = ck.params.layers[i];
    if (a.w.rows() != b.w.rows() || a.w.cols() != b.w.cols() || a.b.size() != b.b.size() ||
        a.gamma.size() != b.gamma.size())
      throw Error(fmt::format("checkpoint: layer {} shape does not match spec", i));
  }
  return ck;
}

}  // namespace cmrl::nn
