#pragma once

// Fully connected networks with hand-written reverse mode and Adam.
// Batches are column-major: one sample per column.

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stroke/common.hpp"

namespace stroke::nn {

enum class Activation { relu, tanh, linear };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "?";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

/// Layer widths including the input, e.g. {11, 256, 256, 3}.
struct Architecture {
  std::vector<int> widths;
  Activation hidden = Activation::relu;
  Activation output = Activation::tanh;

  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  std::size_t layer_count() const { return widths.size() - 1; }

  void validate() const {
    if (widths.size() < 2) throw std::invalid_argument("Architecture: need at least input and output widths");
    for (int w : widths)
      if (w < 1) throw std::invalid_argument("Architecture: layer widths must be >= 1");
  }

  bool operator==(const Architecture&) const = default;
};

struct Layer {
  Mat weight;  // out x in
  Vec bias;    // out
};

/// Parameters of an MLP. Gradients and Adam moments reuse the same shape.
struct Mlp {
  Architecture arch;
  std::vector<Layer> layers;

  static Mlp zeros(const Architecture& arch) {
    arch.validate();
    Mlp m{arch, {}};
    for (std::size_t l = 0; l < arch.layer_count(); ++l)
      m.layers.push_back({Mat::Zero(arch.widths[l + 1], arch.widths[l]), Vec::Zero(arch.widths[l + 1])});
    return m;
  }

  Mlp zeros_like() const { return zeros(arch); }

  bool same_shape(const Mlp& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].weight.rows() != o.layers[l].weight.rows() || layers[l].weight.cols() != o.layers[l].weight.cols() ||
          layers[l].bias.size() != o.layers[l].bias.size())
        return false;
    }
    return true;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  bool operator==(const Mlp& o) const {
    if (!(arch == o.arch) || !same_shape(o)) return false;
    for (std::size_t l = 0; l < layers.size(); ++l)
      if (layers[l].weight != o.layers[l].weight || layers[l].bias != o.layers[l].bias) return false;
    return true;
  }
};

using Gradients = Mlp;

/// He-uniform hidden layers, small uniform output layer, zero biases.
inline Mlp init(const Architecture& arch, Rng& rng) {
  Mlp m = Mlp::zeros(arch);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const bool last = l + 1 == m.layers.size();
    const double bound = last ? 3e-3 : std::sqrt(6.0 / arch.widths[l]);
    Mat& w = m.layers[l].weight;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -bound, bound);
  }
  return m;
}

/// Per-layer inputs and pre-activations from a forward pass.
struct Cache {
  std::vector<Mat> inputs;
  std::vector<Mat> pre;
  Mat output;
};

namespace detail {

inline Mat activate(const Mat& z, Activation a) {
  switch (a) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::linear: return z;
  }
  return z;
}

// dL/dz given dL/dy and z, for y = act(z).
inline Mat activation_backward(const Mat& z, const Mat& dy, Activation a) {
  switch (a) {
    case Activation::relu: return (z.array() > 0.0).select(dy, 0.0);
    case Activation::tanh: return (dy.array() * (1.0 - z.array().tanh().square())).matrix();
    case Activation::linear: return dy;
  }
  return dy;
}

}  // namespace detail

inline Cache forward(const Mlp& net, const Mat& x) {
  if (x.rows() != net.arch.input_width())
    throw std::invalid_argument("forward: input has " + std::to_string(x.rows()) + " rows, network expects " +
                                std::to_string(net.arch.input_width()));
  Cache c;
  c.inputs.reserve(net.layers.size());
  c.pre.reserve(net.layers.size());
  Mat a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    Mat z = layer.weight * a;
    z.colwise() += layer.bias;
    c.inputs.push_back(std::move(a));
    const Activation act = l + 1 == net.layers.size() ? net.arch.output : net.arch.hidden;
    a = detail::activate(z, act);
    c.pre.push_back(std::move(z));
  }
  c.output = std::move(a);
  return c;
}

inline Mat predict(const Mlp& net, const Mat& x) { return forward(net, x).output; }

struct Backward {
  Gradients grads;
  Mat dx;
};

/// Reverse pass for L with dL/dy = `dy`; gradients are summed over columns.
inline Backward backward(const Mlp& net, const Cache& cache, const Mat& dy) {
  if (cache.pre.size() != net.layers.size() || cache.output.rows() != dy.rows() || cache.output.cols() != dy.cols())
    throw std::invalid_argument("backward: cache does not match network or upstream gradient");
  Backward out{net.zeros_like(), {}};
  Mat delta = dy;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Activation act = li + 1 == net.layers.size() ? net.arch.output : net.arch.hidden;
    const Mat dz = detail::activation_backward(cache.pre[li], delta, act);
    out.grads.layers[li].weight.noalias() = dz * cache.inputs[li].transpose();
    out.grads.layers[li].bias = dz.rowwise().sum();
    delta.noalias() = net.layers[li].weight.transpose() * dz;
  }
  out.dx = std::move(delta);
  return out;
}

struct AdamState {
  Mlp m;
  Mlp v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const Mlp& net) { return {net.zeros_like(), net.zeros_like()}; }
};

/// Adam with bias-corrected moments: p -= lr * m_hat / (sqrt(v_hat) + eps).
inline void adam_step(Mlp& net, const Gradients& g, AdamState& st, double lr) {
  if (!net.same_shape(g) || !net.same_shape(st.m) || !net.same_shape(st.v))
    throw std::invalid_argument("adam_step: parameter, gradient and moment shapes differ");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  auto update = [&](auto& p, const auto& grad, auto& m, auto& v) {
    m = st.beta1 * m + (1.0 - st.beta1) * grad;
    v = st.beta2 * v + (1.0 - st.beta2) * grad.cwiseProduct(grad);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + st.eps);
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    update(net.layers[l].weight, g.layers[l].weight, st.m.layers[l].weight, st.v.layers[l].weight);
    update(net.layers[l].bias, g.layers[l].bias, st.m.layers[l].bias, st.v.layers[l].bias);
  }
}

}  // namespace stroke::nn
