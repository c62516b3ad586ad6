#pragma once

#include <algorithm>
#include <cmath>

#include "stroke/nn.hpp"

namespace stroke::check {

struct GradCheck {
  double max_rel_error = 0.0;
  long parameters = 0;
};

// Loss L = sum(c .* net(x)) so that dL/dy = c.
inline double probe_loss(const nn::Mlp& net, const Mat& x, const Mat& c) {
  return (nn::predict(net, x).array() * c.array()).sum();
}

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
}

/// Compares every parameter and input gradient with central differences.
inline GradCheck gradient_check(const nn::Mlp& net, const Mat& x, const Mat& c, double h = 1e-5) {
  const nn::Backward b = nn::backward(net, nn::forward(net, x), c);
  GradCheck out;
  nn::Mlp probe = net;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto visit = [&](auto& param, const auto& grad) {
      for (Eigen::Index i = 0; i < param.size(); ++i) {
        const double orig = param.data()[i];
        param.data()[i] = orig + h;
        const double lp = probe_loss(probe, x, c);
        param.data()[i] = orig - h;
        const double lm = probe_loss(probe, x, c);
        param.data()[i] = orig;
        out.max_rel_error = std::max(out.max_rel_error, rel_error(grad.data()[i], (lp - lm) / (2 * h)));
        ++out.parameters;
      }
    };
    visit(probe.layers[l].weight, b.grads.layers[l].weight);
    visit(probe.layers[l].bias, b.grads.layers[l].bias);
  }
  Mat xp = x;
  for (Eigen::Index i = 0; i < xp.size(); ++i) {
    const double orig = xp.data()[i];
    xp.data()[i] = orig + h;
    const double lp = probe_loss(net, xp, c);
    xp.data()[i] = orig - h;
    const double lm = probe_loss(net, xp, c);
    xp.data()[i] = orig;
    out.max_rel_error = std::max(out.max_rel_error, rel_error(b.dx.data()[i], (lp - lm) / (2 * h)));
  }
  return out;
}

/// Random small network (widths <= 16) with random biases so every path is exercised.
inline nn::Mlp random_small_net(Rng& rng, nn::Activation output) {
  std::uniform_int_distribution<int> width(1, 16), depth(1, 3);
  nn::Architecture arch;
  const int hidden_layers = depth(rng);
  arch.widths.push_back(width(rng));
  for (int i = 0; i < hidden_layers; ++i) arch.widths.push_back(width(rng));
  arch.widths.push_back(width(rng));
  arch.output = output;
  nn::Mlp net = nn::init(arch, rng);
  for (auto& l : net.layers) {
    l.weight *= 1.0 / std::max(1e-3, l.weight.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = uniform(rng, -0.5, 0.5);
  }
  return net;
}

/// Runs `nets` random checks, alternating tanh and linear outputs.
inline GradCheck gradient_suite(std::uint64_t seed, int nets) {
  Rng rng(seed);
  GradCheck worst;
  for (int k = 0; k < nets; ++k) {
    const nn::Activation out = k % 2 ? nn::Activation::linear : nn::Activation::tanh;
    const nn::Mlp net = random_small_net(rng, out);
    const int batch = 1 + static_cast<int>(rng() % 4);
    Mat x(net.arch.input_width(), batch), c(net.arch.output_width(), batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = uniform(rng, -1, 1);
    const GradCheck g = gradient_check(net, x, c);
    worst.max_rel_error = std::max(worst.max_rel_error, g.max_rel_error);
    worst.parameters += g.parameters;
  }
  return worst;
}

}  // namespace stroke::check
