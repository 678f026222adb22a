// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/optim.hpp"

namespace moe {
namespace {

void update(Tensor& w, const Tensor& g, Tensor& v, double lr, double mu) {
  if (g.shape() != w.shape())
    throw ShapeError("sgd_step: gradient " + shape_string(g.shape()) + " vs parameter " +
                     shape_string(w.shape()));
  if (v.shape() != w.shape()) v = Tensor::zeros_like(w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = mu * v[i] - lr * g[i];
    w[i] += v[i];
  }
}

}  // namespace

void sgd_step(LayerParams& params, const LayerGrad& grad, Velocity& velocity,
              double learning_rate, double momentum) {
  if (params.frozen) throw StateError("sgd_step: refusing to update frozen parameters");
  update(params.weights, grad.d_weights, velocity.weights, learning_rate, momentum);
  update(params.biases, grad.d_biases, velocity.biases, learning_rate, momentum);
}

void SgdOptimizer::step(Network& net, const Gradients& grads) {
  for (auto layer : grads.layers())
    sgd_step(net.mutable_params(layer), grads.at(layer), velocity_[layer], learning_rate_,
             momentum_);
}

}  // namespace moe
