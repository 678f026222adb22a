// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>

#include "moe/network.hpp"

namespace moe {

struct Velocity {
  Tensor weights;
  Tensor biases;
};

/// v <- momentum * v - learning_rate * g;  w <- w + v.
/// Throws StateError on a frozen target.
void sgd_step(LayerParams& params, const LayerGrad& grad, Velocity& velocity,
              double learning_rate, double momentum);

/// Momentum SGD over every layer present in a gradient set.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum)
      : learning_rate_(learning_rate), momentum_(momentum) {}

  void step(Network& net, const Gradients& grads);

 private:
  double learning_rate_;
  double momentum_;
  std::map<std::size_t, Velocity> velocity_;
};

}  // namespace moe
