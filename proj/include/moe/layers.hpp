// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "moe/tensor.hpp"

namespace moe {

/// Trainable parameters of one layer. Frozen parameters are never mutated by
/// an optimizer step and receive no gradient buffers.
struct LayerParams {
  Tensor weights;
  Tensor biases;
  bool frozen = false;
};

// Kernel layouts:
//   conv2d          weights k x k x Cin x Cout, biases Cout
//   fully_connected weights Nin x Nout,         biases Nout

/// Valid (unpadded) cross-correlation of an H x W x Cin input.
Tensor conv2d(const Tensor& input, const LayerParams& params, std::size_t stride);

struct ConvGrads {
  Tensor d_input;
  Tensor d_weights;
  Tensor d_biases;
};

/// d_input is skipped when want_input is false (first layer of a network).
ConvGrads conv2d_backward(const Tensor& input, const LayerParams& params,
                          std::size_t stride, const Tensor& d_output,
                          bool want_params, bool want_input);

struct PoolResult {
  Tensor output;
  /// Flat input offset of the maximum of each output element.
  std::vector<std::size_t> argmax;
};

PoolResult maxpool(const Tensor& input, std::size_t window, std::size_t stride);

/// Routes every upstream element to the input position that produced it.
Tensor maxpool_backward(const Shape& input_shape,
                        const std::vector<std::size_t>& argmax,
                        const Tensor& d_output);

/// W^T x + b over the flattened input.
Tensor fully_connected(const Tensor& input, const LayerParams& params);

struct FcGrads {
  Tensor d_input;
  Tensor d_weights;
  Tensor d_biases;
};

FcGrads fully_connected_backward(const Tensor& input, const LayerParams& params,
                                 const Tensor& d_output, bool want_params,
                                 bool want_input);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& d_output);

struct LossResult {
  double loss = 0.0;
  std::vector<double> probabilities;
  /// Gradient of the loss with respect to the logits.
  Tensor d_logits;
};

LossResult softmax_cross_entropy(const Tensor& logits, std::size_t label);

std::vector<double> softmax(std::span<const double> logits);

/// Multiplies performed by conv2d and fully_connected forward passes on the
/// calling thread since the last reset.
std::uint64_t mac_count();
void reset_mac_count();

}  // namespace moe
