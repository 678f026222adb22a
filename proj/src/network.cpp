// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/network.hpp"

#include <cmath>

#include "moe/random.hpp"

namespace moe {

std::vector<std::size_t> Gradients::layers() const {
  std::vector<std::size_t> out;
  for (const auto& [layer, _] : grads_) out.push_back(layer);
  return out;
}

void Gradients::accumulate(const Gradients& other) {
  for (const auto& [layer, g] : other.grads_) {
    auto it = grads_.find(layer);
    if (it == grads_.end()) {
      grads_.emplace(layer, g);
      continue;
    }
    auto& dst = it->second;
    if (dst.d_weights.shape() != g.d_weights.shape() || dst.d_biases.shape() != g.d_biases.shape())
      throw ShapeError("gradient shapes differ for layer " + std::to_string(layer));
    for (std::size_t i = 0; i < dst.d_weights.size(); ++i) dst.d_weights[i] += g.d_weights[i];
    for (std::size_t i = 0; i < dst.d_biases.size(); ++i) dst.d_biases[i] += g.d_biases[i];
  }
}

void Gradients::scale(double factor) {
  for (auto& [_, g] : grads_) {
    for (auto& v : g.d_weights.data()) v *= factor;
    for (auto& v : g.d_biases.data()) v *= factor;
  }
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  shapes_ = spec_.shapes();
  params_.resize(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& layer = spec_.layers[i];
    if (!layer.has_params()) continue;
    params_[i].weights = Tensor(layer.weight_shape());
    params_[i].biases = Tensor({layer.bias_count()});
  }
}

void Network::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& layer = spec_.layers[i];
    if (!layer.has_params()) continue;
    double fan_in = 0, fan_out = 0;
    if (layer.kind == LayerKind::conv) {
      const double area = static_cast<double>(layer.kernel * layer.kernel);
      fan_in = area * static_cast<double>(layer.in_channels);
      fan_out = area * static_cast<double>(layer.out_channels);
    } else {
      fan_in = static_cast<double>(layer.fan_in);
      fan_out = static_cast<double>(layer.fan_out);
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : params_[i].weights.data()) w = rng.uniform(-limit, limit);
    for (auto& b : params_[i].biases.data()) b = 0.0;
  }
  initialized_ = true;
}

std::vector<std::size_t> Network::param_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i)
    if (spec_.layers[i].has_params()) out.push_back(i);
  return out;
}

void Network::set_frozen(std::size_t layer, bool frozen) {
  if (!spec_.layers.at(layer).has_params())
    throw Error("layer '" + spec_.layers[layer].name + "' has no parameters to freeze");
  params_[layer].frozen = frozen;
}

void Network::freeze_all() {
  for (auto i : param_layers()) params_[i].frozen = true;
}

bool Network::all_frozen() const {
  for (auto i : param_layers())
    if (!params_[i].frozen) return false;
  return true;
}

std::vector<std::size_t> Network::trainable_layers() const {
  std::vector<std::size_t> out;
  for (auto i : param_layers())
    if (!params_[i].frozen) out.push_back(i);
  return out;
}

void Network::check_range(const Tensor& input, std::size_t begin, std::size_t& end) const {
  if (end == npos) end = spec_.layers.size();
  if (begin > end || end > spec_.layers.size())
    throw Error("network '" + spec_.name + "': invalid layer range [" + std::to_string(begin) +
                ", " + std::to_string(end) + ")");
  if (input.shape() != shapes_[begin])
    throw ShapeError("network '" + spec_.name + "': layer " + std::to_string(begin) +
                     " expects input " + shape_string(shapes_[begin]) + ", got " +
                     shape_string(input.shape()));
}

Tensor Network::run_layer(std::size_t i, const Tensor& x, Tape::Entry* record) const {
  const auto& layer = spec_.layers[i];
  switch (layer.kind) {
    case LayerKind::conv:
      return conv2d(x, params_[i], layer.stride);
    case LayerKind::maxpool: {
      auto pooled = maxpool(x, layer.window, layer.stride);
      if (record) record->argmax = std::move(pooled.argmax);
      return std::move(pooled.output);
    }
    case LayerKind::fully_connected:
      return fully_connected(x, params_[i]);
    case LayerKind::relu:
      return relu(x);
  }
  return x;
}

Tensor Network::forward(const Tensor& input, std::size_t begin, std::size_t end) const {
  check_range(input, begin, end);
  Tensor x = input;
  for (std::size_t i = begin; i < end; ++i) x = run_layer(i, x, nullptr);
  return x;
}

Tensor Network::forward(const Tensor& input, Tape& tape, std::size_t begin,
                        std::size_t end) const {
  check_range(input, begin, end);
  tape.clear();
  tape.owner = this;
  Tensor x = input;
  for (std::size_t i = begin; i < end; ++i) {
    Tape::Entry entry;
    entry.layer = i;
    entry.input = x;
    x = run_layer(i, x, &entry);
    tape.entries.push_back(std::move(entry));
  }
  return x;
}

Gradients Network::backward(const Tape& tape, const Tensor& upstream) const {
  if (tape.empty()) throw StateError("backward called without a recorded forward pass");
  if (tape.owner != this)
    throw StateError("tape was recorded by a different network than '" + spec_.name + "'");

  // Gradients are only needed down to the earliest trainable layer on the tape.
  std::size_t stop = tape.entries.size();
  for (std::size_t e = 0; e < tape.entries.size(); ++e) {
    const auto layer = tape.entries[e].layer;
    if (spec_.layers[layer].has_params() && !params_[layer].frozen) {
      stop = e;
      break;
    }
  }

  Gradients grads;
  if (stop == tape.entries.size()) return grads;

  Tensor g = upstream;
  for (std::size_t e = tape.entries.size(); e-- > stop;) {
    const auto& entry = tape.entries[e];
    const auto& layer = spec_.layers[entry.layer];
    const bool want_input = e > stop;
    const bool trainable = layer.has_params() && !params_[entry.layer].frozen;
    switch (layer.kind) {
      case LayerKind::conv: {
        auto cg = conv2d_backward(entry.input, params_[entry.layer], layer.stride, g,
                                  trainable, want_input);
        if (trainable) grads.set(entry.layer, {std::move(cg.d_weights), std::move(cg.d_biases)});
        g = std::move(cg.d_input);
        break;
      }
      case LayerKind::fully_connected: {
        auto fg = fully_connected_backward(entry.input, params_[entry.layer], g, trainable,
                                           want_input);
        if (trainable) grads.set(entry.layer, {std::move(fg.d_weights), std::move(fg.d_biases)});
        if (want_input) g = fg.d_input.reshaped(entry.input.shape());
        break;
      }
      case LayerKind::maxpool:
        if (want_input) g = maxpool_backward(entry.input.shape(), entry.argmax, g);
        break;
      case LayerKind::relu:
        if (want_input) g = relu_backward(entry.input, g);
        break;
    }
  }
  return grads;
}

std::size_t Network::weight_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.weights.size();
  return total;
}

}  // namespace moe
