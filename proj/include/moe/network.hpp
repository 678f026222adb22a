// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "moe/layers.hpp"
#include "moe/network_spec.hpp"

namespace moe {

class Network;

/// Activations recorded by a forward pass, consumed by Network::backward.
struct Tape {
  struct Entry {
    std::size_t layer = 0;
    Tensor input;
    std::vector<std::size_t> argmax;
  };
  const Network* owner = nullptr;
  std::vector<Entry> entries;

  bool empty() const { return entries.empty(); }
  void clear() {
    owner = nullptr;
    entries.clear();
  }
};

struct LayerGrad {
  Tensor d_weights;
  Tensor d_biases;
};

/// Gradients keyed by layer index. Frozen layers never appear.
class Gradients {
 public:
  bool contains(std::size_t layer) const { return grads_.count(layer) != 0; }
  const LayerGrad& at(std::size_t layer) const { return grads_.at(layer); }
  std::vector<std::size_t> layers() const;
  std::size_t size() const { return grads_.size(); }

  void set(std::size_t layer, LayerGrad g) { grads_[layer] = std::move(g); }
  /// Element-wise accumulation; missing layers are copied in.
  void accumulate(const Gradients& other);
  void scale(double factor);

 private:
  std::map<std::size_t, LayerGrad> grads_;
};

/// Runtime network instantiated from a NetworkSpec. Owns one LayerParams per
/// layer (empty tensors for parameterless layers).
class Network {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  /// Zero-valued parameters; not considered initialized until
  /// initialize() or set_params() is called.
  explicit Network(NetworkSpec spec);

  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  void initialize(std::uint64_t seed);
  bool initialized() const { return initialized_; }
  void mark_initialized() { initialized_ = true; }

  const NetworkSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return spec_.layers.size(); }

  const LayerParams& params(std::size_t layer) const { return params_.at(layer); }
  /// Mutable access; the caller is responsible for honoring `frozen`.
  LayerParams& mutable_params(std::size_t layer) { return params_.at(layer); }
  std::vector<std::size_t> param_layers() const;

  void set_frozen(std::size_t layer, bool frozen);
  void freeze_all();
  bool all_frozen() const;
  std::vector<std::size_t> trainable_layers() const;

  /// Runs layers [begin, end). `input` must have the shape feeding `begin`.
  Tensor forward(const Tensor& input, std::size_t begin = 0, std::size_t end = npos) const;
  Tensor forward(const Tensor& input, Tape& tape, std::size_t begin = 0,
                 std::size_t end = npos) const;

  /// Reverse-mode pass over a recorded tape. Only trainable layers receive
  /// gradients; propagation stops below the earliest trainable layer.
  Gradients backward(const Tape& tape, const Tensor& upstream) const;

  /// Allocated weight elements, biases excluded.
  std::size_t weight_count() const;

 private:
  Tensor run_layer(std::size_t layer, const Tensor& x, Tape::Entry* record) const;
  void check_range(const Tensor& input, std::size_t begin, std::size_t& end) const;

  NetworkSpec spec_;
  std::vector<Shape> shapes_;
  std::vector<LayerParams> params_;
  bool initialized_ = false;
};

}  // namespace moe
