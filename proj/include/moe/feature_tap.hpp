// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <memory>

#include "moe/dataset.hpp"
#include "moe/network.hpp"

namespace moe {

/// Read-only view of the GE prefix (first conv + pool) whose activations
/// feed LE and GN. Exposes activations and shapes only, never weights.
class FeatureTap {
 public:
  explicit FeatureTap(std::shared_ptr<const Network> ge, std::size_t source_layer = kTapLayer);

  /// GE layers [0, source_layer] applied to an image.
  Tensor activations(const Tensor& image) const;
  /// GE layers after the tap applied to tapped activations: the GE logits.
  Tensor finish_global(const Tensor& tapped) const;

  const Shape& shape() const { return shape_; }
  std::size_t source_layer() const { return source_layer_; }
  /// Number of prefix evaluations performed through this tap (and copies).
  std::uint64_t evaluations() const { return evaluations_->load(); }

 private:
  std::shared_ptr<const Network> ge_;
  std::size_t source_layer_;
  Shape shape_;
  std::shared_ptr<std::atomic<std::uint64_t>> evaluations_;
};

struct TapOutputs {
  Tensor ge_logits;
  Tensor le_logits;
  Tensor gn_logits;
  Tensor tap;
};

/// Evaluates the shared prefix once and reuses it for all three heads.
TapOutputs forward_with_tap(const FeatureTap& tap, const Network& le, const Network& gn,
                            const Tensor& image);

/// A dataset pushed through the frozen GE once: tapped activations and
/// GE logits per sample. LE/GN training and evaluation run from this.
struct TappedSet {
  std::vector<Tensor> taps;
  std::vector<Tensor> ge_logits;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  TappedSet subset(const std::vector<std::size_t>& indices) const;
};

TappedSet precompute(const FeatureTap& tap, const LabeledSet& set);

}  // namespace moe
