// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/feature_tap.hpp"

namespace moe {

FeatureTap::FeatureTap(std::shared_ptr<const Network> ge, std::size_t source_layer)
    : ge_(std::move(ge)),
      source_layer_(source_layer),
      evaluations_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (!ge_) throw Error("feature tap needs a global expert");
  if (source_layer_ >= ge_->layer_count())
    throw Error("tap layer " + std::to_string(source_layer_) + " is outside the GE");
  shape_ = ge_->spec().shapes()[source_layer_ + 1];
}

Tensor FeatureTap::activations(const Tensor& image) const {
  evaluations_->fetch_add(1);
  return ge_->forward(image, 0, source_layer_ + 1);
}

Tensor FeatureTap::finish_global(const Tensor& tapped) const {
  return ge_->forward(tapped, source_layer_ + 1);
}

TapOutputs forward_with_tap(const FeatureTap& tap, const Network& le, const Network& gn,
                            const Tensor& image) {
  for (const Network* head : {&le, &gn})
    if (head->spec().input_shape != tap.shape())
      throw ShapeError("network '" + head->spec().name + "' expects input " +
                       shape_string(head->spec().input_shape) + " but the tap provides " +
                       shape_string(tap.shape()));
  TapOutputs out;
  out.tap = tap.activations(image);
  out.ge_logits = tap.finish_global(out.tap);
  out.le_logits = le.forward(out.tap);
  out.gn_logits = gn.forward(out.tap);
  return out;
}

TappedSet TappedSet::subset(const std::vector<std::size_t>& indices) const {
  TappedSet out;
  out.class_count = class_count;
  for (auto i : indices) {
    out.taps.push_back(taps.at(i));
    out.ge_logits.push_back(ge_logits.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

TappedSet precompute(const FeatureTap& tap, const LabeledSet& set) {
  set.validate();
  TappedSet out;
  out.class_count = set.class_count;
  out.labels = set.labels;
  out.taps.reserve(set.size());
  out.ge_logits.reserve(set.size());
  for (const auto& img : set.images) {
    out.taps.push_back(tap.activations(img));
    out.ge_logits.push_back(tap.finish_global(out.taps.back()));
  }
  return out;
}

}  // namespace moe
