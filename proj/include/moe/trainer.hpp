// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "moe/dataset.hpp"
#include "moe/moe.hpp"

namespace moe {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;
  std::size_t early_stop_patience = 5;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainReport {
  std::string network;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  std::vector<EpochStats> epochs;
  /// 1-based epoch whose parameters were restored.
  std::size_t best_epoch = 0;
  std::string checkpoint;
  double wall_seconds = 0.0;

  const EpochStats& best() const { return epochs.at(best_epoch - 1); }
};

void to_json(nlohmann::json& j, const EpochStats& e);
void to_json(nlohmann::json& j, const TrainReport& r);

/// Mini-batch momentum SGD over the trainable layers of `net`, feeding
/// `inputs` into layer `start_layer`. A stratified validation slice drives
/// early stopping on validation accuracy (ties broken by lower loss); the
/// best epoch's parameters are restored on return.
TrainReport fit(Network& net, std::size_t start_layer, const std::vector<Tensor>& inputs,
                const std::vector<std::size_t>& labels, std::size_t class_count,
                const TrainConfig& cfg);

/// Mean loss and accuracy of `net` from `start_layer` on the given samples.
std::pair<double, double> evaluate_loss(const Network& net, std::size_t start_layer,
                                        const std::vector<Tensor>& inputs,
                                        const std::vector<std::size_t>& labels);

/// Step 1: trains every GE layer on generic data, then freezes the GE.
TrainReport train_ge(Network& ge, const LabeledSet& generic_train, const TrainConfig& cfg);

/// Step 2: only LE's fully connected layer learns, from tapped GE features.
TrainReport train_le(const FeatureTap& tap, const Network& ge, Network& le,
                     const LabeledSet& customized_train, const TrainConfig& cfg);
TrainReport train_le(const Network& ge, Network& le, const TappedSet& customized_train,
                     const TrainConfig& cfg);

/// Step 3: GN learns dataset origin (0 generic, 1 customized) from a gn_mixture set.
TrainReport train_gn(const FeatureTap& tap, const Network& ge, Network& gn,
                     const LabeledSet& mixture, const TrainConfig& cfg);
TrainReport train_gn(const Network& ge, Network& gn, const TappedSet& mixture,
                     const TrainConfig& cfg);

struct AlternativeResult {
  TrainReport le;
  TrainReport gn;
  /// Size of R2 u R4 on the customized training set.
  std::size_t mistake_count = 0;
  std::size_t gn_positive = 0;
  std::size_t gn_negative = 0;
};

/// GE-mistake mode: LE learns only the samples GE misclassifies; GN learns
/// to flag them (1) against GE-correct customized samples plus as many
/// generic samples as there are customized ones (0).
AlternativeResult train_alternative(const FeatureTap& tap, const Network& ge, Network& le,
                                    Network& gn, const LabeledSet& customized_train,
                                    const LabeledSet& generic_pool, const TrainConfig& cfg);

/// Baseline: retrain both FC layers of an unfrozen GE copy on customized
/// data with its convolutional layers frozen.
TrainReport finetune_baseline(Network& ge_copy, const LabeledSet& customized_train,
                              const TrainConfig& cfg);

/// Post-training accuracies of every component, in percent.
struct ComponentMetrics {
  double ge_accuracy = 0.0;          // customized test
  double le_accuracy = 0.0;          // customized test
  double gn_accuracy = 0.0;          // balanced routing accuracy, both test sets
  double overall_customized = 0.0;   // MOE on customized test
  std::optional<double> complement;  // LE | GE wrong, customized test
  double overall_generic = 0.0;      // MOE on generic test
  double ge_generic = 0.0;           // GE alone on generic test
  std::size_t customized_count = 0;
  std::size_t generic_count = 0;
};

void to_json(nlohmann::json& j, const ComponentMetrics& m);
void from_json(const nlohmann::json& j, ComponentMetrics& m);

ComponentMetrics evaluate_components(const MoeModel& moe, const TappedSet& customized_test,
                                     const TappedSet& generic_test);
ComponentMetrics evaluate_components(const MoeModel& moe, const LabeledSet& customized_test,
                                     const LabeledSet& generic_test);

/// Recomputes the metric record from exported per-sample traces.
ComponentMetrics metrics_from_trace(const std::vector<TraceRecord>& customized,
                                    const std::vector<TraceRecord>& generic);

/// Plain accuracy (percent) of a standalone network on a labeled set.
double accuracy(const Network& net, const LabeledSet& set);

}  // namespace moe
