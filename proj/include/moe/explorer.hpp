// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "moe/cost_model.hpp"
#include "moe/trainer.hpp"

namespace moe {

/// One pooled-size configuration (n = m): its size overhead and, when
/// trained, the mean MOE accuracies (percent) across users.
struct SweepRow {
  std::size_t n = 0;
  double weight_overhead_pct = 0.0;
  std::optional<double> customized_accuracy;
  std::optional<double> generic_accuracy;
};

/// Customized data of one user, already pushed through the GE.
struct SweepUser {
  TappedSet train;
  TappedSet test;
  /// gn_mixture of `train` and generic samples.
  TappedSet gn_mixture;
};

struct SweepData {
  std::vector<SweepUser> users;
  TappedSet generic_test;
};

struct SweepConfig {
  TrainConfig le;
  TrainConfig gn;
  std::size_t classes = 62;
};

/// Overhead-only rows (no training), ordered by descending n.
std::vector<SweepRow> sweep_overheads(std::vector<std::size_t> candidates, std::size_t classes);

/// For each n: fresh LE(n) and GN(n) per user, steps 2 and 3, evaluation.
/// Rows ordered by descending n.
std::vector<SweepRow> sweep(std::shared_ptr<const Network> ge, std::vector<std::size_t> candidates,
                            const SweepData& data, const SweepConfig& cfg);

/// Smallest-overhead row whose customized accuracy is within `tolerance`
/// points of the best one. Rows without accuracies are ignored.
std::size_t select_config(const std::vector<SweepRow>& rows, double tolerance);

std::string sweep_csv(const std::vector<SweepRow>& rows);
void to_json(nlohmann::json& j, const SweepRow& r);

}  // namespace moe
