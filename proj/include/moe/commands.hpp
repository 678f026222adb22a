// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <vector>

#include "moe/config.hpp"
#include "moe/explorer.hpp"

namespace moe {

// Pipeline steps behind the moectl subcommands. Each writes its declared
// outputs under Experiment::out_dir and throws on any failure.

/// Generic data after class restriction, balancing and optional capping.
struct GenericData {
  LabeledSet train;
  /// Generic test samples used for evaluation.
  LabeledSet test;
  /// Samples never seen by GE training, from which users are synthesized.
  LabeledSet user_pool;
};

GenericData load_generic(const Experiment& exp);

struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path ge_checkpoint() const { return root / "ge.moew"; }
  std::filesystem::path ge_report() const { return root / "ge_report.json"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path dataset_manifest() const { return root / "datasets.json"; }
  std::filesystem::path metrics() const { return root / "metrics.json"; }
  std::filesystem::path sweep_csv() const { return root / "sweep.csv"; }
  std::filesystem::path sweep_json() const { return root / "sweep.json"; }
  std::filesystem::path overhead_json() const { return root / "overhead.json"; }
  std::filesystem::path overhead_txt() const { return root / "overhead.txt"; }
  std::filesystem::path report() const { return root / "report.txt"; }
  std::filesystem::path user_dir(std::size_t user) const {
    return root / "users" / std::to_string(user);
  }
};

struct UserResult {
  std::size_t user_id = 0;
  ComponentMetrics metrics;
  /// Fine-tuning baseline accuracies (percent), when enabled.
  std::optional<double> finetune_customized;
  std::optional<double> finetune_generic;
};

struct CustomizeResult {
  std::vector<UserResult> users;
  ComponentMetrics average;
};

/// Trains and freezes the GE; writes ge.moew, ge_report.json, datasets.json.
TrainReport cmd_train_ge(const Experiment& exp, std::ostream& log);

/// Steps 2-3 for every requested user; writes per-user LE/GN checkpoints,
/// metrics, traces and the aggregated metrics.json.
CustomizeResult cmd_customize(const Experiment& exp, std::ostream& log);

/// Overhead/accuracy sweep over pooled sizes. dry_run computes only the overhead column.
std::vector<SweepRow> cmd_sweep(const Experiment& exp, bool dry_run, std::ostream& log);

OverheadReport cmd_overhead(const Experiment& exp, std::ostream& log);

/// Rewrites the per-sample traces of one customized user; returns the
/// number of customized-test trace lines.
std::size_t cmd_eval(const Experiment& exp, std::size_t user_id, std::ostream& log);

/// Prints the aggregated tables from whatever results exist.
void cmd_report(const Experiment& exp, std::ostream& log);

/// Writes a procedural glyph corpus as four IDX files into `dir`.
void cmd_synth_corpus(const std::filesystem::path& dir, std::size_t classes,
                      std::size_t train_per_class, std::size_t test_per_class,
                      std::uint64_t seed, std::ostream& log);

std::string format_metrics_table(const CustomizeResult& r);

}  // namespace moe
