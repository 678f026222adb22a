// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moe/cost_model.hpp"
#include "moe/distort.hpp"
#include "moe/trainer.hpp"

namespace moe {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Flat `key = value` file. '#' starts a comment; blank lines are ignored.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_list(const std::string& key,
                                    const std::vector<std::size_t>& fallback) const;

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

std::vector<std::size_t> parse_index_list(const std::string& text);

/// Fully typed experiment parameters. All randomness derives from `seed`.
struct Experiment {
  std::filesystem::path config_path;
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 2018;
  std::size_t classes = 62;

  std::filesystem::path generic_train_images, generic_train_labels;
  std::filesystem::path generic_test_images, generic_test_labels;
  /// Optional source of customized samples; otherwise half of the generic
  /// test set is held out for synthetic users.
  std::filesystem::path user_source_images, user_source_labels;
  /// 0 keeps every balanced sample.
  std::size_t generic_train_per_class = 0;
  std::size_t generic_test_per_class = 0;

  std::vector<std::size_t> users{1};
  std::size_t train_per_class = 30;
  std::size_t test_per_class = 10;
  DistortionRanges distortion;

  TrainConfig ge, le, gn, finetune;
  bool run_baseline = true;

  std::size_t n = 3;
  std::size_t m = 3;
  std::vector<std::size_t> sweep_candidates{12, 6, 4, 3, 2, 1};
  double sweep_tolerance = 1.0;

  CostConfig cost;

  std::uint64_t seed_for(const std::string& name) const;
};

Experiment experiment_from_config(const Config& cfg, const std::filesystem::path& origin = {});

}  // namespace moe
