// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "moe/random.hpp"

namespace moe {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    c.entries_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path.string());
}

std::string Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_number<double>(key, get(key)) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? parse_number<std::uint64_t>(key, get(key)) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::size_t> Config::get_list(const std::string& key,
                                          const std::vector<std::size_t>& fallback) const {
  return has(key) ? parse_index_list(get(key)) : fallback;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto lo = parse_number<std::size_t>("list", trim(item.substr(0, dash)));
      const auto hi = parse_number<std::size_t>("list", trim(item.substr(dash + 1)));
      if (hi < lo) throw ConfigError("bad range '" + item + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(parse_number<std::size_t>("list", item));
    }
  }
  return out;
}

std::uint64_t Experiment::seed_for(const std::string& name) const {
  return derive_seed(seed, name);
}

Experiment experiment_from_config(const Config& c, const std::filesystem::path& origin) {
  Experiment e;
  e.config_path = origin;
  const auto base = origin.empty() ? std::filesystem::path{} : origin.parent_path();
  auto path = [&](const std::string& key) -> std::filesystem::path {
    if (!c.has(key)) return {};
    std::filesystem::path p = c.get(key);
    return p.is_relative() && !base.empty() ? base / p : p;
  };

  e.seed = c.get_u64("seed", e.seed);
  e.classes = c.get_u64("classes", e.classes);
  if (c.has("out")) e.out_dir = path("out");
  e.generic_train_images = path("generic.train_images");
  e.generic_train_labels = path("generic.train_labels");
  e.generic_test_images = path("generic.test_images");
  e.generic_test_labels = path("generic.test_labels");
  e.user_source_images = path("users.source_images");
  e.user_source_labels = path("users.source_labels");
  e.generic_train_per_class = c.get_u64("generic.train_per_class", 0);
  e.generic_test_per_class = c.get_u64("generic.test_per_class", 0);

  e.users = c.get_list("users", e.users);
  e.train_per_class = c.get_u64("user.train_per_class", e.train_per_class);
  e.test_per_class = c.get_u64("user.test_per_class", e.test_per_class);
  auto& d = e.distortion;
  d.rotate_min = c.get_double("distort.rotate_min", d.rotate_min);
  d.rotate_max = c.get_double("distort.rotate_max", d.rotate_max);
  d.shear_min = c.get_double("distort.shear_min", d.shear_min);
  d.shear_max = c.get_double("distort.shear_max", d.shear_max);
  d.elastic_min = c.get_double("distort.elastic_min", d.elastic_min);
  d.elastic_max = c.get_double("distort.elastic_max", d.elastic_max);
  d.stroke_min = c.get_double("distort.stroke_min", d.stroke_min);
  d.stroke_max = c.get_double("distort.stroke_max", d.stroke_max);

  auto train_cfg = [&](const std::string& prefix, TrainConfig t) {
    t.learning_rate = c.get_double(prefix + ".learning_rate", t.learning_rate);
    t.momentum = c.get_double(prefix + ".momentum", t.momentum);
    t.batch_size = c.get_u64(prefix + ".batch_size", t.batch_size);
    t.epochs = c.get_u64(prefix + ".epochs", t.epochs);
    t.validation_fraction = c.get_double(prefix + ".validation_fraction", t.validation_fraction);
    t.early_stop_patience = c.get_u64(prefix + ".patience", t.early_stop_patience);
    t.validate();
    return t;
  };
  e.ge = train_cfg("ge", {0.01, 0.9, 32, 2, 0.1, 0, 5});
  e.le = train_cfg("le", {0.01, 0.9, 32, 60, 0.1, 0, 10});
  e.gn = train_cfg("gn", {0.01, 0.9, 32, 60, 0.1, 0, 10});
  e.finetune = train_cfg("finetune", {0.01, 0.9, 32, 60, 0.1, 0, 10});
  e.run_baseline = c.get_bool("customize.baseline", e.run_baseline);

  e.n = c.get_u64("moe.n", e.n);
  e.m = c.get_u64("moe.m", e.m);
  e.sweep_candidates = c.get_list("sweep.candidates", e.sweep_candidates);
  e.sweep_tolerance = c.get_double("sweep.tolerance", e.sweep_tolerance);

  e.cost.energy_per_mac = c.get_double("cost.energy_per_mac", e.cost.energy_per_mac);
  e.cost.energy_per_sram_access = c.get_double("cost.energy_per_sram", e.cost.energy_per_sram_access);
  e.cost.energy_per_dram_access = c.get_double("cost.energy_per_dram", e.cost.energy_per_dram_access);
  e.cost.sram_model = sram_model_from_string(c.get("cost.sram_model", to_string(e.cost.sram_model)));
  e.cost.validate();

  if (e.classes < 2) throw ConfigError("classes must be at least 2");
  if (e.users.empty()) throw ConfigError("at least one user is required");
  for (auto u : e.users)
    if (u == 0) throw ConfigError("user ids start at 1");
  return e;
}

}  // namespace moe
