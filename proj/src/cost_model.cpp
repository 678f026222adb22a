// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/cost_model.hpp"

#include <cstdio>

namespace moe {

std::string to_string(SramModel m) {
  return m == SramModel::weights_only ? "weights_only" : "weights_plus_activations";
}

SramModel sram_model_from_string(const std::string& s) {
  if (s == "weights_only") return SramModel::weights_only;
  if (s == "weights_plus_activations") return SramModel::weights_plus_activations;
  throw Error("unknown SRAM model '" + s + "'");
}

void CostConfig::validate() const {
  if (!(energy_per_mac >= 0.0) || !(energy_per_sram_access >= 0.0) ||
      !(energy_per_dram_access >= 0.0))
    throw Error("energy costs must be non-negative");
}

std::uint64_t count_weights(const NetworkSpec& spec) {
  std::uint64_t total = 0;
  for (const auto& layer : spec.layers) total += shape_size(layer.weight_shape()) * layer.has_params();
  return total;
}

std::uint64_t count_macs(const NetworkSpec& spec) {
  if (spec.layers.empty()) return 0;
  const auto shapes = spec.shapes();
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const auto& out = shapes[i + 1];
    if (layer.kind == LayerKind::conv)
      total += static_cast<std::uint64_t>(out[0]) * out[1] * layer.kernel * layer.kernel *
               layer.in_channels * layer.out_channels;
    else if (layer.kind == LayerKind::fully_connected)
      total += static_cast<std::uint64_t>(layer.fan_in) * layer.fan_out;
  }
  return total;
}

std::uint64_t count_sram(const NetworkSpec& spec, SramModel model) {
  std::uint64_t total = count_weights(spec);
  if (model == SramModel::weights_only || spec.layers.empty()) return total;
  const auto shapes = spec.shapes();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!(i == 0 && spec.shared_input)) total += shape_size(shapes[i]);
    total += shape_size(shapes[i + 1]);
  }
  return total;
}

std::uint64_t count_dram(const NetworkSpec& spec, DramModel) { return count_weights(spec); }

double total_energy(const NetworkSpec& spec, const CostConfig& cfg) {
  return cost_totals(spec, cfg).energy;
}

CostTotals cost_totals(const NetworkSpec& spec, const CostConfig& cfg) {
  cfg.validate();
  CostTotals t;
  t.weights = count_weights(spec);
  t.macs = count_macs(spec);
  t.sram = count_sram(spec, cfg.sram_model);
  t.dram = count_dram(spec, cfg.dram_model);
  t.energy = static_cast<double>(t.macs) * cfg.energy_per_mac +
             static_cast<double>(t.sram) * cfg.energy_per_sram_access +
             static_cast<double>(t.dram) * cfg.energy_per_dram_access;
  return t;
}

OverheadReport overhead_report(const NetworkSpec& ge, const NetworkSpec& le,
                               const NetworkSpec& gn, const CostConfig& cfg) {
  OverheadReport r;
  r.config = cfg;
  r.ge = cost_totals(ge, cfg);
  const auto a = cost_totals(le, cfg), b = cost_totals(gn, cfg);
  r.extra = {a.weights + b.weights, a.macs + b.macs, a.sram + b.sram, a.dram + b.dram,
             a.energy + b.energy};
  auto ratio = [](double num, double den, const char* what) {
    if (den == 0.0) throw Error(std::string("GE ") + what + " is zero; overhead undefined");
    return 100.0 * num / den;
  };
  r.weight_pct = ratio(static_cast<double>(r.extra.weights), static_cast<double>(r.ge.weights), "weight count");
  r.mac_pct = ratio(static_cast<double>(r.extra.macs), static_cast<double>(r.ge.macs), "MAC count");
  r.sram_pct = ratio(static_cast<double>(r.extra.sram), static_cast<double>(r.ge.sram), "SRAM count");
  r.dram_pct = ratio(static_cast<double>(r.extra.dram), static_cast<double>(r.ge.dram), "DRAM count");
  r.total_pct = ratio(r.extra.energy, r.ge.energy, "energy");
  return r;
}

void to_json(nlohmann::json& j, const OverheadReport& r) {
  auto totals = [](const CostTotals& t) {
    return nlohmann::json{{"weights", t.weights}, {"macs", t.macs}, {"sram", t.sram},
                          {"dram", t.dram},       {"energy", t.energy}};
  };
  j = {{"network_size_pct", r.weight_pct},
       {"mac_pct", r.mac_pct},
       {"sram_pct", r.sram_pct},
       {"dram_pct", r.dram_pct},
       {"total_pct", r.total_pct},
       {"sram_approximate", true},
       {"ge", totals(r.ge)},
       {"le_plus_gn", totals(r.extra)},
       {"config",
        {{"energy_per_mac", r.config.energy_per_mac},
         {"energy_per_sram_access", r.config.energy_per_sram_access},
         {"energy_per_dram_access", r.config.energy_per_dram_access},
         {"sram_model", to_string(r.config.sram_model)},
         {"dram_model", "weights_only"}}}};
}

std::string format_overhead_table(const OverheadReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-18s %8s %8s %8s %8s\n"
                "%-18s %8s %8s %8s %8s\n"
                "%17.2f%% %7.2f%% %7.2f%% %7.2f%% %7.2f%%\n"
                "(SRAM and Total depend on the configured access-cost model)\n",
                "Network Size", "MAC", "SRAM", "DRAM", "Total", "|LE+GN|/|GE|", "", "", "", "",
                r.weight_pct, r.mac_pct, r.sram_pct, r.dram_pct, r.total_pct);
  return buf;
}

}  // namespace moe
