// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "moe/network_spec.hpp"

namespace moe {

// Analytic per-inference accounting over NetworkSpecs. Counts are exact
// integers; energies are in relative units.

enum class SramModel {
  /// Weights plus every layer's input and output activations. The input of
  /// a network fed by the shared tap is already resident and not recounted.
  weights_plus_activations,
  weights_only,
};

/// Each weight fetched from DRAM once per inference.
enum class DramModel { weights_only };

std::string to_string(SramModel m);
SramModel sram_model_from_string(const std::string& s);

struct CostConfig {
  double energy_per_mac = 1.0;
  double energy_per_sram_access = 6.0;
  double energy_per_dram_access = 200.0;
  SramModel sram_model = SramModel::weights_plus_activations;
  DramModel dram_model = DramModel::weights_only;

  void validate() const;
};

/// Kernel and matrix elements, biases excluded.
std::uint64_t count_weights(const NetworkSpec& spec);
/// conv: H'W'k^2 Cin Cout, FC: Nin Nout, pooling and relu: 0.
std::uint64_t count_macs(const NetworkSpec& spec);
std::uint64_t count_sram(const NetworkSpec& spec, SramModel model);
std::uint64_t count_dram(const NetworkSpec& spec, DramModel model);
double total_energy(const NetworkSpec& spec, const CostConfig& cfg);

struct CostTotals {
  std::uint64_t weights = 0;
  std::uint64_t macs = 0;
  std::uint64_t sram = 0;
  std::uint64_t dram = 0;
  double energy = 0.0;
};

CostTotals cost_totals(const NetworkSpec& spec, const CostConfig& cfg);

/// (LE + GN) / GE for every quantity, in percent.
struct OverheadReport {
  double weight_pct = 0.0;
  double mac_pct = 0.0;
  double sram_pct = 0.0;
  double dram_pct = 0.0;
  double total_pct = 0.0;
  CostTotals ge;
  CostTotals extra;
  CostConfig config;
};

OverheadReport overhead_report(const NetworkSpec& ge, const NetworkSpec& le,
                               const NetworkSpec& gn, const CostConfig& cfg = {});

void to_json(nlohmann::json& j, const OverheadReport& r);

/// Aligned text table: network size, then MAC, SRAM, DRAM and total energy.
std::string format_overhead_table(const OverheadReport& r);

}  // namespace moe
