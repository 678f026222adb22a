// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "moe/feature_tap.hpp"

namespace moe {

enum class Expert { ge, le };

std::string to_string(Expert e);

/// Gate output. w_g + w_l == 1; the shipped gate is binary.
struct GateDecision {
  double w_g = 1.0;
  double w_l = 0.0;
  Expert selected = Expert::ge;

  static GateDecision select(Expert e) {
    return e == Expert::ge ? GateDecision{1.0, 0.0, Expert::ge}
                           : GateDecision{0.0, 1.0, Expert::le};
  }
  /// Soft mixing weights; selected follows the larger weight (ties to GE).
  static GateDecision soft(double w_g);
};

/// Binary argmax over (generic, customized) logits; ties select GE.
GateDecision gate(const Tensor& gn_logits);

/// w_g * ge_logits + w_l * le_logits.
Tensor blend(const Tensor& ge_logits, const Tensor& le_logits, const GateDecision& decision);

/// Frozen GE shared through a feature tap, plus one LE and the GN.
struct MoeModel {
  std::shared_ptr<const Network> ge;
  FeatureTap tap;
  Network le;
  Network gn;

  MoeModel(std::shared_ptr<const Network> global, Network local, Network gating);
};

struct Inference {
  std::size_t predicted = 0;
  GateDecision decision;
  Tensor ge_logits;
  Tensor le_logits;
  Tensor gn_logits;
};

Inference infer(const MoeModel& moe, const Tensor& image);
/// Same as infer, starting from a precomputed tap activation and GE logits.
Inference infer_tapped(const MoeModel& moe, const Tensor& tapped, const Tensor& ge_logits);

/// R1: GE and LE correct, R2: only LE, R3: only GE, R4: neither.
enum class Region { r1 = 1, r2 = 2, r3 = 3, r4 = 4 };

Region classify_region(bool ge_correct, bool le_correct);

struct RegionPartition {
  std::vector<std::size_t> r1, r2, r3, r4;

  std::size_t total() const { return r1.size() + r2.size() + r3.size() + r4.size(); }
  const std::vector<std::size_t>& members(Region r) const;
};

RegionPartition partition_from_predictions(const std::vector<std::size_t>& ge_pred,
                                           const std::vector<std::size_t>& le_pred,
                                           const std::vector<std::size_t>& labels);

/// Standalone GE and LE predictions over the dataset, compared to labels.
RegionPartition partition_regions(const FeatureTap& tap, const Network& le,
                                  const LabeledSet& dataset);
RegionPartition partition_regions(const Network& le, const TappedSet& dataset);

/// (|R1| + |R2| + |R3|) / N: accuracy of a perfect gate.
double ideal_gate_accuracy(const RegionPartition& p);

/// |R2| / (|R2| + |R4|): LE accuracy on the samples GE gets wrong.
double complement_metric(const RegionPartition& p);

/// One line of the per-sample inference trace.
struct TraceRecord {
  std::size_t sample_id = 0;
  std::string set;  // "customized" or "generic"
  std::size_t ge_pred = 0;
  std::size_t le_pred = 0;
  Expert gate = Expert::ge;
  std::size_t final_pred = 0;
  std::size_t label = 0;
  Region region = Region::r1;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

void to_json(nlohmann::json& j, const TraceRecord& r);
void from_json(const nlohmann::json& j, TraceRecord& r);

std::vector<TraceRecord> trace(const MoeModel& moe, const TappedSet& data, const std::string& set);
void write_trace(std::ostream& out, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> read_trace(std::istream& in);

}  // namespace moe
