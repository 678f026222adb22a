// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/moe.hpp"

#include <cmath>
#include <istream>

namespace moe {

std::string to_string(Expert e) { return e == Expert::ge ? "GE" : "LE"; }

GateDecision GateDecision::soft(double w_g) {
  if (!(w_g >= 0.0 && w_g <= 1.0)) throw Error("gate weight must lie in [0, 1]");
  return {w_g, 1.0 - w_g, w_g >= 0.5 ? Expert::ge : Expert::le};
}

GateDecision gate(const Tensor& gn_logits) {
  if (gn_logits.size() != 2)
    throw ShapeError("gate expects 2 logits, got " + std::to_string(gn_logits.size()));
  if (!gn_logits.all_finite()) throw Error("gate received non-finite logits");
  return GateDecision::select(gn_logits[1] > gn_logits[0] ? Expert::le : Expert::ge);
}

Tensor blend(const Tensor& ge_logits, const Tensor& le_logits, const GateDecision& d) {
  if (ge_logits.size() != le_logits.size())
    throw ShapeError("blend: GE has " + std::to_string(ge_logits.size()) + " outputs, LE has " +
                     std::to_string(le_logits.size()));
  // Binary weights select exactly; no rounding from 1*x + 0*y.
  if (d.w_g == 1.0 && d.w_l == 0.0) return ge_logits;
  if (d.w_g == 0.0 && d.w_l == 1.0) return le_logits;
  Tensor out = ge_logits;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.w_g * ge_logits[i] + d.w_l * le_logits[i];
  return out;
}

MoeModel::MoeModel(std::shared_ptr<const Network> global, Network local, Network gating)
    : ge(std::move(global)), tap(ge), le(std::move(local)), gn(std::move(gating)) {
  if (le.spec().input_shape != tap.shape() || gn.spec().input_shape != tap.shape())
    throw ShapeError("LE/GN inputs must match the tap shape " + shape_string(tap.shape()));
  if (gn.spec().output_count != 2) throw ShapeError("GN must have exactly 2 outputs");
  if (le.spec().output_count != ge->spec().output_count)
    throw ShapeError("LE and GE must have the same number of classes");
}

namespace {

void require_ready(const MoeModel& moe) {
  if (!moe.ge->initialized()) throw StateError("global expert has no parameters loaded");
  if (!moe.le.initialized()) throw StateError("local expert has no parameters loaded");
  if (!moe.gn.initialized()) throw StateError("gating network has no parameters loaded");
}

Inference finish(const MoeModel& moe, Tensor tapped, Tensor ge_logits) {
  Inference r;
  r.ge_logits = std::move(ge_logits);
  r.le_logits = moe.le.forward(tapped);
  r.gn_logits = moe.gn.forward(tapped);
  r.decision = gate(r.gn_logits);
  r.predicted = argmax(blend(r.ge_logits, r.le_logits, r.decision).data());
  return r;
}

}  // namespace

Inference infer(const MoeModel& moe, const Tensor& image) {
  require_ready(moe);
  auto out = forward_with_tap(moe.tap, moe.le, moe.gn, image);
  Inference r;
  r.ge_logits = std::move(out.ge_logits);
  r.le_logits = std::move(out.le_logits);
  r.gn_logits = std::move(out.gn_logits);
  r.decision = gate(r.gn_logits);
  r.predicted = argmax(blend(r.ge_logits, r.le_logits, r.decision).data());
  return r;
}

Inference infer_tapped(const MoeModel& moe, const Tensor& tapped, const Tensor& ge_logits) {
  require_ready(moe);
  return finish(moe, tapped, ge_logits);
}

Region classify_region(bool ge_correct, bool le_correct) {
  if (ge_correct) return le_correct ? Region::r1 : Region::r3;
  return le_correct ? Region::r2 : Region::r4;
}

const std::vector<std::size_t>& RegionPartition::members(Region r) const {
  switch (r) {
    case Region::r1: return r1;
    case Region::r2: return r2;
    case Region::r3: return r3;
    case Region::r4: return r4;
  }
  return r4;
}

RegionPartition partition_from_predictions(const std::vector<std::size_t>& ge_pred,
                                           const std::vector<std::size_t>& le_pred,
                                           const std::vector<std::size_t>& labels) {
  if (ge_pred.size() != labels.size() || le_pred.size() != labels.size())
    throw Error("prediction and label counts differ");
  RegionPartition p;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    switch (classify_region(ge_pred[i] == labels[i], le_pred[i] == labels[i])) {
      case Region::r1: p.r1.push_back(i); break;
      case Region::r2: p.r2.push_back(i); break;
      case Region::r3: p.r3.push_back(i); break;
      case Region::r4: p.r4.push_back(i); break;
    }
  }
  return p;
}

RegionPartition partition_regions(const FeatureTap& tap, const Network& le,
                                  const LabeledSet& dataset) {
  return partition_regions(le, precompute(tap, dataset));
}

RegionPartition partition_regions(const Network& le, const TappedSet& data) {
  std::vector<std::size_t> ge_pred, le_pred;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ge_pred.push_back(argmax(data.ge_logits[i].data()));
    le_pred.push_back(argmax(le.forward(data.taps[i]).data()));
  }
  return partition_from_predictions(ge_pred, le_pred, data.labels);
}

double ideal_gate_accuracy(const RegionPartition& p) {
  if (p.total() == 0) throw Error("ideal_gate_accuracy: empty dataset");
  return static_cast<double>(p.r1.size() + p.r2.size() + p.r3.size()) /
         static_cast<double>(p.total());
}

double complement_metric(const RegionPartition& p) {
  const auto mistakes = p.r2.size() + p.r4.size();
  if (mistakes == 0)
    throw Error("complement metric undefined: GE classifies every sample correctly");
  return static_cast<double>(p.r2.size()) / static_cast<double>(mistakes);
}

void to_json(nlohmann::json& j, const TraceRecord& r) {
  j = {{"sample_id", r.sample_id},
       {"set", r.set},
       {"ge_pred", r.ge_pred},
       {"le_pred", r.le_pred},
       {"gate", to_string(r.gate)},
       {"final_pred", r.final_pred},
       {"label", r.label},
       {"region", "R" + std::to_string(static_cast<int>(r.region))}};
}

void from_json(const nlohmann::json& j, TraceRecord& r) {
  r.sample_id = j.at("sample_id").get<std::size_t>();
  r.set = j.at("set").get<std::string>();
  r.ge_pred = j.at("ge_pred").get<std::size_t>();
  r.le_pred = j.at("le_pred").get<std::size_t>();
  const auto g = j.at("gate").get<std::string>();
  if (g != "GE" && g != "LE") throw Error("trace: bad gate '" + g + "'");
  r.gate = g == "GE" ? Expert::ge : Expert::le;
  r.final_pred = j.at("final_pred").get<std::size_t>();
  r.label = j.at("label").get<std::size_t>();
  const auto region = j.at("region").get<std::string>();
  if (region.size() != 2 || region[0] != 'R' || region[1] < '1' || region[1] > '4')
    throw Error("trace: bad region '" + region + "'");
  r.region = static_cast<Region>(region[1] - '0');
}

std::vector<TraceRecord> trace(const MoeModel& moe, const TappedSet& data, const std::string& set) {
  std::vector<TraceRecord> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto inf = infer_tapped(moe, data.taps[i], data.ge_logits[i]);
    TraceRecord r;
    r.sample_id = i;
    r.set = set;
    r.ge_pred = argmax(inf.ge_logits.data());
    r.le_pred = argmax(inf.le_logits.data());
    r.gate = inf.decision.selected;
    r.final_pred = inf.predicted;
    r.label = data.labels[i];
    r.region = classify_region(r.ge_pred == r.label, r.le_pred == r.label);
    out.push_back(std::move(r));
  }
  return out;
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) out << nlohmann::json(r).dump() << '\n';
}

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line).get<TraceRecord>());
  }
  return out;
}

}  // namespace moe
