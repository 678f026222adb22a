// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/explorer.hpp"

#include <algorithm>
#include <cstdio>

#include "moe/random.hpp"

namespace moe {
namespace {

void check_candidates(std::vector<std::size_t>& ns) {
  for (auto n : ns)
    if (n == 0 || kTapSide % n != 0)
      throw Error("pooled size " + std::to_string(n) + " does not divide " +
                  std::to_string(kTapSide));
  std::sort(ns.begin(), ns.end(), std::greater<>());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
}

double weight_overhead(std::size_t n, std::size_t classes) {
  const double ge = static_cast<double>(count_weights(build_ge(classes)));
  return 100.0 *
         static_cast<double>(count_weights(build_le(n, classes)) + count_weights(build_gn(n))) / ge;
}

}  // namespace

std::vector<SweepRow> sweep_overheads(std::vector<std::size_t> candidates, std::size_t classes) {
  check_candidates(candidates);
  std::vector<SweepRow> rows;
  for (auto n : candidates) rows.push_back({n, weight_overhead(n, classes), {}, {}});
  return rows;
}

std::vector<SweepRow> sweep(std::shared_ptr<const Network> ge, std::vector<std::size_t> candidates,
                            const SweepData& data, const SweepConfig& cfg) {
  if (!ge || !ge->initialized() || !ge->all_frozen())
    throw StateError("sweep needs a trained, frozen global expert");
  if (data.users.empty() && !candidates.empty()) throw Error("sweep needs at least one user");
  auto rows = sweep_overheads(std::move(candidates), cfg.classes);
  for (auto& row : rows) {
    double cust = 0.0, gen = 0.0;
    for (std::size_t u = 0; u < data.users.size(); ++u) {
      const auto& user = data.users[u];
      const std::string tag = "n." + std::to_string(row.n) + ".user." + std::to_string(u);
      TrainConfig le_cfg = cfg.le, gn_cfg = cfg.gn;
      le_cfg.seed = derive_seed(cfg.le.seed, tag);
      gn_cfg.seed = derive_seed(cfg.gn.seed, tag);
      Network le(build_le(row.n, cfg.classes));
      Network gn(build_gn(row.n));
      train_le(*ge, le, user.train, le_cfg);
      train_gn(*ge, gn, user.gn_mixture, gn_cfg);
      MoeModel moe(ge, std::move(le), std::move(gn));
      const auto m = evaluate_components(moe, user.test, data.generic_test);
      cust += m.overall_customized;
      gen += m.overall_generic;
    }
    const auto users = static_cast<double>(data.users.size());
    row.customized_accuracy = cust / users;
    row.generic_accuracy = gen / users;
  }
  return rows;
}

std::size_t select_config(const std::vector<SweepRow>& rows, double tolerance) {
  std::vector<const SweepRow*> scored;
  for (const auto& r : rows)
    if (r.customized_accuracy) scored.push_back(&r);
  if (scored.empty()) throw Error("select_config: no rows with accuracy results");
  double best = -1e300;
  for (auto* r : scored) best = std::max(best, *r->customized_accuracy);
  const SweepRow* chosen = nullptr;
  for (auto* r : scored) {
    if (*r->customized_accuracy < best - tolerance) continue;
    if (!chosen || r->weight_overhead_pct < chosen->weight_overhead_pct) chosen = r;
  }
  return chosen->n;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "input_feature_map_size,network_size_pct,customized_accuracy,generic_accuracy\n";
  char buf[160];
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", *v);
    return std::string(b);
  };
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zux%zux%zu,%.2f,", r.n, r.n, kTapChannels,
                  r.weight_overhead_pct);
    out += buf + opt(r.customized_accuracy) + "," + opt(r.generic_accuracy) + "\n";
  }
  return out;
}

void to_json(nlohmann::json& j, const SweepRow& r) {
  j = {{"n", r.n},
       {"m", r.n},
       {"input_feature_map_size",
        std::to_string(r.n) + "x" + std::to_string(r.n) + "x" + std::to_string(kTapChannels)},
       {"network_size_pct", r.weight_overhead_pct},
       {"customized_accuracy",
        r.customized_accuracy ? nlohmann::json(*r.customized_accuracy) : nlohmann::json(nullptr)},
       {"generic_accuracy",
        r.generic_accuracy ? nlohmann::json(*r.generic_accuracy) : nlohmann::json(nullptr)}};
}

}  // namespace moe
