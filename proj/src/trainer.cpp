// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "moe/optim.hpp"
#include "moe/random.hpp"

namespace moe {
namespace {

double pct(std::size_t hits, std::size_t total) {
  return total ? 100.0 * static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

void require_frozen_ge(const Network& ge) {
  if (!ge.all_frozen())
    throw StateError("global expert must be trained and frozen before customized training");
}

std::vector<Tensor> ge_prefix_outputs(const Network& ge, const LabeledSet& set, std::size_t end) {
  std::vector<Tensor> out;
  out.reserve(set.size());
  for (const auto& img : set.images) out.push_back(ge.forward(img, 0, end));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("momentum must lie in [0, 1)");
  if (batch_size == 0) throw Error("batch_size must be positive");
  if (epochs == 0) throw Error("epochs must be positive");
  if (early_stop_patience == 0) throw Error("early_stop_patience must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5))
    throw Error("validation_fraction must lie in (0, 0.5)");
}

void to_json(nlohmann::json& j, const EpochStats& e) {
  j = {{"epoch", e.epoch},
       {"train_loss", e.train_loss},
       {"train_accuracy", e.train_accuracy},
       {"validation_loss", e.validation_loss},
       {"validation_accuracy", e.validation_accuracy}};
}

void to_json(nlohmann::json& j, const TrainReport& r) {
  j = {{"network", r.network},
       {"train_size", r.train_size},
       {"validation_size", r.validation_size},
       {"epochs_executed", r.epochs.size()},
       {"best_epoch", r.best_epoch},
       {"epochs", r.epochs},
       {"checkpoint", r.checkpoint},
       {"wall_seconds", r.wall_seconds}};
}

std::pair<double, double> evaluate_loss(const Network& net, std::size_t start_layer,
                                        const std::vector<Tensor>& inputs,
                                        const std::vector<std::size_t>& labels) {
  if (inputs.empty()) throw Error("evaluate_loss: no samples");
  double loss = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto logits = net.forward(inputs[i], start_layer);
    loss += softmax_cross_entropy(logits, labels[i]).loss;
    hits += argmax(logits.data()) == labels[i];
  }
  return {loss / static_cast<double>(inputs.size()), pct(hits, inputs.size())};
}

TrainReport fit(Network& net, std::size_t start_layer, const std::vector<Tensor>& inputs,
                const std::vector<std::size_t>& labels, std::size_t class_count,
                const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.empty()) throw Error("cannot train '" + net.spec().name + "' on an empty set");
  if (inputs.size() != labels.size()) throw Error("fit: input and label counts differ");
  const auto trainable = net.trainable_layers();
  if (trainable.empty()) throw StateError("network '" + net.spec().name + "' is fully frozen");

  const auto start = std::chrono::steady_clock::now();
  auto [train_idx, val_idx] = stratified_indices(labels, class_count, cfg.validation_fraction,
                                                 derive_seed(cfg.seed, "validation"));
  if (val_idx.empty() || train_idx.empty())
    throw Error("too few samples to carve a validation slice for '" + net.spec().name + "'");

  std::vector<Tensor> val_in;
  std::vector<std::size_t> val_labels;
  for (auto i : val_idx) {
    val_in.push_back(inputs[i]);
    val_labels.push_back(labels[i]);
  }

  TrainReport report;
  report.network = net.spec().name;
  report.train_size = train_idx.size();
  report.validation_size = val_idx.size();

  SgdOptimizer opt(cfg.learning_rate, cfg.momentum);
  Rng rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<LayerParams> best_params;
  double best_acc = -1.0, best_loss = 0.0;
  std::size_t since_best = 0;
  Tape tape;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t b = 0; b < train_idx.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(train_idx.size(), b + cfg.batch_size);
      Gradients batch;
      for (std::size_t k = b; k < e; ++k) {
        const auto i = train_idx[k];
        const auto logits = net.forward(inputs[i], tape, start_layer);
        const auto loss = softmax_cross_entropy(logits, labels[i]);
        loss_sum += loss.loss;
        hits += argmax(logits.data()) == labels[i];
        batch.accumulate(net.backward(tape, loss.d_logits));
      }
      batch.scale(1.0 / static_cast<double>(e - b));
      opt.step(net, batch);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_idx.size());
    stats.train_accuracy = pct(hits, train_idx.size());
    std::tie(stats.validation_loss, stats.validation_accuracy) =
        evaluate_loss(net, start_layer, val_in, val_labels);
    report.epochs.push_back(stats);

    if (!std::isfinite(stats.train_loss))
      throw Error("training of '" + net.spec().name + "' diverged at epoch " +
                  std::to_string(epoch) + "; lower the learning rate");

    const bool better = stats.validation_accuracy > best_acc ||
                        (stats.validation_accuracy == best_acc && stats.validation_loss < best_loss);
    if (better) {
      best_acc = stats.validation_accuracy;
      best_loss = stats.validation_loss;
      report.best_epoch = epoch;
      best_params.clear();
      for (auto l : trainable) best_params.push_back(net.params(l));
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }

  for (std::size_t k = 0; k < trainable.size(); ++k) net.mutable_params(trainable[k]) = best_params[k];
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TrainReport train_ge(Network& ge, const LabeledSet& generic_train, const TrainConfig& cfg) {
  if (generic_train.empty()) throw Error("train_ge: generic training set is empty");
  generic_train.validate();
  if (!ge.initialized()) ge.initialize(derive_seed(cfg.seed, "init"));
  for (auto l : ge.param_layers()) ge.set_frozen(l, false);
  auto report = fit(ge, 0, generic_train.images, generic_train.labels, generic_train.class_count, cfg);
  ge.freeze_all();
  return report;
}

TrainReport train_le(const FeatureTap& tap, const Network& ge, Network& le,
                     const LabeledSet& customized_train, const TrainConfig& cfg) {
  require_frozen_ge(ge);
  return train_le(ge, le, precompute(tap, customized_train), cfg);
}

TrainReport train_le(const Network& ge, Network& le, const TappedSet& data, const TrainConfig& cfg) {
  require_frozen_ge(ge);
  if (data.size() == 0) throw Error("train_le: customized training set is empty");
  if (!le.initialized()) le.initialize(derive_seed(cfg.seed, "init"));
  return fit(le, 0, data.taps, data.labels, data.class_count, cfg);
}

TrainReport train_gn(const FeatureTap& tap, const Network& ge, Network& gn,
                     const LabeledSet& mixture, const TrainConfig& cfg) {
  require_frozen_ge(ge);
  if (mixture.class_count != 2)
    throw Error("train_gn: mixture must be binary, has " + std::to_string(mixture.class_count) +
                " classes");
  return train_gn(ge, gn, precompute(tap, mixture), cfg);
}

TrainReport train_gn(const Network& ge, Network& gn, const TappedSet& data, const TrainConfig& cfg) {
  require_frozen_ge(ge);
  if (data.class_count != 2) throw Error("train_gn: mixture labels must be binary");
  for (auto l : data.labels)
    if (l > 1) throw Error("train_gn: non-binary label " + std::to_string(l));
  if (data.size() == 0) throw Error("train_gn: empty mixture");
  if (!gn.initialized()) gn.initialize(derive_seed(cfg.seed, "init"));
  return fit(gn, 0, data.taps, data.labels, 2, cfg);
}

AlternativeResult train_alternative(const FeatureTap& tap, const Network& ge, Network& le,
                                    Network& gn, const LabeledSet& customized_train,
                                    const LabeledSet& generic_pool, const TrainConfig& cfg) {
  require_frozen_ge(ge);
  const auto data = precompute(tap, customized_train);
  std::vector<std::size_t> mistakes, correct;
  for (std::size_t i = 0; i < data.size(); ++i)
    (argmax(data.ge_logits[i].data()) == data.labels[i] ? correct : mistakes).push_back(i);
  if (mistakes.empty())
    throw Error("train_alternative: GE makes no mistakes on the customized set; nothing to learn");

  AlternativeResult r;
  r.mistake_count = mistakes.size();
  TrainConfig le_cfg = cfg;
  le_cfg.seed = derive_seed(cfg.seed, "le");
  r.le = train_le(ge, le, data.subset(mistakes), le_cfg);

  TappedSet mix;
  mix.class_count = 2;
  for (auto i : mistakes) {
    mix.taps.push_back(data.taps[i]);
    mix.ge_logits.push_back(data.ge_logits[i]);
    mix.labels.push_back(1);
  }
  for (auto i : correct) {
    mix.taps.push_back(data.taps[i]);
    mix.ge_logits.push_back(data.ge_logits[i]);
    mix.labels.push_back(0);
  }
  if (generic_pool.size() < customized_train.size())
    throw Error("train_alternative: generic pool smaller than the customized set");
  Rng rng(derive_seed(cfg.seed, "generic"));
  for (auto i : rng.sample_without_replacement(generic_pool.size(), customized_train.size())) {
    mix.taps.push_back(tap.activations(generic_pool.images[i]));
    mix.ge_logits.push_back(tap.finish_global(mix.taps.back()));
    mix.labels.push_back(0);
  }
  r.gn_positive = mistakes.size();
  r.gn_negative = mix.size() - mistakes.size();
  TrainConfig gn_cfg = cfg;
  gn_cfg.seed = derive_seed(cfg.seed, "gn");
  r.gn = train_gn(ge, gn, mix, gn_cfg);
  return r;
}

TrainReport finetune_baseline(Network& ge_copy, const LabeledSet& customized_train,
                              const TrainConfig& cfg) {
  if (!ge_copy.initialized()) throw StateError("fine-tuning needs a trained GE copy");
  const auto& layers = ge_copy.spec().layers;
  std::size_t first_fc = layers.size();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].has_params()) continue;
    const bool fc = layers[i].kind == LayerKind::fully_connected;
    ge_copy.set_frozen(i, !fc);
    if (fc) first_fc = std::min(first_fc, i);
  }
  if (first_fc == layers.size()) throw Error("fine-tuning: network has no fully connected layers");
  // Convolutional features are fixed, so compute them once.
  const auto features = ge_prefix_outputs(ge_copy, customized_train, first_fc);
  return fit(ge_copy, first_fc, features, customized_train.labels, customized_train.class_count, cfg);
}

void to_json(nlohmann::json& j, const ComponentMetrics& m) {
  j = {{"ge_accuracy", m.ge_accuracy},
       {"le_accuracy", m.le_accuracy},
       {"gn_accuracy", m.gn_accuracy},
       {"overall_customized", m.overall_customized},
       {"complement", m.complement ? nlohmann::json(*m.complement) : nlohmann::json(nullptr)},
       {"overall_generic", m.overall_generic},
       {"ge_generic", m.ge_generic},
       {"customized_count", m.customized_count},
       {"generic_count", m.generic_count}};
}

void from_json(const nlohmann::json& j, ComponentMetrics& m) {
  m.ge_accuracy = j.at("ge_accuracy").get<double>();
  m.le_accuracy = j.at("le_accuracy").get<double>();
  m.gn_accuracy = j.at("gn_accuracy").get<double>();
  m.overall_customized = j.at("overall_customized").get<double>();
  m.complement = j.at("complement").is_null() ? std::nullopt
                                               : std::optional(j.at("complement").get<double>());
  m.overall_generic = j.at("overall_generic").get<double>();
  m.ge_generic = j.at("ge_generic").get<double>();
  m.customized_count = j.at("customized_count").get<std::size_t>();
  m.generic_count = j.at("generic_count").get<std::size_t>();
}

ComponentMetrics evaluate_components(const MoeModel& moe, const TappedSet& cust,
                                     const TappedSet& gen) {
  if (cust.size() == 0 || gen.size() == 0)
    throw Error("evaluate_components: both test sets must be non-empty");
  std::size_t ge_hit = 0, le_hit = 0, routed_le = 0, overall = 0, r2 = 0, ge_miss = 0;
  for (std::size_t i = 0; i < cust.size(); ++i) {
    const auto inf = infer_tapped(moe, cust.taps[i], cust.ge_logits[i]);
    const bool ge_ok = argmax(inf.ge_logits.data()) == cust.labels[i];
    const bool le_ok = argmax(inf.le_logits.data()) == cust.labels[i];
    ge_hit += ge_ok;
    le_hit += le_ok;
    routed_le += inf.decision.selected == Expert::le;
    overall += inf.predicted == cust.labels[i];
    if (!ge_ok) {
      ++ge_miss;
      r2 += le_ok;
    }
  }
  std::size_t gen_overall = 0, gen_ge = 0, routed_ge = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const auto inf = infer_tapped(moe, gen.taps[i], gen.ge_logits[i]);
    gen_overall += inf.predicted == gen.labels[i];
    gen_ge += argmax(inf.ge_logits.data()) == gen.labels[i];
    routed_ge += inf.decision.selected == Expert::ge;
  }
  ComponentMetrics m;
  m.customized_count = cust.size();
  m.generic_count = gen.size();
  m.ge_accuracy = pct(ge_hit, cust.size());
  m.le_accuracy = pct(le_hit, cust.size());
  m.gn_accuracy = 0.5 * (pct(routed_le, cust.size()) + pct(routed_ge, gen.size()));
  m.overall_customized = pct(overall, cust.size());
  if (ge_miss) m.complement = pct(r2, ge_miss);
  m.overall_generic = pct(gen_overall, gen.size());
  m.ge_generic = pct(gen_ge, gen.size());
  return m;
}

ComponentMetrics evaluate_components(const MoeModel& moe, const LabeledSet& customized_test,
                                     const LabeledSet& generic_test) {
  return evaluate_components(moe, precompute(moe.tap, customized_test),
                             precompute(moe.tap, generic_test));
}

ComponentMetrics metrics_from_trace(const std::vector<TraceRecord>& customized,
                                    const std::vector<TraceRecord>& generic) {
  if (customized.empty() || generic.empty()) throw Error("metrics_from_trace: empty trace");
  ComponentMetrics m;
  m.customized_count = customized.size();
  m.generic_count = generic.size();
  std::size_t counts[5] = {};
  std::size_t ge_hit = 0, le_hit = 0, routed_le = 0, overall = 0;
  for (const auto& r : customized) {
    ++counts[static_cast<int>(r.region)];
    ge_hit += r.ge_pred == r.label;
    le_hit += r.le_pred == r.label;
    routed_le += r.gate == Expert::le;
    overall += r.final_pred == r.label;
  }
  std::size_t gen_overall = 0, gen_ge = 0, routed_ge = 0;
  for (const auto& r : generic) {
    gen_overall += r.final_pred == r.label;
    gen_ge += r.ge_pred == r.label;
    routed_ge += r.gate == Expert::ge;
  }
  m.ge_accuracy = pct(ge_hit, customized.size());
  m.le_accuracy = pct(le_hit, customized.size());
  m.gn_accuracy = 0.5 * (pct(routed_le, customized.size()) + pct(routed_ge, generic.size()));
  m.overall_customized = pct(overall, customized.size());
  if (counts[2] + counts[4]) m.complement = pct(counts[2], counts[2] + counts[4]);
  m.overall_generic = pct(gen_overall, generic.size());
  m.ge_generic = pct(gen_ge, generic.size());
  return m;
}

double accuracy(const Network& net, const LabeledSet& set) {
  if (set.empty()) throw Error("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i)
    hits += argmax(net.forward(set.images[i]).data()) == set.labels[i];
  return pct(hits, set.size());
}

}  // namespace moe
