// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "moe/checkpoint.hpp"
#include "moe/glyphs.hpp"
#include "moe/random.hpp"

namespace moe {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path.string());
  return json::parse(f);
}

void require_file(const fs::path& path, const std::string& key) {
  if (path.empty()) throw ConfigError("config key '" + key + "' is required");
  if (!fs::exists(path)) throw Error(key + ": file not found: " + path.string());
}

LabeledSet load_restricted(const fs::path& images, const fs::path& labels, std::size_t classes) {
  auto set = load_idx(images, labels);
  if (set.class_count < classes)
    throw Error(images.string() + " has only " + std::to_string(set.class_count) +
                " classes, " + std::to_string(classes) + " requested");
  return set.class_count == classes ? set : restrict_classes(set, classes);
}

LabeledSet prepare(LabeledSet set, std::size_t cap, const Experiment& exp, const std::string& tag) {
  set = balance_classes(set, exp.seed_for("generic.balance." + tag));
  if (cap) set = cap_per_class(set, cap, exp.seed_for("generic.cap." + tag));
  return set;
}

OutputLayout layout(const Experiment& exp) { return {exp.out_dir}; }

std::shared_ptr<const Network> load_frozen_ge(const Experiment& exp) {
  const auto path = layout(exp).ge_checkpoint();
  if (!fs::exists(path))
    throw Error("no global expert at " + path.string() + "; run `moectl train-ge` first");
  auto ge = std::make_shared<Network>(load_network(path, build_ge(exp.classes)));
  ge->freeze_all();
  return ge;
}

void update_manifest(const Experiment& exp, const std::function<void(json&)>& edit) {
  const auto path = layout(exp).manifest();
  json m = fs::exists(path) ? read_json(path) : json::object();
  m["config"] = exp.config_path.string();
  m["seed"] = exp.seed;
  m["classes"] = exp.classes;
  m["out"] = exp.out_dir.string();
  m["datasets"] = {{"generic_train_images", exp.generic_train_images.string()},
                   {"generic_train_labels", exp.generic_train_labels.string()},
                   {"generic_test_images", exp.generic_test_images.string()},
                   {"generic_test_labels", exp.generic_test_labels.string()},
                   {"user_source_images", exp.user_source_images.string()},
                   {"user_source_labels", exp.user_source_labels.string()}};
  edit(m);
  write_json(path, m);
}

struct PreparedUser {
  UserProfile profile;
  UserData data;
};

PreparedUser prepare_user(const Experiment& exp, const GenericData& g, std::size_t id) {
  PreparedUser u;
  u.profile = make_user_profile(id, exp.seed_for("user." + std::to_string(id) + ".data"),
                                exp.distortion);
  u.data = synthesize_user(g.user_pool, u.profile, exp.train_per_class, exp.test_per_class);
  return u;
}

TrainConfig seeded(TrainConfig cfg, const Experiment& exp, const std::string& name) {
  cfg.seed = exp.seed_for(name);
  return cfg;
}

ComponentMetrics average(const std::vector<UserResult>& users) {
  ComponentMetrics a;
  double complement = 0.0;
  std::size_t with_complement = 0;
  for (const auto& u : users) {
    const auto& m = u.metrics;
    a.ge_accuracy += m.ge_accuracy;
    a.le_accuracy += m.le_accuracy;
    a.gn_accuracy += m.gn_accuracy;
    a.overall_customized += m.overall_customized;
    a.overall_generic += m.overall_generic;
    a.ge_generic += m.ge_generic;
    a.customized_count += m.customized_count;
    a.generic_count = m.generic_count;
    if (m.complement) {
      complement += *m.complement;
      ++with_complement;
    }
  }
  const auto n = static_cast<double>(users.size());
  a.ge_accuracy /= n;
  a.le_accuracy /= n;
  a.gn_accuracy /= n;
  a.overall_customized /= n;
  a.overall_generic /= n;
  a.ge_generic /= n;
  if (with_complement) a.complement = complement / static_cast<double>(with_complement);
  return a;
}

json user_json(const UserResult& u) {
  json j = u.metrics;
  j["user_id"] = u.user_id;
  if (u.finetune_customized)
    j["finetune"] = {{"customized", *u.finetune_customized}, {"generic", *u.finetune_generic}};
  return j;
}

void write_trace_file(const fs::path& path, const std::vector<TraceRecord>& records) {
  std::ostringstream os;
  write_trace(os, records);
  write_text(path, os.str());
}

}  // namespace

GenericData load_generic(const Experiment& exp) {
  require_file(exp.generic_train_images, "generic.train_images");
  require_file(exp.generic_train_labels, "generic.train_labels");
  require_file(exp.generic_test_images, "generic.test_images");
  require_file(exp.generic_test_labels, "generic.test_labels");

  GenericData g;
  g.train = prepare(load_restricted(exp.generic_train_images, exp.generic_train_labels, exp.classes),
                    exp.generic_train_per_class, exp, "train");
  auto test = prepare(load_restricted(exp.generic_test_images, exp.generic_test_labels, exp.classes),
                      exp.generic_test_per_class, exp, "test");
  if (!exp.user_source_images.empty()) {
    require_file(exp.user_source_images, "users.source_images");
    require_file(exp.user_source_labels, "users.source_labels");
    g.user_pool = balance_classes(
        load_restricted(exp.user_source_images, exp.user_source_labels, exp.classes),
        exp.seed_for("users.balance"));
    g.test = std::move(test);
  } else {
    auto split = stratified_split(test, 0.5, exp.seed_for("generic.holdout"));
    g.test = std::move(split.first);
    g.user_pool = std::move(split.second);
  }
  return g;
}

TrainReport cmd_train_ge(const Experiment& exp, std::ostream& log) {
  const auto out = layout(exp);
  const auto g = load_generic(exp);
  log << "generic train " << g.train.size() << " samples, test " << g.test.size()
      << ", user pool " << g.user_pool.size() << " (" << exp.classes << " classes)\n";

  Network ge(build_ge(exp.classes));
  auto report = train_ge(ge, g.train, seeded(exp.ge, exp, "ge"));
  fs::create_directories(out.root);
  save_network(out.ge_checkpoint(), ge);
  report.checkpoint = out.ge_checkpoint().string();

  json j = report;
  j["generic_test_accuracy"] = accuracy(ge, g.test);
  write_json(out.ge_report(), j);
  write_json(out.dataset_manifest(), {{"seed", exp.seed},
                                      {"generic_train", manifest(g.train)},
                                      {"generic_test", manifest(g.test)},
                                      {"user_pool", manifest(g.user_pool)}});
  update_manifest(exp, [&](json& m) { m["ge_checkpoint"] = out.ge_checkpoint().string(); });
  log << "GE trained for " << report.epochs.size() << " epochs (best " << report.best_epoch
      << "), validation accuracy " << report.best().validation_accuracy
      << "%, generic test accuracy " << j["generic_test_accuracy"].get<double>() << "%\n";
  return report;
}

CustomizeResult cmd_customize(const Experiment& exp, std::ostream& log) {
  const auto out = layout(exp);
  const auto ge = load_frozen_ge(exp);
  const auto g = load_generic(exp);
  const FeatureTap tap(ge);
  const auto generic_eval = precompute(tap, g.test);

  CustomizeResult result;
  for (auto id : exp.users) {
    const std::string tag = "user." + std::to_string(id);
    const auto dir = out.user_dir(id);
    fs::create_directories(dir);
    const auto user = prepare_user(exp, g, id);
    const auto train = precompute(tap, user.data.train);

    Network le(build_le(exp.n, exp.classes));
    auto le_report = train_le(*ge, le, train, seeded(exp.le, exp, tag + ".le"));
    Network gn(build_gn(exp.m));
    const auto mixture = gn_mixture(user.data.train, g.train, exp.seed_for(tag + ".mixture"));
    auto gn_report = train_gn(tap, *ge, gn, mixture, seeded(exp.gn, exp, tag + ".gn"));

    save_network(dir / "le.moew", le);
    save_network(dir / "gn.moew", gn);
    le_report.checkpoint = (dir / "le.moew").string();
    gn_report.checkpoint = (dir / "gn.moew").string();
    write_json(dir / "le_report.json", le_report);
    write_json(dir / "gn_report.json", gn_report);
    write_json(dir / "profile.json", user.profile);

    MoeModel model(ge, std::move(le), std::move(gn));
    const auto test = precompute(tap, user.data.test);
    UserResult r;
    r.user_id = id;
    r.metrics = evaluate_components(model, test, generic_eval);
    write_trace_file(dir / "trace.jsonl", trace(model, test, "customized"));
    write_trace_file(dir / "generic_trace.jsonl", trace(model, generic_eval, "generic"));

    if (exp.run_baseline) {
      Network tuned = *ge;
      auto ft_report = finetune_baseline(tuned, user.data.train, seeded(exp.finetune, exp, tag + ".finetune"));
      write_json(dir / "finetune_report.json", ft_report);
      r.finetune_customized = accuracy(tuned, user.data.test);
      r.finetune_generic = accuracy(tuned, g.test);
    }
    write_json(dir / "metrics.json", user_json(r));
    log << "user " << id << ": GE " << r.metrics.ge_accuracy << "% -> MOE "
        << r.metrics.overall_customized << "% customized; generic " << r.metrics.ge_generic
        << "% -> " << r.metrics.overall_generic << "%\n";
    result.users.push_back(r);
  }
  result.average = average(result.users);

  json users = json::array();
  for (const auto& u : result.users) users.push_back(user_json(u));
  json avg = result.average;
  if (exp.run_baseline) {
    double c = 0, gsum = 0;
    for (const auto& u : result.users) {
      c += *u.finetune_customized;
      gsum += *u.finetune_generic;
    }
    avg["finetune"] = {{"customized", c / static_cast<double>(result.users.size())},
                       {"generic", gsum / static_cast<double>(result.users.size())}};
  }
  write_json(out.metrics(), {{"n", exp.n}, {"m", exp.m}, {"users", users}, {"average", avg}});
  update_manifest(exp, [&](json& m) {
    for (auto id : exp.users) {
      const auto dir = out.user_dir(id);
      m["users"][std::to_string(id)] = {{"le_checkpoint", (dir / "le.moew").string()},
                                        {"gn_checkpoint", (dir / "gn.moew").string()},
                                        {"metrics", (dir / "metrics.json").string()}};
    }
  });
  log << format_metrics_table(result);
  return result;
}

std::vector<SweepRow> cmd_sweep(const Experiment& exp, bool dry_run, std::ostream& log) {
  const auto out = layout(exp);
  std::vector<SweepRow> rows;
  json doc;
  if (dry_run) {
    rows = sweep_overheads(exp.sweep_candidates, exp.classes);
  } else {
    const auto ge = load_frozen_ge(exp);
    const auto g = load_generic(exp);
    const FeatureTap tap(ge);
    SweepData data;
    data.generic_test = precompute(tap, g.test);
    for (auto id : exp.users) {
      const auto user = prepare_user(exp, g, id);
      const std::string tag = "user." + std::to_string(id);
      data.users.push_back({precompute(tap, user.data.train), precompute(tap, user.data.test),
                            precompute(tap, gn_mixture(user.data.train, g.train,
                                                       exp.seed_for(tag + ".mixture")))});
    }
    SweepConfig cfg{seeded(exp.le, exp, "sweep.le"), seeded(exp.gn, exp, "sweep.gn"), exp.classes};
    rows = sweep(ge, exp.sweep_candidates, data, cfg);
    doc["selected_n"] = select_config(rows, exp.sweep_tolerance);
    doc["tolerance"] = exp.sweep_tolerance;
  }
  doc["rows"] = rows;
  doc["dry_run"] = dry_run;
  fs::create_directories(out.root);
  write_text(out.sweep_csv(), sweep_csv(rows));
  write_json(out.sweep_json(), doc);
  log << sweep_csv(rows);
  if (doc.contains("selected_n")) log << "selected n = m = " << doc["selected_n"] << "\n";
  return rows;
}

OverheadReport cmd_overhead(const Experiment& exp, std::ostream& log) {
  const auto out = layout(exp);
  const auto r = overhead_report(build_ge(exp.classes), build_le(exp.n, exp.classes),
                                 build_gn(exp.m), exp.cost);
  json j = r;
  j["n"] = exp.n;
  j["m"] = exp.m;
  j["classes"] = exp.classes;
  fs::create_directories(out.root);
  write_json(out.overhead_json(), j);
  write_text(out.overhead_txt(), format_overhead_table(r));
  log << format_overhead_table(r);
  return r;
}

std::size_t cmd_eval(const Experiment& exp, std::size_t user_id, std::ostream& log) {
  const auto out = layout(exp);
  const auto dir = out.user_dir(user_id);
  for (const char* name : {"le.moew", "gn.moew"})
    if (!fs::exists(dir / name))
      throw Error("missing " + (dir / name).string() + "; run `moectl customize --users " +
                  std::to_string(user_id) + "` first");
  const auto ge = load_frozen_ge(exp);
  const auto g = load_generic(exp);
  const auto user = prepare_user(exp, g, user_id);
  MoeModel model(ge, load_network(dir / "le.moew", build_le(exp.n, exp.classes)),
                 load_network(dir / "gn.moew", build_gn(exp.m)));
  const auto records = trace(model, precompute(model.tap, user.data.test), "customized");
  const auto generic = trace(model, precompute(model.tap, g.test), "generic");
  write_trace_file(dir / "trace.jsonl", records);
  write_trace_file(dir / "generic_trace.jsonl", generic);
  const auto m = metrics_from_trace(records, generic);
  log << "user " << user_id << ": " << records.size() << " customized and " << generic.size()
      << " generic trace lines; MOE customized accuracy " << m.overall_customized << "%\n";
  return records.size();
}

std::string format_metrics_table(const CustomizeResult& r) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-6s %8s %8s %8s %8s %12s | %8s %8s\n", "User", "GE", "LE", "GN",
                "Overall", "LE|GE_wrong", "Generic", "GE-gen");
  s += buf;
  auto row = [&](const std::string& name, const ComponentMetrics& m) {
    const std::string comp = m.complement ? ([&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.2f", *m.complement);
      return std::string(b);
    })()
                                          : "n/a";
    std::snprintf(buf, sizeof buf, "%-6s %8.2f %8.2f %8.2f %8.2f %12s | %8.2f %8.2f\n",
                  name.c_str(), m.ge_accuracy, m.le_accuracy, m.gn_accuracy, m.overall_customized,
                  comp.c_str(), m.overall_generic, m.ge_generic);
    s += buf;
  };
  for (const auto& u : r.users) row(std::to_string(u.user_id), u.metrics);
  row("Avg.", r.average);
  return s;
}

void cmd_report(const Experiment& exp, std::ostream& log) {
  const auto out = layout(exp);
  std::string text;
  if (fs::exists(out.metrics())) {
    const auto j = read_json(out.metrics());
    CustomizeResult r;
    for (const auto& u : j.at("users")) {
      UserResult ur;
      ur.user_id = u.at("user_id").get<std::size_t>();
      ur.metrics = u.get<ComponentMetrics>();
      r.users.push_back(ur);
    }
    r.average = j.at("average").get<ComponentMetrics>();
    text += "Component accuracy (%), n = " + std::to_string(j.at("n").get<std::size_t>()) +
            ", m = " + std::to_string(j.at("m").get<std::size_t>()) + "\n";
    text += format_metrics_table(r);
    if (j.at("average").contains("finetune")) {
      const auto& ft = j["average"]["finetune"];
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "\nAfter customization (%%)  customized  generic\n"
                    "MOE                      %10.2f %8.2f\n"
                    "Fine-tuning              %10.2f %8.2f\n"
                    "GE alone                 %10.2f %8.2f\n",
                    r.average.overall_customized, r.average.overall_generic,
                    ft["customized"].get<double>(), ft["generic"].get<double>(),
                    r.average.ge_accuracy, r.average.ge_generic);
      text += buf;
    }
  }
  if (fs::exists(out.sweep_csv())) {
    std::ifstream f(out.sweep_csv());
    std::stringstream ss;
    ss << f.rdbuf();
    text += "\nPooling sweep\n" + ss.str();
  }
  if (fs::exists(out.overhead_txt())) {
    std::ifstream f(out.overhead_txt());
    std::stringstream ss;
    ss << f.rdbuf();
    text += "\nOverhead of LE + GN relative to GE\n" + ss.str();
  }
  if (text.empty())
    throw Error("nothing to report in " + out.root.string() +
                "; run customize, sweep or overhead first");
  write_text(out.report(), text);
  log << text;
}

void cmd_synth_corpus(const fs::path& dir, std::size_t classes, std::size_t train_per_class,
                      std::size_t test_per_class, std::uint64_t seed, std::ostream& log) {
  fs::create_directories(dir);
  const auto train = generate_glyph_set(classes, train_per_class, derive_seed(seed, "train"));
  const auto test = generate_glyph_set(classes, test_per_class, derive_seed(seed, "test"));
  write_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", train);
  write_idx(dir / "test-images-idx3-ubyte", dir / "test-labels-idx1-ubyte", test);
  log << "wrote " << train.size() << " training and " << test.size() << " test glyphs to "
      << dir.string() << "\n";
}

}  // namespace moe
