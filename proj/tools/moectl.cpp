// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

// moectl: train the global expert, customize users, sweep pooling sizes,
// report overheads and per-sample traces.

#include <CLI11.hpp>
#include <iostream>

#include "moe/commands.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string users;
  std::optional<std::size_t> classes;
  std::string out;
  bool dry_run = false;
  std::size_t user = 1;
};

moe::Experiment load_experiment(const Options& o) {
  moe::Config cfg;
  std::filesystem::path origin;
  if (!o.config.empty()) {
    origin = o.config;
    cfg = moe::Config::load(origin);
  }
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (!o.users.empty()) cfg.set("users", o.users);
  if (o.classes) cfg.set("classes", std::to_string(*o.classes));
  auto exp = moe::experiment_from_config(cfg, origin);
  if (!o.out.empty()) exp.out_dir = o.out;
  return exp;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Experiment config file (key = value)");
  cmd->add_option("--seed", o.seed, "Override the root seed");
  cmd->add_option("--users", o.users, "User ids, e.g. 1-10 or 1,3,5");
  cmd->add_option("--classes", o.classes, "Number of classes to keep");
  cmd->add_option("--out", o.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Customize a frozen CNN with local experts and a gating network"};
  app.require_subcommand(1);
  Options o;

  auto* train_ge = app.add_subcommand("train-ge", "Train and freeze the global expert");
  auto* customize = app.add_subcommand("customize", "Train LE and GN for each user and evaluate");
  auto* sweep = app.add_subcommand("sweep", "Sweep the pooled feature-map size");
  auto* overhead = app.add_subcommand("overhead", "Report LE+GN overhead relative to GE");
  auto* eval = app.add_subcommand("eval", "Write per-sample traces for one user");
  auto* report = app.add_subcommand("report", "Print the aggregated result tables");
  for (auto* c : {train_ge, customize, sweep, overhead, eval, report}) add_common(c, o);
  sweep->add_flag("--dry-run", o.dry_run, "Compute only the overhead column");
  eval->add_option("--user", o.user, "User id")->check(CLI::PositiveNumber);

  std::string corpus_dir;
  std::size_t corpus_classes = 10, corpus_train = 600, corpus_test = 200;
  std::uint64_t corpus_seed = 7;
  auto* synth = app.add_subcommand("synth-corpus", "Write a procedural glyph corpus as IDX files");
  synth->add_option("--dir", corpus_dir, "Output directory")->required();
  synth->add_option("--classes", corpus_classes, "Number of classes (at most 62)");
  synth->add_option("--train-per-class", corpus_train, "Training glyphs per class");
  synth->add_option("--test-per-class", corpus_test, "Test glyphs per class");
  synth->add_option("--seed", corpus_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      moe::cmd_synth_corpus(corpus_dir, corpus_classes, corpus_train, corpus_test, corpus_seed,
                            std::cout);
      return 0;
    }
    const auto exp = load_experiment(o);
    if (train_ge->parsed()) moe::cmd_train_ge(exp, std::cout);
    else if (customize->parsed()) moe::cmd_customize(exp, std::cout);
    else if (sweep->parsed()) moe::cmd_sweep(exp, o.dry_run, std::cout);
    else if (overhead->parsed()) moe::cmd_overhead(exp, std::cout);
    else if (eval->parsed()) moe::cmd_eval(exp, o.user, std::cout);
    else if (report->parsed()) moe::cmd_report(exp, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "moectl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
