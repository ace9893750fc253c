// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Exit codes: 0 success, 1 data/config/numeric
// error, 2 usage error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hetembed/checkpoint.hpp"
#include "hetembed/config.hpp"
#include "hetembed/error.hpp"
#include "hetembed/gradsuite.hpp"
#include "hetembed/metrics.hpp"
#include "hetembed/trainer.hpp"

namespace fs = std::filesystem;
using namespace hetembed;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

TrainConfig resolve_config(const Globals& g) {
  TrainConfig cfg = g.config.empty() ? TrainConfig{} : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

Dataset select_split(const TrainConfig& cfg, const Dataset& ds, const std::string& which) {
  if (which == "all") return ds;
  const DatasetSplit s = prepare_split(cfg, ds).raw;
  if (which == "train") return s.train;
  if (which == "val") return s.val;
  return s.test;
}

// Dataset for evaluate/predict: the --config data section if given, else the
// data the checkpoint was trained on.
Dataset checkpoint_data(const Globals& g, const Checkpoint& ck, const std::string& which) {
  TrainConfig used = g.config.empty() ? ck.config() : load_config(g.config);
  if (g.seed) used.seed = *g.seed;
  return select_split(used, load_dataset(used), which);
}

int cmd_gen_data(const Globals& g) {
  TrainConfig cfg = resolve_config(g);
  if (cfg.data.source != "synthetic") throw ConfigError("gen-data needs a synthetic data section");
  const Dataset ds = load_dataset(cfg);
  const fs::path out(g.out);
  fs::create_directories(out);
  TrainConfig written = cfg;
  written.data.source = "csv";
  written.data.domains.clear();
  for (const DomainSpec& s : ds.specs) {
    const std::string file = s.name + ".csv";
    write_domain_csv(out / file, ds, s.id);
    written.data.domains.push_back({s, file});
  }
  write_labels_csv(out / "labels.csv", ds);
  written.data.labels = "labels.csv";
  std::ofstream(out / "config.json") << written.to_json() << "\n";
  std::cout << "wrote " << ds.m() << " records, " << ds.k() << " sources, " << ds.q() << " labels to "
            << out.string() << "\n";
  return 0;
}

int cmd_train(const Globals& g) {
  const TrainConfig cfg = resolve_config(g);
  const TrainResult result = train(cfg);
  write_training_outputs(cfg, result, g.out);
  std::cout << "variant " << variant_name(cfg.variant) << ", stage I epochs " << result.stage1.size()
            << ", stage II epochs " << result.stage2.size() << "\n";
  if (!result.val_report.metrics.empty()) std::cout << "validation\n" << format_report_table(result.val_report);
  if (!result.test_report.metrics.empty()) std::cout << "test\n" << format_report_table(result.test_report);
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& checkpoint, const std::string& which) {
  const Checkpoint ck = Checkpoint::load(checkpoint);
  const Dataset ds = checkpoint_data(g, ck, which);
  const MetricReport report = evaluate(ck, ds);
  fs::create_directories(g.out);
  write_report_csv(fs::path(g.out) / "report.csv", report);
  std::cout << format_report_table(report);
  return 0;
}

int cmd_predict(const Globals& g, const std::string& checkpoint, const std::string& which) {
  const Checkpoint ck = Checkpoint::load(checkpoint);
  const Dataset ds = checkpoint_data(g, ck, which);
  const auto preds = predict(ck, ds);
  fs::create_directories(g.out);
  write_predictions_csv(fs::path(g.out) / "predictions.csv", ck.label_names, preds);
  std::size_t empty = 0;
  for (const auto& p : preds) empty += p.empty ? 1 : 0;
  std::cout << preds.size() << " records scored, " << preds.size() - empty << " with at least one label, "
            << empty << " empty\n";
  return 0;
}

int cmd_ablate(const Globals& g) {
  const TrainConfig cfg = resolve_config(g);
  const auto rows = run_ablation_ladder(cfg);
  fs::create_directories(g.out);
  write_ablation_csv(fs::path(g.out) / "ablation.csv", rows);
  std::cout << format_ablation_table(rows);
  return 0;
}

int cmd_gradcheck(const Globals& g, std::size_t points) {
  const auto entries = run_grad_suite(g.seed.value_or(0), points);
  std::cout << format_grad_suite(entries);
  for (const auto& e : entries) {
    if (!e.passed()) return 1;
  }
  return 0;
}

int cmd_metrics(const Globals& g, const std::string& scores_path, const std::string& labels_path,
                double threshold) {
  const MetricReport report = compute_report(load_scored_instances(scores_path, labels_path, threshold));
  fs::create_directories(g.out);
  write_report_csv(fs::path(g.out) / "report.csv", report);
  std::cout << format_report_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hetembed: multi-source embedding and multi-label prediction"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed, "global random seed");
  app.add_option("--out", g.out, "output directory");

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset as CSV files plus a config");
  auto* tr = app.add_subcommand("train", "two-stage training; writes checkpoint and histories");
  std::string checkpoint;
  std::string which = "test";
  auto* ev = app.add_subcommand("evaluate", "five-metric report of a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--split", which, "train, val, test or all")->check(CLI::IsMember({"train", "val", "test", "all"}));
  std::string pred_which = "all";
  auto* pr = app.add_subcommand("predict", "per-record logits and label sets");
  pr->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  pr->add_option("--split", pred_which, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  auto* ab = app.add_subcommand("ablate", "train the four ablation variants on one split");
  std::size_t points = 10;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gc->add_option("--points", points, "random points per check")->check(CLI::PositiveNumber);
  std::string scores, labels;
  double threshold = 0.5;
  auto* me = app.add_subcommand("metrics", "metric report from score and label CSVs");
  me->add_option("--scores", scores, "scores CSV")->required();
  me->add_option("--labels", labels, "labels CSV")->required();
  me->add_option("--threshold", threshold, "probability threshold for predicted sets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e, std::cerr, std::cerr);
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (gen->parsed()) return cmd_gen_data(g);
    if (tr->parsed()) return cmd_train(g);
    if (ev->parsed()) return cmd_evaluate(g, checkpoint, which);
    if (pr->parsed()) return cmd_predict(g, checkpoint, pred_which);
    if (ab->parsed()) return cmd_ablate(g);
    if (gc->parsed()) return cmd_gradcheck(g, points);
    if (me->parsed()) return cmd_metrics(g, scores, labels, threshold);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
