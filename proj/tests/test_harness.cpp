// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hetembed/error.hpp"
#include "hetembed/trainer.hpp"
#include "support/test_util.hpp"

using namespace hetembed;
using hetembed::testing::TempDir;

namespace {

TrainConfig tiny_config(std::uint64_t seed = 0) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.data.synthetic.dims = {64, 80, 96};
  cfg.data.synthetic.m = 120;
  cfg.model.embedder.channels = {4, 4, 8};
  cfg.model.embedder.kernel_width = 5;
  cfg.model.embedder.pool_width = 3;
  cfg.model.embedder.pool_stride = 2;
  cfg.model.embedder.roi_bins = 4;
  cfg.model.hidden = 8;
  cfg.stage1.epochs = 2;
  cfg.stage2.epochs = 3;
  cfg.stage2.patience = 0;
  cfg.optimizer.lr = 3e-3;
  return cfg;
}

TrainConfig benchmark_config(std::uint64_t seed) {
  const auto dir = hetembed::testing::env_or("HETEMBED_CONFIG_DIR", "configs");
  TrainConfig cfg = load_config(std::filesystem::path(dir) / "benchmark.json");
  cfg.seed = seed;
  return cfg;
}

std::string cli() { return hetembed::testing::env_or("HETEMBED_CLI", "hetembed"); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("config JSON round trip") {
  TrainConfig cfg = tiny_config(42);
  cfg.variant = Variant::CnnBiLstm;
  cfg.stage2.aux_ext_weight = 0.25;
  const TrainConfig back = TrainConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.hash() == cfg.hash());
  TrainConfig other = cfg;
  other.optimizer.lr = 1e-2;
  CHECK(other.hash() != cfg.hash());
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(TrainConfig::from_json("{\"optimizer\": {\"lr\": -1}}"), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json("{\"data\": {\"split\": [0.5, 0.1, 0.1]}}"),
                  ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("Adam leaves parameters alone under a zero gradient") {
  Tensor p = Tensor::vector({0.5, -1.0, 2.0}, true);
  Optimizer opt(OptimizerConfig{}, {p});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(scale(p, 0.0));
  }
  backward(tape, loss);
  opt.step();
  CHECK(p.to_vector() == std::vector<double>{0.5, -1.0, 2.0});
}

TEST_CASE("Adam first step matches the bias-corrected closed form") {
  const std::vector<double> start = {0.5, -1.0, 2.0, 0.0};
  const std::vector<double> g = {3.0, -0.2, 1e-3, -7.0};
  OptimizerConfig cfg;
  cfg.lr = 0.01;
  Tensor p = Tensor::vector(start, true);
  Optimizer opt(cfg, {p});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(mul(p, Tensor::vector(g)));
  }
  backward(tape, loss);
  opt.step();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m_hat = (1 - cfg.beta1) * g[i] / (1 - cfg.beta1);
    const double v_hat = (1 - cfg.beta2) * g[i] * g[i] / (1 - cfg.beta2);
    const double expected = start[i] - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    CHECK(std::abs(p[i] - expected) < 1e-9);
    CHECK(std::abs(p[i] - (start[i] - cfg.lr * (g[i] > 0 ? 1.0 : -1.0))) < 1e-7);
  }
  CHECK(opt.steps() == 1);
}

TEST_CASE("SGD step") {
  OptimizerConfig cfg;
  cfg.kind = "sgd";
  cfg.lr = 0.1;
  Tensor p = Tensor::vector({1.0, 2.0}, true);
  Optimizer opt(cfg, {p});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(mul(p, p));
  }
  backward(tape, loss);
  opt.step();
  CHECK(p[0] == doctest::Approx(0.8));
  CHECK(p[1] == doctest::Approx(1.6));
}

TEST_CASE("checkpoint round trips byte for byte") {
  const TrainConfig cfg = tiny_config(3);
  const TrainResult result = train(cfg);
  const Checkpoint ck = result.checkpoint(cfg);
  const auto bytes = ck.to_bytes();
  CHECK(Checkpoint::from_bytes(bytes).to_bytes() == bytes);

  TempDir dir;
  ck.save(dir / "a.bin");
  Checkpoint::load(dir / "a.bin").save(dir / "b.bin");
  CHECK(hetembed::testing::read_file(dir / "a.bin") == hetembed::testing::read_file(dir / "b.bin"));

  const Model restored = Checkpoint::load(dir / "a.bin").model();
  const auto original = result.model.parameters();
  const auto loaded = restored.parameters();
  REQUIRE(original.size() == loaded.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    CHECK(original[i].name == loaded[i].name);
    CHECK(original[i].tensor.to_vector() == loaded[i].tensor.to_vector());
  }

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS(Checkpoint::from_bytes(truncated));
  auto tampered = bytes;
  tampered[8] ^= 0x01;
  CHECK_THROWS(Checkpoint::from_bytes(tampered));
  CHECK_THROWS(Checkpoint::load(dir / "missing.bin"));
}

TEST_CASE("training is deterministic") {
  const TrainConfig cfg = tiny_config(5);
  const auto a = train(cfg).checkpoint(cfg).to_bytes();
  const auto b = train(cfg).checkpoint(cfg).to_bytes();
  CHECK(a == b);
  const TrainConfig other = tiny_config(6);
  CHECK(train(other).checkpoint(other).to_bytes() != a);
}

TEST_CASE("zero Stage-II epochs keep the Stage-I embedder and untrained heads") {
  TrainConfig cfg = tiny_config(7);
  cfg.stage2.epochs = 0;
  const TrainResult r = train(cfg);
  CHECK(r.stage2.empty());
  CHECK(r.stage1.size() == cfg.stage1.epochs);
  const Model fresh = Model::init(cfg.variant, r.model.specs, r.model.q, cfg.model, cfg.seed);
  CHECK(r.model.heads.weight.to_vector() == fresh.heads.weight.to_vector());
  CHECK(r.model.encoder.forward.w_input.to_vector() == fresh.encoder.forward.w_input.to_vector());
  CHECK(r.model.embedder.kernels[0].to_vector() != fresh.embedder.kernels[0].to_vector());

  TrainConfig staged = cfg;
  staged.stage2.epochs = 2;
  const TrainResult s = train(staged);
  CHECK(s.stage1.size() == r.stage1.size());
  CHECK(s.stage1.back().loss == r.stage1.back().loss);
  CHECK(s.model.heads.weight.to_vector() != fresh.heads.weight.to_vector());
}

TEST_CASE("training writes checkpoint, histories and report") {
  const TrainConfig cfg = tiny_config(8);
  const TrainResult r = train(cfg);
  TempDir dir;
  write_training_outputs(cfg, r, dir.path());
  for (const char* f : {"checkpoint.bin", "stage1_history.csv", "stage2_history.csv", "report.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const std::string hist = hetembed::testing::read_file(dir / "stage2_history.csv");
  CHECK(hist.rfind("epoch,loss,val_average_precision\n1,", 0) == 0);
  CHECK(std::count(hist.begin(), hist.end(), '\n') == static_cast<long>(r.stage2.size() + 1));
}

TEST_CASE("zero heads predict every label for every record") {
  const TrainConfig cfg = tiny_config(9);
  const Dataset ds = load_dataset(cfg);
  Model model = Model::init(cfg.variant, ds.specs, ds.q(), cfg.model, cfg.seed);
  for (double& w : model.heads.weight.mutable_data()) w = 0.0;
  const Checkpoint ck = Checkpoint::capture(cfg, model, ds.label_names, Standardizer::identity(ds.specs));
  const auto preds = predict(ck, ds);
  REQUIRE(preds.size() == ds.m());
  for (const auto& p : preds) {
    CHECK(p.labels.count() == 14);
    CHECK_FALSE(p.empty);
    for (double v : p.logits) CHECK(v == 0.0);
  }
}

TEST_CASE("prediction CSV rows and empty-set flags") {
  const TrainConfig cfg = tiny_config(10);
  const Dataset ds = load_dataset(cfg);
  Model model = Model::init(cfg.variant, ds.specs, ds.q(), cfg.model, cfg.seed);
  // Shift every head down by the median top logit so that about half the
  // records clear no threshold.
  std::vector<double> top;
  for (const auto& p : predict(Checkpoint::capture(cfg, model, ds.label_names, Standardizer::identity(ds.specs)), ds)) {
    top.push_back(*std::max_element(p.logits.begin(), p.logits.end()));
  }
  for (double& b : model.heads.bias.mutable_data()) b = -median(top);
  const Checkpoint ck = Checkpoint::capture(cfg, model, ds.label_names, Standardizer::identity(ds.specs));
  Dataset unlabeled = ds;
  for (auto& r : unlabeled.records) r.label.reset();
  const auto preds = predict(ck, unlabeled);
  REQUIRE(preds.size() == ds.m());

  TempDir dir;
  write_predictions_csv(dir / "p.csv", ds.label_names, preds);
  const std::string text = hetembed::testing::read_file(dir / "p.csv");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("id,logit_A,", 0) == 0);
  CHECK(line.find(",pred_V,empty_prediction") != std::string::npos);
  std::size_t rows = 0, flagged = 0, recount = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 1 + 2 * 14 + 1);
    std::size_t on = 0;
    for (std::size_t j = 0; j < 14; ++j) on += cells[15 + j] == "1";
    recount += on == 0;
    flagged += cells.back() == "1";
  }
  CHECK(rows == ds.m());
  CHECK(flagged == recount);
  CHECK(flagged > 0);
  CHECK(flagged < rows);
}

TEST_CASE("evaluate rejects incompatible or empty data") {
  const TrainConfig cfg = tiny_config(11);
  const Dataset ds = load_dataset(cfg);
  const Model model = Model::init(cfg.variant, ds.specs, ds.q(), cfg.model, cfg.seed);
  const Checkpoint ck = Checkpoint::capture(cfg, model, ds.label_names, Standardizer::identity(ds.specs));

  Dataset renamed = ds;
  renamed.specs[1].name = "expression";
  try {
    evaluate(ck, renamed);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("expression") != std::string::npos);
  }

  Dataset missing = ds;
  missing.records[0].features.erase(2);
  CHECK_THROWS(evaluate(ck, missing));

  Dataset empty = ds;
  empty.records.clear();
  CHECK_THROWS_AS(evaluate(ck, empty), DataError);
  CHECK_NOTHROW(evaluate(ck, ds));
}

TEST_CASE("overfitting a small training set drives AP to one") {
  TrainConfig cfg = tiny_config(12);
  cfg.data.synthetic.m = 40;
  cfg.data.split = {0.9, 0.05, 0.05};
  cfg.model.embedder.channels = {8, 8, 16};
  cfg.model.hidden = 16;
  cfg.stage1.epochs = 5;
  cfg.stage2.epochs = 150;
  cfg.stage2.batch_size = 8;
  cfg.optimizer.lr = 5e-3;
  const Dataset ds = load_dataset(cfg);
  const PreparedSplit prepared = prepare_split(cfg, ds);
  const TrainResult r = train_on_split(cfg, prepared);
  const Checkpoint ck = r.checkpoint(cfg);
  CHECK(evaluate(ck, prepared.raw.train).value("average_precision") > 0.99);
}

TEST_CASE("linear baseline solves linearly separable labels") {
  TrainConfig cfg = tiny_config(13);
  cfg.data.synthetic.dependency = 0.0;
  cfg.data.synthetic.linear = true;
  cfg.data.synthetic.m = 400;
  cfg.stage2.epochs = 100;
  cfg.stage2.patience = 20;
  cfg.optimizer.lr = 1e-2;
  const Dataset ds = load_dataset(cfg);
  const TrainResult a = baseline_linear(cfg, ds);
  CHECK(a.model.variant == Variant::Linear);
  CHECK(a.val_report.value("average_precision") >= 0.95);
  const TrainResult b = baseline_linear(cfg, ds);
  CHECK(a.val_report.value("average_precision") == b.val_report.value("average_precision"));
  CHECK(a.test_report.value("coverage") == b.test_report.value("coverage"));
}

TEST_CASE("ablation ladder shares one split across four variants") {
  TrainConfig cfg = tiny_config(14);
  cfg.stage2.epochs = 2;
  const auto rows = run_ablation_ladder(cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].variant == Variant::Linear);
  CHECK(rows[3].variant == Variant::Full);
  for (const auto& r : rows) {
    CHECK(r.split_checksum == rows[0].split_checksum);
    CHECK(r.val.metrics.size() == 5);
  }
  TempDir dir;
  write_ablation_csv(dir / "ablation.csv", rows);
  const std::string text = hetembed::testing::read_file(dir / "ablation.csv");
  CHECK(text.rfind("variant,split,hamming_loss,one_error,coverage,ranking_loss,average_precision,split_checksum\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 9);
  CHECK(format_ablation_table(rows).find("linear") != std::string::npos);
}

TEST_CASE("validation AP improves over the first 20 Stage-II epochs") {
  std::vector<double> first, twentieth;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg = benchmark_config(seed);
    cfg.stage2.epochs = 20;
    cfg.stage2.patience = 0;
    const TrainResult r = train(cfg);
    REQUIRE(r.stage2.size() == 20);
    first.push_back(r.stage2.front().val_average_precision);
    twentieth.push_back(r.stage2.back().val_average_precision);
  }
  MESSAGE("median val AP epoch 1: " << median(first) << ", epoch 20: " << median(twentieth));
  CHECK(median(twentieth) > median(first));
}

TEST_CASE("scored instances from CSV files") {
  TempDir dir;
  hetembed::testing::write_file(dir / "labels.csv", "id,A,B,C\nx,1,0,0\ny,0,1,1\n");
  hetembed::testing::write_file(dir / "scores.csv", "id,logit_A,logit_B,logit_C\ny,-1,2,0.5\nx,3,-2,0\n");
  const auto batch = load_scored_instances(dir / "scores.csv", dir / "labels.csv", 0.5);
  REQUIRE(batch.size() == 2);
  CHECK(batch[0].scores == std::vector<double>{-1, 2, 0.5});
  CHECK(batch[0].true_set == LabelVector({0, 1, 1}));
  CHECK(batch[1].pred_set == LabelVector({1, 0, 1}));
  const MetricReport r = compute_report(batch);
  CHECK(r.value("average_precision") == 1.0);
  CHECK_THROWS_AS(load_scored_instances(dir / "scores.csv", dir / "labels.csv", 1.5), ConfigError);
  hetembed::testing::write_file(dir / "bad.csv", "id,A,B\nx,1,2\n");
  CHECK_THROWS_AS(load_scored_instances(dir / "bad.csv", dir / "labels.csv", 0.5), DataError);
}

TEST_CASE("command-line exit codes") {
  TempDir dir;
  const auto log = dir / "log.txt";
  const std::string exe = "'" + cli() + "'";
  CHECK(hetembed::testing::run_command(exe + " --help", log) == 0);
  CHECK(hetembed::testing::run_command(exe, log) == 2);
  CHECK(hetembed::testing::run_command(exe + " frobnicate", log) == 2);
  CHECK(hetembed::testing::run_command(exe + " train --bogus", log) == 2);
  CHECK(hetembed::testing::run_command(exe + " --config " + (dir / "missing.json").string() + " train", log) == 1);
  CHECK(hetembed::testing::read_file(log).find("missing.json") != std::string::npos);

  hetembed::testing::write_file(dir / "labels.csv", "id,A,B,C\nx,1,0,0\ny,0,1,1\n");
  hetembed::testing::write_file(dir / "scores.csv", "id,logit_A,logit_B,logit_C\ny,-1,2,0.5\nx,3,-2,0\n");
  const std::string metrics = exe + " --out " + dir.path().string() + " metrics --scores " +
                              (dir / "scores.csv").string() + " --labels " + (dir / "labels.csv").string();
  CHECK(hetembed::testing::run_command(metrics, log) == 0);
  const std::string report = hetembed::testing::read_file(dir / "report.csv");
  CHECK(report.find("average_precision,1,2,0") != std::string::npos);
  CHECK(hetembed::testing::run_command(exe + " metrics --scores " + (dir / "scores.csv").string(), log) == 2);
  CHECK(hetembed::testing::run_command(exe + " metrics --scores nope.csv --labels nope.csv", log) == 1);
}
