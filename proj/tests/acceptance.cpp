// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. An optional argument runs only
// the criteria whose name contains it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hetembed/gradsuite.hpp"
#include "hetembed/multitask_head.hpp"
#include "hetembed/trainer.hpp"
#include "support/metrics_oracle.hpp"
#include "support/test_util.hpp"

using namespace hetembed;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit_s;  // 0 means no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string config_dir() { return hetembed::testing::env_or("HETEMBED_CONFIG_DIR", "configs"); }

Outcome gradient_suite() {
  const auto entries = run_grad_suite(0, 10);
  bool ok = true;
  double worst_ratio = 0.0;
  std::string worst;
  for (const auto& e : entries) {
    ok = ok && e.passed();
    const double ratio = e.max_rel_error / e.tolerance;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = e.name + " " + fmt("%.2e", e.max_rel_error) + " < " + fmt("%.0e", e.tolerance);
    }
  }
  return {ok, std::to_string(entries.size()) + " checks, 10 points each; tightest " + worst};
}

Outcome metric_oracle() {
  Rng rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto batch = hetembed::testing::random_batch(rng, trial % 2 == 1);
    const auto o = hetembed::testing::oracle_metrics(batch);
    for (auto [a, b] : {std::pair{hamming_loss(batch), o.hamming_loss}, std::pair{one_error(batch), o.one_error},
                        std::pair{coverage(batch), o.coverage}, std::pair{ranking_loss(batch), o.ranking_loss},
                        std::pair{average_precision(batch), o.average_precision}}) {
      worst = std::max(worst, std::abs(a - b));
    }
  }
  return {worst <= 1e-12, "200 batches (100 with ties), max |diff| " + fmt("%.1e", worst)};
}

Outcome perfect_identities() {
  Rng rng(7);
  bool ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    auto batch = hetembed::testing::random_batch(rng, false);
    double cov = 0.0;
    for (EvalInstance& e : batch) {
      for (std::size_t j = 0; j < e.scores.size(); ++j) e.scores[j] = e.true_set.test(j) ? 1.0 + rng.uniform() : -rng.uniform();
      e.pred_set = e.true_set;
      cov += static_cast<double>(e.true_set.count()) - 1.0;
    }
    cov /= static_cast<double>(batch.size());
    ok = ok && hamming_loss(batch) == 0.0 && one_error(batch) == 0.0 && ranking_loss(batch) == 0.0 &&
         average_precision(batch) == 1.0 && std::abs(coverage(batch) - cov) <= 1e-15;
  }
  return {ok, "200 perfect batches: HL=0 OE=0 RL=0 AP=1 coverage=mean(|y|-1)"};
}

Outcome loss_stability() {
  auto loss = [](double x, int y) {
    return stage2_loss(Tensor::vector({x}), LabelVector({static_cast<std::uint8_t>(y)})).item();
  };
  double worst_naive = 0.0;
  bool finite = true;
  for (int i = 0; i <= 10000; ++i) {
    const double x = -10.0 + 20.0 * i / 10000.0;
    const double big = -1e4 + 2e4 * i / 10000.0;
    for (int y : {0, 1}) {
      const long double s = 1.0L / (1.0L + std::exp(-static_cast<long double>(x)));
      const double naive = static_cast<double>(-(y * std::log(s) + (1 - y) * std::log(1.0L - s)));
      worst_naive = std::max(worst_naive, std::abs(loss(x, y) - naive));
      const double l = loss(big, y);
      finite = finite && std::isfinite(l) && l >= 0.0;
    }
  }
  const double ln2_err = std::abs(loss(0.0, 1) - std::log(2.0));
  return {finite && worst_naive < 1e-6 && ln2_err <= 1e-12,
          "10001-point grids; max |naive diff| " + fmt("%.1e", worst_naive) + ", |loss(0,1)-ln2| " +
              fmt("%.1e", ln2_err) + (finite ? ", finite to 1e4" : ", NON-FINITE")};
}

Outcome roi_contract() {
  const EmbedderConfig cfg;
  Rng rng(1);
  const EmbedderParams params = EmbedderParams::init(cfg, rng);
  std::vector<double> a(80), b(12328);
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  for (double& v : b) v = rng.uniform(-1.0, 1.0);
  const std::size_t la = embed_source(Tensor::vector(a), params, cfg).size();
  const std::size_t lb = embed_source(Tensor::vector(b), params, cfg).size();
  return {la == lb && la == cfg.embedding_dim(),
          "lengths 80 -> " + std::to_string(la) + ", 12328 -> " + std::to_string(lb)};
}

Outcome stage1_learnability() {
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.data.synthetic.k = 3;
  cfg.data.synthetic.m = 600;
  cfg.data.synthetic.signature_amplitude = 1.0;
  cfg.stage1.epochs = 200;
  cfg.stage2.epochs = 0;
  const TrainResult r = train(cfg);
  const double acc = r.stage1.empty() ? 0.0 : r.stage1.back().holdout_accuracy;
  return {acc >= 0.95 && r.stage1.size() <= 200,
          "held-out source accuracy " + fmt("%.4f", acc) + " after " + std::to_string(r.stage1.size()) + " epochs"};
}

Outcome ablation_ordering() {
  const TrainConfig base = load_config(fs::path(config_dir()) / "benchmark.json");
  std::vector<double> a, c, d;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    const auto rows = run_ablation_ladder(cfg);
    a.push_back(rows[0].val.value("average_precision"));
    c.push_back(rows[2].val.value("average_precision"));
    d.push_back(rows[3].val.value("average_precision"));
    std::printf("  seed %llu val AP: linear %.4f cnn %.4f cnn_bilstm %.4f full %.4f\n",
                static_cast<unsigned long long>(seed), a.back(), rows[1].val.value("average_precision"),
                c.back(), d.back());
    std::fflush(stdout);
  }
  const double ma = median(a), mc = median(c), md = median(d);
  const bool over_c = md >= mc;
  const bool over_a = md >= ma + 0.03;
  return {over_c && over_a, "median val AP full " + fmt("%.4f", md) + " vs cnn_bilstm " + fmt("%.4f", mc) +
                                (over_c ? " (ok)" : " (not met)") + ", vs linear+0.03 " + fmt("%.4f", ma + 0.03) +
                                (over_a ? " (ok)" : " (not met)")};
}

Outcome determinism() {
  TrainConfig cfg = load_config(fs::path(config_dir()) / "quick.json");
  cfg.seed = 17;
  const auto first = train(cfg).checkpoint(cfg);
  const auto second = train(cfg).checkpoint(cfg);
  const bool same = first.to_bytes() == second.to_bytes();
  hetembed::testing::TempDir dir;
  first.save(dir / "a.bin");
  Checkpoint::load(dir / "a.bin").save(dir / "b.bin");
  const std::string bytes_a = hetembed::testing::read_file(dir / "a.bin");
  const bool round_trip = bytes_a == hetembed::testing::read_file(dir / "b.bin");
  return {same && round_trip, "two runs " + std::string(same ? "identical" : "DIFFER") + ", save/load/save " +
                                  (round_trip ? "identical" : "DIFFERS") + " (" + std::to_string(bytes_a.size()) +
                                  " bytes)"};
}

Outcome cli_contract() {
  hetembed::testing::TempDir dir;
  const std::string exe = "'" + hetembed::testing::env_or("HETEMBED_CLI", "hetembed") + "'";
  const std::string quick = (fs::path(config_dir()) / "quick.json").string();
  const auto log = dir / "log.txt";
  auto run = [&](const std::string& args) { return hetembed::testing::run_command(exe + " " + args, log); };
  const std::string data = (dir / "data").string(), out = (dir / "run").string();
  std::vector<std::pair<std::string, int>> steps = {
      {"--config " + quick + " --seed 3 --out " + data + " gen-data", 0},
      {"--config " + data + "/config.json --out " + out + " train", 0},
      {"--out " + out + "/eval evaluate --checkpoint " + out + "/checkpoint.bin --split test", 0},
      {"--out " + out + "/pred predict --checkpoint " + out + "/checkpoint.bin", 0},
      {"--config " + (dir / "missing.json").string() + " train", 1},
      {"evaluate --checkpoint " + (dir / "missing.bin").string(), 1},
      {"train --no-such-flag", 2},
      {"no-such-command", 2},
  };
  std::ostringstream codes;
  bool ok = true;
  for (const auto& [args, want] : steps) {
    const int got = run(args);
    codes << got;
    ok = ok && got == want;
  }
  const std::string report = hetembed::testing::read_file(fs::path(out) / "eval" / "report.csv");
  const bool report_ok = report.find("average_precision,") != std::string::npos && report.find("nan") == std::string::npos;
  const std::string preds = hetembed::testing::read_file(fs::path(out) / "pred" / "predictions.csv");
  const auto rows = std::count(preds.begin(), preds.end(), '\n');
  return {ok && report_ok && rows > 1, "exit codes " + codes.str() + " (want 00001122), report " +
                                           (report_ok ? "non-empty" : "MISSING") + ", " +
                                           std::to_string(rows - 1) + " prediction rows"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const std::vector<Criterion> criteria = {
      {"gradient_suite", 60, gradient_suite},
      {"metric_oracle", 10, metric_oracle},
      {"perfect_prediction_identities", 0, perfect_identities},
      {"stage2_loss_stability", 0, loss_stability},
      {"roi_fixed_length", 0, roi_contract},
      {"stage1_learnability", 180, stage1_learnability},
      {"ablation_ordering", 600, ablation_ordering},
      {"determinism", 0, determinism},
      {"cli_end_to_end", 300, cli_contract},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && c.name.find(only) == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit_s == 0 || secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::string timing = fmt("%.1fs", secs);
    if (c.time_limit_s > 0) timing += " < " + fmt("%.0fs", c.time_limit_s) + (in_time ? "" : " EXCEEDED");
    std::printf("%s %-30s %s [%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
