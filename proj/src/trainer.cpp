// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include "csv.hpp"
#include "hetembed/error.hpp"

namespace hetembed {

namespace {

// Streams of the global seed.
constexpr std::uint64_t kDataStream = 100;
constexpr std::uint64_t kSplitStream = 101;
constexpr std::uint64_t kStage1Stream = 102;
constexpr std::uint64_t kStage2Stream = 103;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void require_training_labels(const Dataset& ds) {
  for (const auto& r : ds.records) {
    if (!r.label) throw DataError("training record '" + r.id + "' has no label");
    if (r.label->size() != ds.q()) {
      throw DataError("record '" + r.id + "' has " + std::to_string(r.label->size()) + " labels, expected " +
                      std::to_string(ds.q()));
    }
    if (r.label->count() == 0) throw DataError("training record '" + r.id + "' has no active label");
  }
}

double monitor_ap(const Model& model, const Dataset& ds, double threshold) {
  const auto scored = score_dataset(model, ds, threshold);
  return compute_report(scored).value("average_precision");
}

}  // namespace

Dataset load_dataset(const TrainConfig& cfg) {
  if (cfg.data.source == "synthetic") {
    SynthParams p = cfg.data.synthetic;
    p.seed = derive_seed(cfg.seed, kDataStream);
    return synth_generate(p);
  }
  std::vector<DomainSpec> specs;
  std::vector<DomainTable> tables;
  for (const auto& d : cfg.data.domains) {
    specs.push_back(d.spec);
    tables.push_back(load_domain_csv(d.path, d.spec));
  }
  LabelTable labels;
  if (!cfg.data.labels.empty()) labels = load_labels_csv(cfg.data.labels);
  return assemble_dataset(tables, specs, labels, {cfg.data.replicate_on, cfg.data.impute_missing});
}

PreparedSplit prepare_split(const TrainConfig& cfg, const Dataset& ds) {
  PreparedSplit out;
  out.raw = split(ds, cfg.data.split, derive_seed(cfg.seed, kSplitStream), cfg.data.group_by_compound);
  out.standardizer = cfg.data.standardize ? Standardizer::fit(out.raw.train) : Standardizer::identity(ds.specs);
  out.standardized = {out.standardizer.apply(out.raw.train), out.standardizer.apply(out.raw.val),
                      out.standardizer.apply(out.raw.test)};
  out.checksum = out.raw.checksum();
  return out;
}

TrainResult train_on_split(const TrainConfig& cfg, const PreparedSplit& prepared) {
  cfg.validate();
  const Dataset& train_set = prepared.standardized.train;
  const Dataset& val_set = prepared.standardized.val;
  const Dataset& monitor = val_set.m() > 0 ? val_set : train_set;
  if (train_set.m() == 0) throw DataError("training split is empty");
  require_training_labels(train_set);
  require_training_labels(val_set);

  TrainResult result;
  result.label_names = train_set.label_names;
  result.standardizer = prepared.standardizer;
  result.split_checksum = prepared.checksum;
  result.model = Model::init(cfg.variant, train_set.specs, train_set.q(), cfg.model, cfg.seed);
  Model& model = result.model;

  if (cfg.variant == Variant::Full) {
    Stage1Options s1{cfg.stage1.epochs, cfg.stage1.batch_size, cfg.stage1.early_stop_accuracy,
                     cfg.stage1.patience, derive_seed(cfg.seed, kStage1Stream)};
    result.stage1 = pretrain_stage1(train_set, val_set, model.embedder, model.classifier,
                                    cfg.model.embedder, s1, cfg.optimizer);
  }

  const ParameterList params = model.parameters();
  Optimizer optimizer(cfg.optimizer, tensors_of(params));
  Rng rng(derive_seed(cfg.seed, kStage2Stream));
  const bool aux = cfg.variant == Variant::Full && cfg.stage2.aux_ext_weight > 0.0;
  std::vector<std::size_t> order(train_set.m());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_ap = -1.0;
  std::size_t since_best = 0;
  std::vector<std::vector<double>> best_values;
  for (std::size_t epoch = 1; epoch <= cfg.stage2.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.stage2.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.stage2.batch_size);
      Tape tape;
      Tensor loss;
      {
        TapeScope scope(tape);
        std::vector<Tensor> terms;
        std::vector<std::pair<Tensor, std::size_t>> pairs;
        for (std::size_t i = start; i < end; ++i) {
          const CompoundRecord& rec = train_set.records[order[i]];
          Tensor logits;
          if (aux) {
            const EmbeddingSet es = embed_record(rec, model.specs, model.embedder, cfg.model.embedder);
            for (std::size_t j = 0; j < es.vectors.size(); ++j) pairs.emplace_back(es.vectors[j], j);
            logits = head_logits(encode_sequence(es, model.encoder), model.heads);
          } else {
            logits = model.logits(rec);
          }
          terms.push_back(stage2_loss(logits, *rec.label));
        }
        loss = mean(concat(terms));
        if (aux) loss = add(loss, scale(stage1_loss(pairs, model.classifier), cfg.stage2.aux_ext_weight));
      }
      if (!std::isfinite(loss.item())) {
        std::ostringstream os;
        os << "stage II loss is not finite (epoch " << epoch << ", batch " << batches + 1 << ", loss "
           << loss.item() << ")";
        throw NumericError(os.str());
      }
      optimizer.zero_grad();
      backward(tape, loss);
      optimizer.step();
      loss_sum += loss.item();
      ++batches;
    }
    const double ap = monitor_ap(model, monitor, cfg.model.threshold);
    result.stage2.push_back({epoch, loss_sum / static_cast<double>(batches), ap});
    if (ap > best_ap) {
      best_ap = ap;
      best_values = snapshot(params);
      since_best = 0;
    } else if (cfg.stage2.patience > 0 && ++since_best >= cfg.stage2.patience) {
      break;
    }
  }
  optimizer.zero_grad();
  if (!best_values.empty()) restore(params, best_values);

  if (val_set.m() > 0) result.val_report = compute_report(score_dataset(model, val_set, cfg.model.threshold));
  const Dataset& test_set = prepared.standardized.test;
  if (test_set.m() > 0) {
    require_training_labels(test_set);
    result.test_report = compute_report(score_dataset(model, test_set, cfg.model.threshold));
  }
  return result;
}

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  return train_on_split(cfg, prepare_split(cfg, ds));
}

void write_training_outputs(const TrainConfig& cfg, const TrainResult& result,
                            const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  result.checkpoint(cfg).save(out_dir / "checkpoint.bin");
  {
    csv::Writer w(out_dir / "stage1_history.csv", {"epoch", "loss", "holdout_accuracy"});
    for (const auto& e : result.stage1) {
      w.row({std::to_string(e.epoch), csv::format_number(e.loss), csv::format_number(e.holdout_accuracy)});
    }
  }
  {
    csv::Writer w(out_dir / "stage2_history.csv", {"epoch", "loss", "val_average_precision"});
    for (const auto& e : result.stage2) {
      w.row({std::to_string(e.epoch), csv::format_number(e.loss), csv::format_number(e.val_average_precision)});
    }
  }
  if (!result.test_report.metrics.empty()) write_report_csv(out_dir / "report.csv", result.test_report);
}

std::size_t evaluation_threads() {
  if (const char* env = std::getenv("HETEMBED_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<EvalInstance> score_dataset(const Model& model, const Dataset& ds, double threshold) {
  std::vector<EvalInstance> out(ds.m());
  const auto work = [&](std::size_t first, std::size_t stride) {
    NoGradScope no_grad;
    for (std::size_t i = first; i < ds.m(); i += stride) {
      const CompoundRecord& rec = ds.records[i];
      EvalInstance& inst = out[i];
      inst.scores = model.logits(rec).to_vector();
      inst.pred_set = predict_labels(inst.scores, threshold);
      if (rec.label) inst.true_set = *rec.label;
    }
  };
  const std::size_t threads = std::min(evaluation_threads(), std::max<std::size_t>(1, ds.m()));
  if (threads <= 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        work(t, threads);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void check_compatible(const std::vector<DomainSpec>& expected, const std::vector<DomainSpec>& actual) {
  for (const DomainSpec& want : expected) {
    const auto it = std::find_if(actual.begin(), actual.end(), [&](const DomainSpec& s) { return s.id == want.id; });
    if (it == actual.end()) throw DataError("dataset lacks domain '" + want.name + "'");
    if (it->dim != want.dim || it->name != want.name) {
      throw DataError("domain " + std::to_string(want.id) + " differs: checkpoint has '" + want.name + "' (dim " +
                      std::to_string(want.dim) + "), dataset has '" + it->name + "' (dim " +
                      std::to_string(it->dim) + ")");
    }
  }
  if (actual.size() != expected.size()) {
    throw DataError("dataset has " + std::to_string(actual.size()) + " domains, checkpoint expects " +
                    std::to_string(expected.size()));
  }
}

MetricReport evaluate(const Checkpoint& checkpoint, const Dataset& ds) {
  check_compatible(checkpoint.specs, ds.specs);
  if (ds.m() == 0) throw DataError("cannot evaluate an empty dataset");
  for (const auto& r : ds.records) {
    if (!r.label) throw DataError("record '" + r.id + "' has no label to evaluate against");
    if (r.label->size() != checkpoint.label_names.size()) {
      throw DataError("record '" + r.id + "' has " + std::to_string(r.label->size()) + " labels, checkpoint has " +
                      std::to_string(checkpoint.label_names.size()));
    }
  }
  const Model model = checkpoint.model();
  const Dataset standardized = checkpoint.standardizer.apply(ds);
  return compute_report(score_dataset(model, standardized, checkpoint.config().model.threshold));
}

std::vector<Prediction> predict(const Checkpoint& checkpoint, const Dataset& ds) {
  check_compatible(checkpoint.specs, ds.specs);
  const Model model = checkpoint.model();
  const Dataset standardized = checkpoint.standardizer.apply(ds);
  const auto scored = score_dataset(model, standardized, checkpoint.config().model.threshold);
  std::vector<Prediction> out;
  out.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    Prediction p;
    p.id = ds.records[i].id;
    p.logits = scored[i].scores;
    p.labels = scored[i].pred_set;
    p.empty = p.labels.count() == 0;
    out.push_back(std::move(p));
  }
  return out;
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& label_names,
                           const std::vector<Prediction>& predictions) {
  std::vector<std::string> header{"id"};
  for (const auto& n : label_names) header.push_back("logit_" + n);
  for (const auto& n : label_names) header.push_back("pred_" + n);
  header.push_back("empty_prediction");
  csv::Writer w(path, header);
  for (const auto& p : predictions) {
    std::vector<std::string> row{p.id};
    for (double v : p.logits) row.push_back(csv::format_number(v));
    for (std::uint8_t b : p.labels.bits) row.push_back(b ? "1" : "0");
    row.push_back(p.empty ? "1" : "0");
    w.row(row);
  }
}

std::vector<EvalInstance> load_scored_instances(const std::filesystem::path& scores,
                                                const std::filesystem::path& labels, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie strictly between 0 and 1");
  const LabelTable truth = load_labels_csv(labels);
  const csv::Table table = csv::read(scores);
  const std::size_t q = truth.names.size();
  std::vector<std::size_t> score_col(q, 0), pred_col(q, 0);
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    for (std::size_t j = 0; j < q; ++j) {
      const std::string& n = truth.names[j];
      if (table.header[c] == n || table.header[c] == "logit_" + n) score_col[j] = c;
      if (table.header[c] == "pred_" + n) pred_col[j] = c;
    }
  }
  for (std::size_t j = 0; j < q; ++j) {
    if (score_col[j] == 0) throw DataError(scores.string() + ": no score column for label '" + truth.names[j] + "'");
  }
  const bool has_pred = std::none_of(pred_col.begin(), pred_col.end(), [](std::size_t c) { return c == 0; });

  std::vector<EvalInstance> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const auto it = truth.rows.find(cells[0]);
    if (it == truth.rows.end()) throw DataError(labels.string() + ": no labels for id '" + cells[0] + "'");
    EvalInstance inst;
    inst.true_set = it->second;
    inst.pred_set.bits.resize(q);
    for (std::size_t j = 0; j < q; ++j) {
      const double v = csv::parse_number(cells[score_col[j]], scores, r + 2, score_col[j] + 1);
      inst.scores.push_back(v);
      inst.pred_set.bits[j] = has_pred ? static_cast<std::uint8_t>(cells[pred_col[j]] == "1")
                                       : static_cast<std::uint8_t>(1.0 / (1.0 + std::exp(-v)) >= threshold);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

TrainResult baseline_linear(const TrainConfig& cfg, const Dataset& ds) {
  if (ds.m() == 0) throw DataError("baseline_linear: empty dataset");
  TrainConfig linear = cfg;
  linear.variant = Variant::Linear;
  return train_on_split(linear, prepare_split(linear, ds));
}

std::vector<AblationRow> run_ablation_ladder(const TrainConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  const PreparedSplit prepared = prepare_split(cfg, ds);
  std::vector<AblationRow> rows;
  for (Variant v : {Variant::Linear, Variant::Cnn, Variant::CnnBiLstm, Variant::Full}) {
    TrainConfig c = cfg;
    c.variant = v;
    TrainResult r = train_on_split(c, prepared);
    rows.push_back({v, std::move(r.val_report), std::move(r.test_report), r.split_checksum});
  }
  return rows;
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  csv::Writer w(path, {"variant", "split", "hamming_loss", "one_error", "coverage", "ranking_loss",
                       "average_precision", "split_checksum"});
  for (const auto& row : rows) {
    for (const auto& [name, report] : {std::pair{"val", &row.val}, std::pair{"test", &row.test}}) {
      if (report->metrics.empty()) continue;
      std::vector<std::string> cells{variant_name(row.variant), name};
      for (const auto& m : report->metrics) cells.push_back(csv::format_number(m.value));
      cells.push_back(hex64(row.split_checksum));
      w.row(cells);
    }
  }
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-28s %-5s %8s %8s %8s %8s %8s\n", "variant", "split", "HL", "OE", "Cov",
                "RL", "AP");
  out += line;
  for (const auto& row : rows) {
    for (const auto& [name, report] : {std::pair{"val", &row.val}, std::pair{"test", &row.test}}) {
      if (report->metrics.empty()) continue;
      std::snprintf(line, sizeof(line), "%-28s %-5s %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                    variant_name(row.variant).c_str(), name, report->value("hamming_loss"),
                    report->value("one_error"), report->value("coverage"), report->value("ranking_loss"),
                    report->value("average_precision"));
      out += line;
    }
  }
  if (!rows.empty()) out += "split checksum " + hex64(rows.front().split_checksum) + "\n";
  return out;
}

}  // namespace hetembed
