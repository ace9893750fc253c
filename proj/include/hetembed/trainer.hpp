// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hetembed/checkpoint.hpp"
#include "hetembed/config.hpp"
#include "hetembed/domain_extractor.hpp"
#include "hetembed/metrics.hpp"
#include "hetembed/model.hpp"

namespace hetembed {

/// Builds the dataset a config describes: synthetic draw (seeded from the
/// config seed) or CSV ingestion.
Dataset load_dataset(const TrainConfig& cfg);

/// Seeded split plus standardization statistics fitted on the training part.
struct PreparedSplit {
  DatasetSplit raw;
  Standardizer standardizer;
  DatasetSplit standardized;
  std::uint64_t checksum = 0;
};

PreparedSplit prepare_split(const TrainConfig& cfg, const Dataset& ds);

struct Stage2Epoch {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_average_precision = 0.0;
};

struct TrainResult {
  Model model;
  Standardizer standardizer;
  std::vector<std::string> label_names;
  std::vector<Stage1Epoch> stage1;
  std::vector<Stage2Epoch> stage2;
  MetricReport val_report;
  MetricReport test_report;
  std::uint64_t split_checksum = 0;

  Checkpoint checkpoint(const TrainConfig& cfg) const {
    return Checkpoint::capture(cfg, model, label_names, standardizer);
  }
};

/// Two-stage training of cfg.variant: Stage I (full variant only) fits the
/// embedder and domain classifier on source-type classification; Stage II
/// fits everything on the per-label loss, optionally plus
/// aux_ext_weight times the Stage-I loss. Early stopping on validation
/// average precision restores the best epoch's parameters.
TrainResult train(const TrainConfig& cfg);
TrainResult train_on_split(const TrainConfig& cfg, const PreparedSplit& split);

/// Writes checkpoint.bin, stage1_history.csv, stage2_history.csv and
/// report.csv (test split metrics) into `out_dir`.
void write_training_outputs(const TrainConfig& cfg, const TrainResult& result,
                            const std::filesystem::path& out_dir);

/// Threads used for forward-only scoring: HETEMBED_THREADS if set, else the
/// hardware concurrency.
std::size_t evaluation_threads();

/// Logits and thresholded predictions for every record of an already
/// standardized dataset. Labels, when absent, are left empty.
std::vector<EvalInstance> score_dataset(const Model& model, const Dataset& ds, double threshold);

/// Throws DataError naming the first domain whose name or dimension differs.
void check_compatible(const std::vector<DomainSpec>& expected, const std::vector<DomainSpec>& actual);

/// Five-metric report of a checkpoint on raw (unstandardized) data.
MetricReport evaluate(const Checkpoint& checkpoint, const Dataset& ds);

struct Prediction {
  std::string id;
  std::vector<double> logits;
  LabelVector labels;
  /// No label reached the threshold.
  bool empty = false;
};

std::vector<Prediction> predict(const Checkpoint& checkpoint, const Dataset& ds);

/// `id,logit_<c>...,pred_<c>...,empty_prediction`.
void write_predictions_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& label_names,
                           const std::vector<Prediction>& predictions);

/// Pairs a scores CSV with a labels CSV by id. Scores have an `id` column
/// and one column per label, named either `<label>` or `logit_<label>`.
/// When `pred_<label>` columns are present they give the predicted sets;
/// otherwise a label is predicted when sigmoid(score) >= threshold.
std::vector<EvalInstance> load_scored_instances(const std::filesystem::path& scores,
                                                const std::filesystem::path& labels, double threshold);

/// Concatenated raw features into q logistic regressions, under the same
/// split, seed and optimizer as `cfg`.
TrainResult baseline_linear(const TrainConfig& cfg, const Dataset& ds);

struct AblationRow {
  Variant variant = Variant::Full;
  MetricReport val;
  MetricReport test;
  std::uint64_t split_checksum = 0;
};

/// Trains linear, cnn, cnn_bilstm and the full framework on one shared split.
std::vector<AblationRow> run_ablation_ladder(const TrainConfig& cfg);

/// One row per (variant, split) with all five metrics and the split checksum.
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);
std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace hetembed
