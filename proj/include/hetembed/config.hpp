// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hetembed/data.hpp"
#include "hetembed/embedder.hpp"
#include "hetembed/optimizer.hpp"

namespace hetembed {

/// Which rung of the ablation ladder a model is.
enum class Variant {
  Linear,     // concatenated raw features -> q logistic regressions
  Cnn,        // shared CNN embeddings concatenated -> heads
  CnnBiLstm,  // CNN -> Bi-LSTM -> heads, no Stage I
  Full,       // Stage I pretraining, then CNN -> Bi-LSTM -> heads
};

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct Stage1Config {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double early_stop_accuracy = 0.99;
  std::size_t patience = 5;
};

struct Stage2Config {
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  /// Weight of the Stage-I loss added to the Stage-II objective (0 = purely sequential).
  double aux_ext_weight = 0.0;
  /// Early stopping on validation average precision; 0 disables it.
  std::size_t patience = 20;
};

struct ModelConfig {
  EmbedderConfig embedder;
  std::size_t hidden = 64;
  double threshold = 0.5;
};

struct CsvDomain {
  DomainSpec spec;
  std::filesystem::path path;
};

struct DataConfig {
  /// "synthetic" or "csv".
  std::string source = "synthetic";
  SynthParams synthetic;
  std::vector<CsvDomain> domains;
  std::filesystem::path labels;
  std::optional<int> replicate_on;
  bool impute_missing = false;
  SplitFractions split;
  bool group_by_compound = true;
  bool standardize = true;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  Variant variant = Variant::Full;
  DataConfig data;
  ModelConfig model;
  Stage1Config stage1;
  Stage2Config stage2;
  OptimizerConfig optimizer;

  void validate() const;
  /// Canonical JSON (sorted keys, no whitespace).
  std::string to_json() const;
  /// Relative data paths are resolved against `base_dir`.
  static TrainConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  /// FNV-1a of to_json().
  std::uint64_t hash() const;
};

TrainConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view bytes);

/// Independent stream seed for one consumer of the global seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace hetembed
