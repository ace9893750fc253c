// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hetembed/data.hpp"
#include "hetembed/embedder.hpp"
#include "hetembed/optimizer.hpp"

namespace hetembed {

/// Softmax over feature-source types: p(. | e) = softmax(W^T e + b).
///
/// Trained jointly with the embedder so that sources become *more*
/// distinguishable; there is no gradient reversal.
struct DomainClassifier {
  Tensor weight;  // [embedding_dim x k]
  Tensor bias;    // [k]

  static DomainClassifier init(std::size_t embedding_dim, std::size_t k, Rng& rng);
  std::size_t classes() const { return bias.size(); }
  ParameterList named(const std::string& prefix = "domain_classifier") const;
};

/// Probability vector over the k source types.
Tensor classify_domain(const Tensor& embedding, const DomainClassifier& clf);

/// Unnormalized scores W^T e + b.
Tensor domain_logits(const Tensor& embedding, const DomainClassifier& clf);

/// Mean negative log-likelihood of the true source type.
Tensor stage1_loss(const std::vector<std::pair<Tensor, std::size_t>>& batch,
                   const DomainClassifier& clf);

struct Stage1Options {
  std::size_t epochs = 200;
  /// Records per batch; each record contributes one pair per source, so
  /// every batch holds all k source types.
  std::size_t batch_size = 32;
  double early_stop_accuracy = 0.99;
  /// Consecutive epochs at or above early_stop_accuracy before stopping.
  std::size_t patience = 5;
  std::uint64_t seed = 0;
};

struct Stage1Epoch {
  std::size_t epoch = 0;
  double loss = 0.0;
  double holdout_accuracy = 0.0;
};

/// Fraction of (record, source) pairs whose argmax source type is correct.
double source_accuracy(const Dataset& ds, const EmbedderParams& embedder,
                       const DomainClassifier& clf, const EmbedderConfig& cfg);

/// Minimizes stage1_loss over the embedder and classifier in place and
/// returns the per-epoch history. Accuracy is measured on `holdout`, or on
/// `train` when `holdout` is empty.
std::vector<Stage1Epoch> pretrain_stage1(const Dataset& train, const Dataset& holdout,
                                         EmbedderParams& embedder, DomainClassifier& clf,
                                         const EmbedderConfig& cfg, const Stage1Options& options,
                                         const OptimizerConfig& opt);

}  // namespace hetembed
