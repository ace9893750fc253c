// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "hetembed/data.hpp"
#include "hetembed/embedder.hpp"

namespace hetembed {

/// Forward and backward LSTMs reading the per-source embeddings as a
/// length-k sequence.
struct BiLstmEncoder {
  LstmParams forward;
  LstmParams backward;

  static BiLstmEncoder init(std::size_t input_dim, std::size_t hidden, Rng& rng);
  std::size_t hidden_dim() const { return forward.hidden_dim(); }
  std::size_t output_dim() const { return 2 * hidden_dim(); }
  ParameterList named(const std::string& prefix = "encoder") const;
};

/// q independent logistic outputs over a shared feature vector.
struct BinaryHeads {
  Tensor weight;  // [in x q]
  Tensor bias;    // [q]

  static BinaryHeads init(std::size_t in, std::size_t q, Rng& rng);
  std::size_t labels() const { return bias.size(); }
  ParameterList named(const std::string& prefix = "heads") const;
};

/// Final forward state (after the last source) concatenated with the final
/// backward state (after the first source): 2H values.
Tensor encode_sequence(const EmbeddingSet& es, const BiLstmEncoder& enc);

/// Raw logits W^T features + b.
Tensor head_logits(const Tensor& features, const BinaryHeads& heads);

/// Full Stage-II forward: embed every source, encode, score. Returns q
/// raw logits.
Tensor predict_scores(const CompoundRecord& rec, const std::vector<DomainSpec>& specs,
                      const EmbedderParams& embedder, const EmbedderConfig& cfg,
                      const BiLstmEncoder& enc, const BinaryHeads& heads);

/// Sigmoid cross-entropy summed over labels, in the overflow-free form
/// max(x,0) - x*y + log(1 + exp(-|x|)).
Tensor stage2_loss(const Tensor& logits, const LabelVector& y);

/// Bit j is set iff sigmoid(logit_j) >= threshold; threshold in (0, 1).
LabelVector predict_labels(std::span<const double> logits, double threshold = 0.5);

}  // namespace hetembed
