// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "hetembed/config.hpp"
#include "hetembed/domain_extractor.hpp"
#include "hetembed/multitask_head.hpp"

namespace hetembed {

/// Parameters of one ladder variant. Components a variant does not use are
/// left undefined and are absent from parameters().
struct Model {
  Variant variant = Variant::Full;
  std::vector<DomainSpec> specs;
  std::size_t q = 0;
  ModelConfig config;

  EmbedderParams embedder;
  DomainClassifier classifier;
  BiLstmEncoder encoder;
  BinaryHeads heads;

  /// Every component draws from its own stream of `seed`, so variants that
  /// share a component start from identical values.
  static Model init(Variant variant, const std::vector<DomainSpec>& specs, std::size_t q,
                    const ModelConfig& config, std::uint64_t seed);

  bool uses_embedder() const { return variant != Variant::Linear; }
  bool uses_encoder() const { return variant == Variant::CnnBiLstm || variant == Variant::Full; }
  bool uses_classifier() const { return variant == Variant::Full; }

  /// Raw label logits for one (already standardized) record.
  Tensor logits(const CompoundRecord& rec) const;

  /// All parameters in a fixed order; this order defines checkpoint layout.
  ParameterList parameters() const;
};

}  // namespace hetembed
