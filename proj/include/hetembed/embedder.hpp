// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "hetembed/data.hpp"
#include "hetembed/parameters.hpp"
#include "hetembed/tensor.hpp"

namespace hetembed {

/// Shape of the shared per-source CNN:
/// conv -> relu -> pool -> conv -> relu -> pool -> conv -> relu -> roi_pool.
struct EmbedderConfig {
  std::array<std::size_t, 3> channels = {32, 48, 96};
  std::size_t kernel_width = 8;
  std::size_t pool_width = 4;
  std::size_t pool_stride = 2;
  std::size_t roi_bins = 32;

  std::size_t embedding_dim() const { return channels[2] * roi_bins; }
  void validate() const;

  bool operator==(const EmbedderConfig&) const = default;
};

/// Smallest raw length that survives the conv/pool stack.
std::size_t min_source_length(const EmbedderConfig& cfg);

/// Throws ConfigError naming the first source shorter than min_source_length.
void check_source_lengths(const std::vector<DomainSpec>& specs, const EmbedderConfig& cfg);

/// One parameter set shared by every feature source.
struct EmbedderParams {
  std::array<Tensor, 3> kernels;  // [C_out x C_in x W]
  std::array<Tensor, 3> biases;   // [C_out]

  static EmbedderParams init(const EmbedderConfig& cfg, Rng& rng);
  ParameterList named(const std::string& prefix = "embedder") const;
};

/// The k per-source embeddings of one record, ordered by domain id.
struct EmbeddingSet {
  std::vector<Tensor> vectors;
};

/// Maps a raw vector [L] to an embedding of channels[2] * roi_bins values.
Tensor embed_source(const Tensor& raw, const EmbedderParams& params, const EmbedderConfig& cfg);

/// Embeds every declared source of `rec` in domain-id order.
EmbeddingSet embed_record(const CompoundRecord& rec, const std::vector<DomainSpec>& specs,
                          const EmbedderParams& params, const EmbedderConfig& cfg);

}  // namespace hetembed
