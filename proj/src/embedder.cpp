// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/embedder.hpp"

#include "hetembed/error.hpp"

namespace hetembed {

void EmbedderConfig::validate() const {
  for (std::size_t c : channels) {
    if (c == 0) throw ConfigError("embedder channels must be positive");
  }
  if (kernel_width == 0 || pool_width == 0 || pool_stride == 0 || roi_bins == 0) {
    throw ConfigError("embedder kernel_width, pool_width, pool_stride and roi_bins must be positive");
  }
}

std::size_t min_source_length(const EmbedderConfig& cfg) {
  // Walk the stack backwards from one output position of the last conv.
  const auto before_conv = [&](std::size_t out) { return out + cfg.kernel_width - 1; };
  const auto before_pool = [&](std::size_t out) {
    return cfg.pool_width + (out - 1) * cfg.pool_stride;
  };
  std::size_t len = before_conv(1);
  len = before_conv(before_pool(len));
  len = before_conv(before_pool(len));
  return len;
}

void check_source_lengths(const std::vector<DomainSpec>& specs, const EmbedderConfig& cfg) {
  cfg.validate();
  const std::size_t min_len = min_source_length(cfg);
  for (const DomainSpec& s : specs) {
    if (s.dim < min_len) {
      throw ConfigError("source '" + s.name + "' has " + std::to_string(s.dim) +
                        " features; the embedder needs at least " + std::to_string(min_len));
    }
  }
}

EmbedderParams EmbedderParams::init(const EmbedderConfig& cfg, Rng& rng) {
  cfg.validate();
  EmbedderParams p;
  std::size_t c_in = 1;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t c_out = cfg.channels[i];
    const std::size_t w = cfg.kernel_width;
    p.kernels[i] = xavier_uniform({c_out, c_in, w}, c_in * w, c_out * w, rng);
    p.biases[i] = Tensor::zeros({c_out}, true);
    c_in = c_out;
  }
  return p;
}

ParameterList EmbedderParams::named(const std::string& prefix) const {
  ParameterList out;
  for (std::size_t i = 0; i < 3; ++i) {
    out.push_back({prefix + ".conv" + std::to_string(i + 1) + ".kernel", kernels[i]});
    out.push_back({prefix + ".conv" + std::to_string(i + 1) + ".bias", biases[i]});
  }
  return out;
}

Tensor embed_source(const Tensor& raw, const EmbedderParams& params, const EmbedderConfig& cfg) {
  if (raw.size() < min_source_length(cfg)) {
    throw ShapeError("raw vector of length " + std::to_string(raw.size()) +
                     " is shorter than the embedder minimum " +
                     std::to_string(min_source_length(cfg)));
  }
  Tensor x = reshape(raw, {1, raw.size()});
  x = relu(conv1d(x, params.kernels[0], params.biases[0]));
  x = max_pool1d(x, cfg.pool_width, cfg.pool_stride);
  x = relu(conv1d(x, params.kernels[1], params.biases[1]));
  x = max_pool1d(x, cfg.pool_width, cfg.pool_stride);
  x = relu(conv1d(x, params.kernels[2], params.biases[2]));
  return flatten(roi_pool1d(x, cfg.roi_bins));
}

EmbeddingSet embed_record(const CompoundRecord& rec, const std::vector<DomainSpec>& specs,
                          const EmbedderParams& params, const EmbedderConfig& cfg) {
  EmbeddingSet out;
  for (const DomainSpec& spec : specs) {
    const auto it = rec.features.find(spec.id);
    if (it == rec.features.end()) {
      throw DataError("record '" + rec.id + "' lacks source '" + spec.name + "'");
    }
    out.vectors.push_back(embed_source(Tensor::vector(it->second), params, cfg));
  }
  return out;
}

}  // namespace hetembed
