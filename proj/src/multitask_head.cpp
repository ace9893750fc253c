// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/multitask_head.hpp"

#include <cmath>

#include "hetembed/error.hpp"

namespace hetembed {

namespace {

LstmParams init_cell(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  const std::size_t gates = 4 * hidden;
  return {xavier_uniform({input_dim, gates}, input_dim, gates, rng),
          xavier_uniform({hidden, gates}, hidden, gates, rng), Tensor::zeros({gates}, true)};
}

LstmState zero_state(std::size_t hidden) {
  return {Tensor::zeros({hidden}), Tensor::zeros({hidden})};
}

}  // namespace

BiLstmEncoder BiLstmEncoder::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  if (hidden == 0) throw ConfigError("encoder hidden size must be positive");
  BiLstmEncoder enc;
  enc.forward = init_cell(input_dim, hidden, rng);
  enc.backward = init_cell(input_dim, hidden, rng);
  return enc;
}

ParameterList BiLstmEncoder::named(const std::string& prefix) const {
  ParameterList out;
  for (const auto& [dir, cell] : {std::pair{"fwd", &forward}, std::pair{"bwd", &backward}}) {
    const std::string base = prefix + "." + dir;
    out.push_back({base + ".w_input", cell->w_input});
    out.push_back({base + ".w_hidden", cell->w_hidden});
    out.push_back({base + ".bias", cell->bias});
  }
  return out;
}

BinaryHeads BinaryHeads::init(std::size_t in, std::size_t q, Rng& rng) {
  return {xavier_uniform({in, q}, in, q, rng), Tensor::zeros({q}, true)};
}

ParameterList BinaryHeads::named(const std::string& prefix) const {
  return {{prefix + ".weight", weight}, {prefix + ".bias", bias}};
}

Tensor encode_sequence(const EmbeddingSet& es, const BiLstmEncoder& enc) {
  if (es.vectors.empty()) throw DataError("encode_sequence: empty embedding set");
  const std::size_t hidden = enc.hidden_dim();
  LstmState fwd = zero_state(hidden);
  for (const Tensor& e : es.vectors) fwd = lstm_cell(e, fwd, enc.forward);
  LstmState bwd = zero_state(hidden);
  for (auto it = es.vectors.rbegin(); it != es.vectors.rend(); ++it) {
    bwd = lstm_cell(*it, bwd, enc.backward);
  }
  return concat({fwd.h, bwd.h});
}

Tensor head_logits(const Tensor& features, const BinaryHeads& heads) {
  if (features.rank() != 1 || features.size() != heads.weight.dim(0)) {
    throw ShapeError("heads expect " + std::to_string(heads.weight.dim(0)) + " features, got " +
                     shape_to_string(features.shape()));
  }
  return add(matmul(features, heads.weight), heads.bias);
}

Tensor predict_scores(const CompoundRecord& rec, const std::vector<DomainSpec>& specs,
                      const EmbedderParams& embedder, const EmbedderConfig& cfg,
                      const BiLstmEncoder& enc, const BinaryHeads& heads) {
  return head_logits(encode_sequence(embed_record(rec, specs, embedder, cfg), enc), heads);
}

Tensor stage2_loss(const Tensor& logits, const LabelVector& y) {
  for (double v : logits.data()) {
    if (!std::isfinite(v)) throw NumericError("stage2_loss: non-finite logit");
  }
  return sigmoid_cross_entropy(logits, y.as_doubles());
}

LabelVector predict_labels(std::span<const double> logits, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold must lie strictly between 0 and 1");
  }
  std::vector<std::uint8_t> bits(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double x = logits[j];
    const double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    bits[j] = p >= threshold ? 1 : 0;
  }
  return LabelVector(std::move(bits));
}

}  // namespace hetembed
