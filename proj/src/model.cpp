// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/model.hpp"

#include "hetembed/error.hpp"

namespace hetembed {

Model Model::init(Variant variant, const std::vector<DomainSpec>& specs, std::size_t q,
                  const ModelConfig& config, std::uint64_t seed) {
  validate_specs(specs);
  if (specs.empty()) throw ConfigError("model needs at least one feature source");
  if (q == 0) throw ConfigError("model needs at least one label");
  Model m;
  m.variant = variant;
  m.specs = specs;
  m.q = q;
  m.config = config;
  const std::size_t emb = config.embedder.embedding_dim();
  if (m.uses_embedder()) {
    check_source_lengths(specs, config.embedder);
    Rng rng(derive_seed(seed, 1));
    m.embedder = EmbedderParams::init(config.embedder, rng);
  }
  if (m.uses_encoder()) {
    Rng rng(derive_seed(seed, 2));
    m.encoder = BiLstmEncoder::init(emb, config.hidden, rng);
  }
  if (m.uses_classifier()) {
    Rng rng(derive_seed(seed, 4));
    m.classifier = DomainClassifier::init(emb, specs.size(), rng);
  }
  std::size_t head_in = 0;
  switch (variant) {
    case Variant::Linear:
      for (const auto& s : specs) head_in += s.dim;
      break;
    case Variant::Cnn:
      head_in = specs.size() * emb;
      break;
    case Variant::CnnBiLstm:
    case Variant::Full:
      head_in = 2 * config.hidden;
      break;
  }
  Rng rng(derive_seed(seed, 3));
  m.heads = BinaryHeads::init(head_in, q, rng);
  return m;
}

Tensor Model::logits(const CompoundRecord& rec) const {
  switch (variant) {
    case Variant::Linear: {
      std::vector<Tensor> parts;
      for (const auto& s : specs) {
        const auto it = rec.features.find(s.id);
        if (it == rec.features.end()) {
          throw DataError("record '" + rec.id + "' lacks source '" + s.name + "'");
        }
        parts.push_back(Tensor::vector(it->second));
      }
      return head_logits(concat(parts), heads);
    }
    case Variant::Cnn:
      return head_logits(concat(embed_record(rec, specs, embedder, config.embedder).vectors), heads);
    case Variant::CnnBiLstm:
    case Variant::Full:
      return predict_scores(rec, specs, embedder, config.embedder, encoder, heads);
  }
  throw Error("unreachable variant");
}

ParameterList Model::parameters() const {
  ParameterList out;
  const auto append = [&out](const ParameterList& more) { out.insert(out.end(), more.begin(), more.end()); };
  if (uses_embedder()) append(embedder.named());
  if (uses_classifier()) append(classifier.named());
  if (uses_encoder()) append(encoder.named());
  append(heads.named());
  return out;
}

}  // namespace hetembed
