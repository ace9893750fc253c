// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/domain_extractor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hetembed/error.hpp"

namespace hetembed {

DomainClassifier DomainClassifier::init(std::size_t embedding_dim, std::size_t k, Rng& rng) {
  return {xavier_uniform({embedding_dim, k}, embedding_dim, k, rng), Tensor::zeros({k}, true)};
}

ParameterList DomainClassifier::named(const std::string& prefix) const {
  return {{prefix + ".weight", weight}, {prefix + ".bias", bias}};
}

Tensor domain_logits(const Tensor& embedding, const DomainClassifier& clf) {
  if (embedding.rank() != 1 || embedding.size() != clf.weight.dim(0)) {
    throw ShapeError("domain classifier expects an embedding of " +
                     std::to_string(clf.weight.dim(0)) + " values, got " +
                     shape_to_string(embedding.shape()));
  }
  return add(matmul(embedding, clf.weight), clf.bias);
}

Tensor classify_domain(const Tensor& embedding, const DomainClassifier& clf) {
  return softmax(domain_logits(embedding, clf));
}

Tensor stage1_loss(const std::vector<std::pair<Tensor, std::size_t>>& batch,
                   const DomainClassifier& clf) {
  if (batch.empty()) throw DataError("stage1_loss: empty batch");
  std::vector<Tensor> terms;
  terms.reserve(batch.size());
  for (const auto& [embedding, source] : batch) {
    if (source >= clf.classes()) {
      throw DataError("stage1_loss: source id " + std::to_string(source) + " outside [0, " +
                      std::to_string(clf.classes()) + ")");
    }
    terms.push_back(softmax_nll(domain_logits(embedding, clf), source));
  }
  return mean(concat(terms));
}

double source_accuracy(const Dataset& ds, const EmbedderParams& embedder,
                       const DomainClassifier& clf, const EmbedderConfig& cfg) {
  if (ds.m() == 0) return 0.0;
  NoGradScope no_grad;
  std::size_t correct = 0, total = 0;
  for (const auto& rec : ds.records) {
    const EmbeddingSet es = embed_record(rec, ds.specs, embedder, cfg);
    for (std::size_t j = 0; j < es.vectors.size(); ++j) {
      const Tensor logits = domain_logits(es.vectors[j], clf);
      const auto v = logits.data();
      const auto best = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
      correct += best == j ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<Stage1Epoch> pretrain_stage1(const Dataset& train, const Dataset& holdout,
                                         EmbedderParams& embedder, DomainClassifier& clf,
                                         const EmbedderConfig& cfg, const Stage1Options& options,
                                         const OptimizerConfig& opt) {
  if (train.m() == 0) throw DataError("pretrain_stage1: empty training set");
  if (clf.classes() != train.k()) {
    throw ShapeError("domain classifier has " + std::to_string(clf.classes()) +
                     " classes for " + std::to_string(train.k()) + " sources");
  }
  check_source_lengths(train.specs, cfg);
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  const Dataset& eval_set = holdout.m() > 0 ? holdout : train;

  ParameterList params = embedder.named();
  for (auto& p : clf.named()) params.push_back(p);
  Optimizer optimizer(opt, tensors_of(params));
  Rng rng(options.seed);

  std::vector<std::size_t> order(train.m());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Stage1Epoch> history;
  std::size_t streak = 0;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      Tape tape;
      Tensor loss;
      {
        TapeScope scope(tape);
        std::vector<std::pair<Tensor, std::size_t>> pairs;
        for (std::size_t i = start; i < end; ++i) {
          EmbeddingSet es = embed_record(train.records[order[i]], train.specs, embedder, cfg);
          for (std::size_t j = 0; j < es.vectors.size(); ++j) pairs.emplace_back(es.vectors[j], j);
        }
        loss = stage1_loss(pairs, clf);
      }
      if (!std::isfinite(loss.item())) {
        std::ostringstream os;
        os << "stage I loss is not finite (epoch " << epoch << ", batch " << batches + 1
           << ", loss " << loss.item() << ")";
        throw NumericError(os.str());
      }
      optimizer.zero_grad();
      backward(tape, loss);
      optimizer.step();
      loss_sum += loss.item();
      ++batches;
    }
    const double acc = source_accuracy(eval_set, embedder, clf, cfg);
    history.push_back({epoch, loss_sum / static_cast<double>(batches), acc});
    streak = acc >= options.early_stop_accuracy ? streak + 1 : 0;
    if (options.patience > 0 && streak >= options.patience) break;
  }
  optimizer.zero_grad();
  return history;
}

}  // namespace hetembed
