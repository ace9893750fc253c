// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hetembed/error.hpp"
#include "hetembed/multitask_head.hpp"
#include "hetembed/rng.hpp"

using namespace hetembed;

namespace {

std::vector<double> uniform(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

EmbeddingSet random_set(std::size_t k, std::size_t d, Rng& rng) {
  EmbeddingSet es;
  for (std::size_t j = 0; j < k; ++j) es.vectors.push_back(Tensor::vector(uniform(d, rng)));
  return es;
}

BiLstmEncoder zero_encoder(std::size_t d, std::size_t hidden) {
  BiLstmEncoder enc;
  for (LstmParams* cell : {&enc.forward, &enc.backward}) {
    cell->w_input = Tensor::zeros({d, 4 * hidden});
    cell->w_hidden = Tensor::zeros({hidden, 4 * hidden});
    cell->bias = Tensor::zeros({4 * hidden});
  }
  return enc;
}

// -[y log s + (1-y) log(1-s)] evaluated directly in extended precision.
double naive_bce(double x, double y) {
  const long double s = 1.0L / (1.0L + std::exp(-static_cast<long double>(x)));
  return static_cast<double>(-(y * std::log(s) + (1.0L - y) * std::log(1.0L - s)));
}

double loss1(double x, int y) {
  return stage2_loss(Tensor::vector({x}), LabelVector({static_cast<std::uint8_t>(y)})).item();
}

EmbedderConfig small_embedder() {
  EmbedderConfig cfg;
  cfg.channels = {4, 4, 8};
  cfg.roi_bins = 4;
  return cfg;
}

}  // namespace

TEST_CASE("encoder output has 2H values for any k") {
  Rng rng(1);
  const BiLstmEncoder enc = BiLstmEncoder::init(10, 6, rng);
  CHECK(enc.output_dim() == 12);
  for (std::size_t k : {1, 2, 3, 7}) CHECK(encode_sequence(random_set(k, 10, rng), enc).shape() == Shape{12});
  CHECK_THROWS_AS(encode_sequence(EmbeddingSet{}, enc), DataError);
  CHECK_THROWS_AS(BiLstmEncoder::init(10, 0, rng), ConfigError);
}

TEST_CASE("zero encoder gives zero output") {
  Rng rng(2);
  const Tensor out = encode_sequence(random_set(3, 8, rng), zero_encoder(8, 5));
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("single source: both directions read the same vector") {
  Rng rng(3);
  BiLstmEncoder enc = BiLstmEncoder::init(6, 4, rng);
  enc.backward = {enc.forward.w_input.clone(), enc.forward.w_hidden.clone(), enc.forward.bias.clone()};
  const Tensor out = encode_sequence(random_set(1, 6, rng), enc);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == out[4 + i]);
}

TEST_CASE("encoder matches a hand-rolled recurrence") {
  Rng rng(4);
  const std::size_t d = 5, hidden = 3;
  BiLstmEncoder enc = BiLstmEncoder::init(d, hidden, rng);
  for (double& b : enc.forward.bias.mutable_data()) b = rng.uniform(-0.5, 0.5);
  const EmbeddingSet es = random_set(4, d, rng);

  auto run = [&](const LstmParams& p, bool reverse) {
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    for (std::size_t t = 0; t < es.vectors.size(); ++t) {
      const Tensor& x = es.vectors[reverse ? es.vectors.size() - 1 - t : t];
      std::vector<double> z(4 * hidden);
      for (std::size_t g = 0; g < 4 * hidden; ++g) {
        double acc = p.bias[g];
        for (std::size_t i = 0; i < d; ++i) acc += x[i] * p.w_input[i * 4 * hidden + g];
        for (std::size_t i = 0; i < hidden; ++i) acc += h[i] * p.w_hidden[i * 4 * hidden + g];
        z[g] = acc;
      }
      auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
      for (std::size_t u = 0; u < hidden; ++u) {
        const double ig = sig(z[u]), fg = sig(z[hidden + u]);
        const double gg = std::tanh(z[2 * hidden + u]), og = sig(z[3 * hidden + u]);
        c[u] = fg * c[u] + ig * gg;
        h[u] = og * std::tanh(c[u]);
      }
    }
    return h;
  };
  const auto fwd = run(enc.forward, false);
  const auto bwd = run(enc.backward, true);
  const Tensor out = encode_sequence(es, enc);
  for (std::size_t u = 0; u < hidden; ++u) {
    CHECK(out[u] == doctest::Approx(fwd[u]).epsilon(1e-12));
    CHECK(out[hidden + u] == doctest::Approx(bwd[u]).epsilon(1e-12));
  }
}

TEST_CASE("reversing the sources swaps the halves when both directions share weights") {
  Rng rng(5);
  BiLstmEncoder enc = BiLstmEncoder::init(6, 4, rng);
  enc.backward = {enc.forward.w_input.clone(), enc.forward.w_hidden.clone(), enc.forward.bias.clone()};
  for (std::size_t k : {2, 3, 5}) {
    const EmbeddingSet es = random_set(k, 6, rng);
    EmbeddingSet rev{std::vector<Tensor>(es.vectors.rbegin(), es.vectors.rend())};
    const Tensor a = encode_sequence(es, enc);
    const Tensor b = encode_sequence(rev, enc);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a[i] == b[4 + i]);
      CHECK(a[4 + i] == b[i]);
    }
  }
}

TEST_CASE("stage2_loss examples") {
  CHECK(std::abs(loss1(0.0, 1) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(loss1(0.0, 0) - std::log(2.0)) < 1e-12);
  CHECK(loss1(100.0, 1) < 1e-40);
  CHECK(std::abs(loss1(-100.0, 1) - 100.0) < 1e-12);
  CHECK(std::abs(loss1(100.0, 0) - 100.0) < 1e-12);
}

TEST_CASE("stage2_loss agrees with the naive form and stays finite") {
  for (int i = 0; i <= 10000; ++i) {
    const double x = -10.0 + 20.0 * i / 10000.0;
    for (int y : {0, 1}) {
      CHECK(std::abs(loss1(x, y) - naive_bce(x, y)) < 1e-6);
    }
  }
  for (int i = 0; i <= 10000; ++i) {
    const double x = -1e4 + 2e4 * i / 10000.0;
    for (int y : {0, 1}) {
      const double l = loss1(x, y);
      CHECK(std::isfinite(l));
      CHECK(l >= 0.0);
    }
  }
  CHECK(loss1(40.0, 1) < 1e-8);
  CHECK(loss1(-40.0, 0) < 1e-8);
  CHECK(loss1(40.0, 1) > 0.0);
}

TEST_CASE("stage2_loss sums over labels") {
  Rng rng(6);
  const auto x = uniform(14, rng, 5.0);
  const LabelVector y = LabelVector::from_indices(14, {0, 3, 9});
  double expected = 0.0;
  for (std::size_t j = 0; j < 14; ++j) expected += naive_bce(x[j], y.test(j) ? 1.0 : 0.0);
  CHECK(stage2_loss(Tensor::vector(x), y).item() == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(stage2_loss(Tensor::vector({0.0, NAN}), LabelVector({1, 0})), NumericError);
}

TEST_CASE("predict_labels") {
  CHECK(predict_labels(std::vector<double>(14, 0.0)).count() == 14);
  CHECK(predict_labels(std::vector<double>{5.0, -5.0}) == LabelVector({1, 0}));
  CHECK(predict_labels(std::vector<double>{0.1, -0.1}, 0.53) == LabelVector({0, 0}));
  CHECK(predict_labels(std::vector<double>{800.0, -800.0}, 0.9) == LabelVector({1, 0}));
  CHECK_THROWS_AS(predict_labels(std::vector<double>{1.0}, 0.0), ConfigError);
  CHECK_THROWS_AS(predict_labels(std::vector<double>{1.0}, 1.0), ConfigError);
}

TEST_CASE("zero heads score every label at 0.5") {
  Rng rng(7);
  const BinaryHeads heads{Tensor::zeros({8, 14}), Tensor::zeros({14})};
  const Tensor logits = head_logits(Tensor::vector(uniform(8, rng)), heads);
  for (double v : logits.data()) CHECK(v == 0.0);
  CHECK(predict_labels(logits.data()).count() == 14);
  CHECK_THROWS_AS(head_logits(Tensor::zeros({9}), heads), ShapeError);
}

TEST_CASE("predict_scores is pure and its gradient matches finite differences") {
  const EmbedderConfig cfg = small_embedder();
  Rng rng(8);
  const EmbedderParams emb = EmbedderParams::init(cfg, rng);
  const BiLstmEncoder enc = BiLstmEncoder::init(cfg.embedding_dim(), 6, rng);
  BinaryHeads heads = BinaryHeads::init(enc.output_dim(), 5, rng);
  const std::vector<DomainSpec> specs = {{0, "a", 64}, {1, "b", 80}};
  CompoundRecord rec;
  rec.id = "r";
  rec.features[0] = uniform(64, rng);
  rec.features[1] = uniform(80, rng);

  const Tensor first = predict_scores(rec, specs, emb, cfg, enc, heads);
  const Tensor second = predict_scores(rec, specs, emb, cfg, enc, heads);
  CHECK(first.shape() == Shape{5});
  CHECK(first.to_vector() == second.to_vector());

  for (int source : {0, 1}) {
    auto logit0 = [&](const Tensor& raw) {
      EmbeddingSet es;
      for (const auto& s : specs) {
        es.vectors.push_back(s.id == source ? embed_source(raw, emb, cfg)
                                            : embed_source(Tensor::vector(rec.features.at(s.id)), emb, cfg));
      }
      return slice(head_logits(encode_sequence(es, enc), heads), 0, 1);
    };
    const auto result = grad_check(logit0, Tensor::vector(rec.features[source]));
    CHECK(result.checked > 10);
    CHECK(result.max_rel_error < 1e-4);
  }
}
