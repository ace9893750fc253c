// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/gradsuite.hpp"

#include <cstdio>
#include <functional>

#include "hetembed/config.hpp"
#include "hetembed/domain_extractor.hpp"
#include "hetembed/multitask_head.hpp"
#include "hetembed/tensor.hpp"

namespace hetembed {

namespace {

constexpr double kSmooth = 1e-6;
constexpr double kComposite = 1e-4;
// Parameter coordinates sampled per tensor in the composite loss checks.
constexpr std::size_t kCoordsPerParam = 6;

std::vector<double> uniform_values(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

Tensor uniform_tensor(Shape shape, Rng& rng) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return Tensor(std::move(shape), uniform_values(n, rng));
}

using ScalarFn = std::function<Tensor(const Tensor&)>;

// A primitive check: given the rng, produce the scalar closures to check and
// the input point they share.
using PointCase = std::function<std::pair<std::vector<ScalarFn>, Tensor>(Rng&)>;

// Checks every output coordinate of x -> op(x) separately, i.e. the full
// Jacobian row by row. Summing outputs instead lets gradient terms cancel
// and the finite-difference truncation error dominate the comparison.
PointCase componentwise(Shape in_shape, std::size_t out_size, ScalarFn op) {
  return [in_shape, out_size, op](Rng& rng) {
    std::vector<ScalarFn> fs;
    for (std::size_t j = 0; j < out_size; ++j) {
      fs.push_back([op, j](const Tensor& x) { return slice(flatten(op(x)), j, 1); });
    }
    return std::make_pair(std::move(fs), uniform_tensor(in_shape, rng));
  };
}

struct Accumulator {
  GradSuiteEntry entry;
  void add(const GradCheckResult& r) {
    entry.max_rel_error = std::max(entry.max_rel_error, r.max_rel_error);
    entry.checked += r.checked;
    entry.skipped_kinks += r.skipped_kinks;
    ++entry.points;
  }
};

GradSuiteEntry run_point_case(const std::string& name, double tol, const PointCase& make, std::uint64_t seed,
                              std::size_t points) {
  Accumulator acc{{name, tol}};
  Rng rng(seed);
  for (std::size_t p = 0; p < points; ++p) {
    const auto [fs, point] = make(rng);
    GradCheckResult worst;
    for (const ScalarFn& f : fs) {
      const GradCheckResult r = grad_check(f, point);
      worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
      worst.checked += r.checked;
      worst.skipped_kinks += r.skipped_kinks;
    }
    acc.add(worst);
  }
  return acc.entry;
}

std::vector<Tensor> tensors(const ParameterList& params) { return tensors_of(params); }

}  // namespace

std::vector<GradSuiteEntry> run_grad_suite(std::uint64_t seed, std::size_t points) {
  std::vector<GradSuiteEntry> out;
  std::uint64_t stream = 0;
  const auto point_case = [&](const std::string& name, double tol, const PointCase& make) {
    out.push_back(run_point_case(name, tol, make, derive_seed(seed, ++stream), points));
  };

  // Binary ops take both operands from one point so both gradients are checked.
  point_case("add", kSmooth, componentwise({10}, 5, [](const Tensor& x) { return add(slice(x, 0, 5), slice(x, 5, 5)); }));
  point_case("sub", kSmooth, componentwise({10}, 5, [](const Tensor& x) { return sub(slice(x, 0, 5), slice(x, 5, 5)); }));
  point_case("mul", kSmooth, componentwise({10}, 5, [](const Tensor& x) { return mul(slice(x, 0, 5), slice(x, 5, 5)); }));
  point_case("scale", kSmooth, componentwise({6}, 6, [](const Tensor& x) { return scale(x, -1.7); }));
  point_case("sigmoid", kSmooth, componentwise({6}, 6, [](const Tensor& x) { return sigmoid(x); }));
  point_case("tanh", kSmooth, componentwise({6}, 6, [](const Tensor& x) { return tanh(x); }));
  point_case("relu", kComposite, componentwise({6}, 6, [](const Tensor& x) { return relu(x); }));
  point_case("sum", kSmooth, componentwise({6}, 1, [](const Tensor& x) { return sum(x); }));
  point_case("mean", kSmooth, componentwise({6}, 1, [](const Tensor& x) { return mean(x); }));
  point_case("reshape", kSmooth, componentwise({6}, 6, [](const Tensor& x) { return reshape(x, {2, 3}); }));
  point_case("concat", kSmooth,
             componentwise({7}, 12, [](const Tensor& x) { return concat({slice(x, 0, 3), x, slice(x, 5, 2)}); }));
  point_case("slice", kSmooth, componentwise({8}, 3, [](const Tensor& x) { return slice(x, 2, 3); }));
  point_case("matmul", kSmooth, componentwise({2 * 3 + 3 * 4}, 8, [](const Tensor& x) {
               return matmul(reshape(slice(x, 0, 6), {2, 3}), reshape(slice(x, 6, 12), {3, 4}));
             }));
  point_case("matmul_vector", kSmooth, componentwise({3 + 3 * 2}, 2, [](const Tensor& x) {
               return matmul(slice(x, 0, 3), reshape(slice(x, 3, 6), {3, 2}));
             }));
  // x = [input 2x9 | kernels 3x2x4 | bias 3] -> output 3x6
  point_case("conv1d", kSmooth, componentwise({18 + 24 + 3}, 18, [](const Tensor& x) {
               return conv1d(reshape(slice(x, 0, 18), {2, 9}), reshape(slice(x, 18, 24), {3, 2, 4}), slice(x, 42, 3));
             }));
  point_case("max_pool1d", kComposite,
             componentwise({2, 11}, 2 * 4, [](const Tensor& x) { return max_pool1d(x, 4, 2); }));
  point_case("roi_pool1d", kComposite, componentwise({2, 7}, 2 * 5, [](const Tensor& x) { return roi_pool1d(x, 5); }));
  point_case("softmax", kSmooth, componentwise({5}, 5, [](const Tensor& x) { return softmax(x); }));
  point_case("log_softmax", kSmooth, componentwise({5}, 5, [](const Tensor& x) { return log_softmax(x); }));
  point_case("softmax_nll", kSmooth, [](Rng& rng) {
    const std::size_t target = rng.below(5);
    return std::make_pair(std::vector<ScalarFn>{[target](const Tensor& x) { return softmax_nll(x, target); }},
                          uniform_tensor({5}, rng));
  });
  point_case("sigmoid_cross_entropy", kSmooth, [](Rng& rng) {
    std::vector<double> y(6);
    for (double& v : y) v = rng.below(2) ? 1.0 : 0.0;
    return std::make_pair(std::vector<ScalarFn>{[y](const Tensor& x) { return sigmoid_cross_entropy(x, y); }},
                          uniform_tensor({6}, rng));
  });
  point_case("fan_out", kComposite, componentwise({6}, 6, [](const Tensor& x) {
               return add(mul(sigmoid(x), x), tanh(scale(x, 2.0)));
             }));
  // x = [input 4 | h 3 | c 3 | w_input 4x12 | w_hidden 3x12 | bias 12]
  point_case("lstm_cell", kComposite, componentwise({4 + 3 + 3 + 48 + 36 + 12}, 6, [](const Tensor& x) {
               const LstmParams p{reshape(slice(x, 10, 48), {4, 12}), reshape(slice(x, 58, 36), {3, 12}),
                                  slice(x, 94, 12)};
               const LstmState s = lstm_cell(slice(x, 0, 4), {slice(x, 4, 3), slice(x, 7, 3)}, p);
               return concat({s.h, s.c});
             }));

  // Full-stack checks under the default model config.
  const ModelConfig model_cfg;
  const EmbedderConfig& ecfg = model_cfg.embedder;
  const std::vector<DomainSpec> specs{{0, "a", 64}, {1, "b", 80}, {2, "c", 96}};
  const std::size_t q = 5;
  const std::size_t emb = ecfg.embedding_dim();

  point_case("embedder_input", kComposite, [&](Rng& rng) {
    const EmbedderParams params = EmbedderParams::init(ecfg, rng);
    return std::make_pair(
        std::vector<ScalarFn>{[params, &ecfg](const Tensor& x) { return sum(embed_source(x, params, ecfg)); }},
        uniform_tensor({80}, rng));
  });
  point_case("logit_input", kComposite, [&](Rng& rng) {
    const EmbedderParams params = EmbedderParams::init(ecfg, rng);
    const BiLstmEncoder enc = BiLstmEncoder::init(emb, model_cfg.hidden, rng);
    const BinaryHeads heads = BinaryHeads::init(enc.output_dim(), q, rng);
    const Tensor a = uniform_tensor({64}, rng);
    const Tensor c = uniform_tensor({96}, rng);
    return std::make_pair(std::vector<ScalarFn>{[=, &ecfg](const Tensor& x) {
                            EmbeddingSet es{{embed_source(a, params, ecfg), embed_source(x, params, ecfg),
                                             embed_source(c, params, ecfg)}};
                            return slice(head_logits(encode_sequence(es, enc), heads), 0, 1);
                          }},
                          uniform_tensor({80}, rng));
  });

  const auto random_record = [&](Rng& rng) {
    CompoundRecord rec;
    rec.id = "r";
    for (const auto& s : specs) rec.features[s.id] = uniform_values(s.dim, rng);
    std::vector<std::uint8_t> bits(q);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    rec.label = LabelVector(bits);
    return rec;
  };

  {
    Accumulator acc{{"stage1_loss", kComposite}};
    Rng rng(derive_seed(seed, ++stream));
    for (std::size_t p = 0; p < points; ++p) {
      const EmbedderParams params = EmbedderParams::init(ecfg, rng);
      const DomainClassifier clf = DomainClassifier::init(emb, specs.size(), rng);
      const CompoundRecord a = random_record(rng), b = random_record(rng);
      const auto f = [&] {
        std::vector<std::pair<Tensor, std::size_t>> batch;
        for (const CompoundRecord* rec : {&a, &b}) {
          const EmbeddingSet es = embed_record(*rec, specs, params, ecfg);
          for (std::size_t j = 0; j < es.vectors.size(); ++j) batch.emplace_back(es.vectors[j], j);
        }
        return stage1_loss(batch, clf);
      };
      ParameterList all = params.named();
      const ParameterList more = clf.named();
      all.insert(all.end(), more.begin(), more.end());
      acc.add(grad_check_params(f, tensors(all), 1e-3, kCoordsPerParam, rng.below(1u << 30)));
    }
    out.push_back(acc.entry);
  }
  {
    Accumulator acc{{"stage2_loss", kComposite}};
    Rng rng(derive_seed(seed, ++stream));
    for (std::size_t p = 0; p < points; ++p) {
      const EmbedderParams params = EmbedderParams::init(ecfg, rng);
      const BiLstmEncoder enc = BiLstmEncoder::init(emb, model_cfg.hidden, rng);
      const BinaryHeads heads = BinaryHeads::init(enc.output_dim(), q, rng);
      const CompoundRecord a = random_record(rng), b = random_record(rng);
      const auto f = [&] {
        std::vector<Tensor> terms;
        for (const CompoundRecord* rec : {&a, &b}) {
          terms.push_back(stage2_loss(predict_scores(*rec, specs, params, ecfg, enc, heads), *rec->label));
        }
        return mean(concat(terms));
      };
      ParameterList all = params.named();
      for (const ParameterList& more : {enc.named(), heads.named()}) all.insert(all.end(), more.begin(), more.end());
      acc.add(grad_check_params(f, tensors(all), 1e-3, kCoordsPerParam, rng.below(1u << 30)));
    }
    out.push_back(acc.entry);
  }
  return out;
}

std::string format_grad_suite(const std::vector<GradSuiteEntry>& entries) {
  std::string out;
  char line[160];
  for (const auto& e : entries) {
    std::snprintf(line, sizeof(line), "%-22s max_rel_error=%.3e tol=%.0e checked=%zu skipped=%zu %s\n",
                  e.name.c_str(), e.max_rel_error, e.tolerance, e.checked, e.skipped_kinks,
                  e.passed() ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

}  // namespace hetembed
