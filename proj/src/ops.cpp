// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>

#include "hetembed/error.hpp"
#include "hetembed/tensor.hpp"

namespace hetembed {

namespace {

using NodePtr = std::shared_ptr<detail::Node>;

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

// grad(input) += factor * g
void accumulate(detail::Node& input, std::span<const double> g, double factor = 1.0) {
  if (!input.requires_grad) return;
  input.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) input.grad[i] += factor * g[i];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + shape_to_string(t.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void mix_choice(std::size_t v) {
  if (auto* trace = detail::active_kink_trace()) trace->mix(static_cast<std::uint64_t>(v) + 1);
}

// Argmax with first-occurrence tie rule.
std::size_t first_argmax(const double* row, std::size_t begin, std::size_t end) {
  std::size_t best = begin;
  for (std::size_t t = begin + 1; t < end; ++t) {
    if (row[t] > row[best]) best = t;
  }
  return best;
}

// Gathers one value per output cell from `x` and routes gradients back to
// the recorded source positions.
Tensor gather_result(const Tensor& x, Shape out_shape, std::vector<std::size_t> source) {
  std::vector<double> out(source.size());
  const auto xv = x.data();
  for (std::size_t i = 0; i < source.size(); ++i) out[i] = xv[source[i]];
  const bool rec = should_record({&x});
  Tensor y = make(std::move(out_shape), std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    active_tape()->record(y.node(), [xn, src = std::move(source)](const detail::Node& o) {
      xn->ensure_grad();
      for (std::size_t i = 0; i < src.size(); ++i) xn->grad[src[i]] += o.grad[i];
    });
  }
  return y;
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  const bool rec = should_record({&x});
  Tensor y = make(x.shape(), std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    active_tape()->record(y.node(), [xn, deriv](const detail::Node& o) {
      xn->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        xn->grad[i] += o.grad[i] * deriv(xn->value[i], o.value[i]);
      }
    });
  }
  return y;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const bool rec = should_record({&a, &b});
  Tensor y = make(a.shape(), std::move(out), rec);
  if (rec) {
    NodePtr an = a.node(), bn = b.node();
    active_tape()->record(y.node(), [an, bn](const detail::Node& o) {
      accumulate(*an, o.grad);
      accumulate(*bn, o.grad);
    });
  }
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const bool rec = should_record({&a, &b});
  Tensor y = make(a.shape(), std::move(out), rec);
  if (rec) {
    NodePtr an = a.node(), bn = b.node();
    active_tape()->record(y.node(), [an, bn](const detail::Node& o) {
      accumulate(*an, o.grad);
      accumulate(*bn, o.grad, -1.0);
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const bool rec = should_record({&a, &b});
  Tensor y = make(a.shape(), std::move(out), rec);
  if (rec) {
    NodePtr an = a.node(), bn = b.node();
    active_tape()->record(y.node(), [an, bn](const detail::Node& o) {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * bn->value[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i] * an->value[i];
      }
    });
  }
  return y;
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  if (auto* trace = detail::active_kink_trace()) {
    const auto xv = x.data();
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      word = (word << 1) | (xv[i] > 0.0 ? 1u : 0u);
      if (i % 63 == 62) {
        trace->mix(word);
        word = 0;
      }
    }
    trace->mix(word);
  }
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  const bool rec = should_record({&x});
  Tensor y = make({1}, {total}, rec);
  if (rec) {
    NodePtr xn = x.node();
    active_tape()->record(y.node(), [xn](const detail::Node& o) {
      xn->ensure_grad();
      for (double& g : xn->grad) g += o.grad[0];
    });
  }
  return y;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor reshape(const Tensor& x, Shape shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (n != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_to_string(x.shape()) + " as " +
                     shape_to_string(shape));
  }
  const bool rec = should_record({&x});
  Tensor y = make(std::move(shape), x.to_vector(), rec);
  if (rec) {
    NodePtr xn = x.node();
    active_tape()->record(y.node(), [xn](const detail::Node& o) { accumulate(*xn, o.grad); });
  }
  return y;
}

Tensor flatten(const Tensor& x) { return reshape(x, {x.size()}); }

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::vector<double> out;
  bool rec = false;
  for (const Tensor& p : parts) {
    require_rank(p, 1, "concat", "every part");
    out.insert(out.end(), p.data().begin(), p.data().end());
    rec = rec || should_record({&p});
  }
  const std::size_t n = out.size();
  Tensor y = make({n}, std::move(out), rec);
  if (rec) {
    std::vector<NodePtr> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    active_tape()->record(y.node(), [nodes](const detail::Node& o) {
      std::size_t offset = 0;
      for (const NodePtr& n : nodes) {
        const std::size_t len = n->value.size();
        accumulate(*n, std::span<const double>(o.grad).subspan(offset, len));
        offset += len;
      }
    });
  }
  return y;
}

Tensor slice(const Tensor& x, std::size_t start, std::size_t length) {
  require_rank(x, 1, "slice", "input");
  if (length == 0 || start + length > x.size()) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") outside " + shape_to_string(x.shape()));
  }
  const auto xv = x.data();
  std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(start),
                          xv.begin() + static_cast<std::ptrdiff_t>(start + length));
  const bool rec = should_record({&x});
  Tensor y = make({length}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    active_tape()->record(y.node(), [xn, start](const detail::Node& o) {
      xn->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) xn->grad[start + i] += o.grad[i];
    });
  }
  return y;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const bool row = a.rank() == 1;
  if ((a.rank() != 1 && a.rank() != 2) || b.rank() != 2) {
    throw ShapeError("matmul: unsupported ranks " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  const std::size_t m = row ? 1 : a.dim(0);
  const std::size_t k = row ? a.dim(0) : a.dim(1);
  if (k != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  const std::size_t n = b.dim(1);
  const double* av = a.data().data();
  const double* bv = b.data().data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  const bool rec = should_record({&a, &b});
  Shape out_shape = row ? Shape{n} : Shape{m, n};
  Tensor y = make(std::move(out_shape), std::move(out), rec);
  if (rec) {
    NodePtr an = a.node(), bn = b.node();
    active_tape()->record(y.node(), [an, bn, m, k, n](const detail::Node& o) {
      const double* g = o.grad.data();
      if (an->requires_grad) {
        // dA = dC * B^T
        an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double* brow = bn->value.data() + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * brow[j];
            an->grad[i * k + p] += acc;
          }
        }
      }
      if (bn->requires_grad) {
        // dB = A^T * dC
        bn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = an->value[i * k + p];
            if (aip == 0.0) continue;
            double* grow = bn->grad.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) grow[j] += aip * g[i * n + j];
          }
        }
      }
    });
  }
  return y;
}

Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  require_rank(x, 2, "conv1d", "input");
  require_rank(kernels, 3, "conv1d", "kernels");
  require_rank(bias, 1, "conv1d", "bias");
  const std::size_t c_in = x.dim(0);
  const std::size_t len = x.dim(1);
  const std::size_t c_out = kernels.dim(0);
  const std::size_t width = kernels.dim(2);
  if (kernels.dim(1) != c_in || bias.dim(0) != c_out) {
    throw ShapeError("conv1d: input " + shape_to_string(x.shape()) + ", kernels " +
                     shape_to_string(kernels.shape()) + ", bias " + shape_to_string(bias.shape()) +
                     " are inconsistent");
  }
  if (len < width) {
    throw ShapeError("conv1d: input shorter than kernel (" + std::to_string(len) + " < " +
                     std::to_string(width) + ")");
  }
  const std::size_t out_len = len - width + 1;
  const double* xv = x.data().data();
  const double* kv = kernels.data().data();
  const double* bv = bias.data().data();
  std::vector<double> out(c_out * out_len);
  for (std::size_t o = 0; o < c_out; ++o) {
    double* orow = out.data() + o * out_len;
    std::fill(orow, orow + out_len, bv[o]);
    for (std::size_t c = 0; c < c_in; ++c) {
      const double* xrow = xv + c * len;
      const double* krow = kv + (o * c_in + c) * width;
      for (std::size_t w = 0; w < width; ++w) {
        const double kw = krow[w];
        const double* xs = xrow + w;
        for (std::size_t t = 0; t < out_len; ++t) orow[t] += kw * xs[t];
      }
    }
  }
  const bool rec = should_record({&x, &kernels, &bias});
  Tensor y = make({c_out, out_len}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), kn = kernels.node(), bn = bias.node();
    active_tape()->record(y.node(), [=](const detail::Node& o) {
      const double* g = o.grad.data();
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t oc = 0; oc < c_out; ++oc) {
          double acc = 0.0;
          for (std::size_t t = 0; t < out_len; ++t) acc += g[oc * out_len + t];
          bn->grad[oc] += acc;
        }
      }
      if (kn->requires_grad) kn->ensure_grad();
      if (xn->requires_grad) xn->ensure_grad();
      for (std::size_t oc = 0; oc < c_out; ++oc) {
        const double* grow = g + oc * out_len;
        for (std::size_t c = 0; c < c_in; ++c) {
          const std::size_t kbase = (oc * c_in + c) * width;
          for (std::size_t w = 0; w < width; ++w) {
            if (kn->requires_grad) {
              const double* xs = xn->value.data() + c * len + w;
              double acc = 0.0;
              for (std::size_t t = 0; t < out_len; ++t) acc += grow[t] * xs[t];
              kn->grad[kbase + w] += acc;
            }
            if (xn->requires_grad) {
              const double kw = kn->value[kbase + w];
              double* dx = xn->grad.data() + c * len + w;
              for (std::size_t t = 0; t < out_len; ++t) dx[t] += kw * grow[t];
            }
          }
        }
      }
    });
  }
  return y;
}

Tensor max_pool1d(const Tensor& x, std::size_t width, std::size_t stride) {
  require_rank(x, 2, "max_pool1d", "input");
  if (width == 0 || stride == 0) throw ShapeError("max_pool1d: width and stride must be >= 1");
  const std::size_t channels = x.dim(0);
  const std::size_t len = x.dim(1);
  if (len < width) {
    throw ShapeError("max_pool1d: input length " + std::to_string(len) + " below window " +
                     std::to_string(width));
  }
  const std::size_t out_len = (len - width) / stride + 1;
  std::vector<std::size_t> source(channels * out_len);
  const double* xv = x.data().data();
  for (std::size_t c = 0; c < channels; ++c) {
    const double* row = xv + c * len;
    for (std::size_t t = 0; t < out_len; ++t) {
      const std::size_t best = first_argmax(row, t * stride, t * stride + width);
      mix_choice(best);
      source[c * out_len + t] = c * len + best;
    }
  }
  return gather_result(x, {channels, out_len}, std::move(source));
}

Tensor roi_pool1d(const Tensor& x, std::size_t bins) {
  if (!x.defined() || x.size() == 0) throw ShapeError("roi_pool1d: empty input");
  require_rank(x, 2, "roi_pool1d", "input");
  if (bins == 0) throw ShapeError("roi_pool1d: bins must be >= 1");
  const std::size_t channels = x.dim(0);
  const std::size_t len = x.dim(1);
  std::vector<std::size_t> source(channels * bins);
  const double* xv = x.data().data();
  for (std::size_t b = 0; b < bins; ++b) {
    std::size_t start = b * len / bins;
    std::size_t end = (b + 1) * len / bins;
    if (start >= end) {
      start = std::min(start, len - 1);
      end = start + 1;
    }
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t best = first_argmax(xv + c * len, start, end);
      mix_choice(best);
      source[c * bins + b] = c * len + best;
    }
  }
  return gather_result(x, {channels, bins}, std::move(source));
}

Tensor softmax(const Tensor& z) {
  const auto zv = z.data();
  const double top = *std::max_element(zv.begin(), zv.end());
  std::vector<double> out(zv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    out[i] = std::exp(zv[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  const bool rec = should_record({&z});
  Tensor y = make(z.shape(), std::move(out), rec);
  if (rec) {
    NodePtr zn = z.node();
    active_tape()->record(y.node(), [zn](const detail::Node& o) {
      double dot = 0.0;
      for (std::size_t i = 0; i < o.grad.size(); ++i) dot += o.grad[i] * o.value[i];
      zn->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        zn->grad[i] += o.value[i] * (o.grad[i] - dot);
      }
    });
  }
  return y;
}

namespace {
std::vector<double> log_softmax_values(std::span<const double> zv) {
  const double top = *std::max_element(zv.begin(), zv.end());
  double total = 0.0;
  for (double v : zv) total += std::exp(v - top);
  const double log_norm = top + std::log(total);
  std::vector<double> out(zv.size());
  for (std::size_t i = 0; i < zv.size(); ++i) out[i] = zv[i] - log_norm;
  return out;
}
}  // namespace

Tensor log_softmax(const Tensor& z) {
  const bool rec = should_record({&z});
  Tensor y = make(z.shape(), log_softmax_values(z.data()), rec);
  if (rec) {
    NodePtr zn = z.node();
    active_tape()->record(y.node(), [zn](const detail::Node& o) {
      double gsum = 0.0;
      for (double g : o.grad) gsum += g;
      zn->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        zn->grad[i] += o.grad[i] - std::exp(o.value[i]) * gsum;
      }
    });
  }
  return y;
}

Tensor softmax_nll(const Tensor& logits, std::size_t target) {
  if (target >= logits.size()) {
    throw ShapeError("softmax_nll: target " + std::to_string(target) + " outside " +
                     std::to_string(logits.size()) + " classes");
  }
  std::vector<double> log_p = log_softmax_values(logits.data());
  const bool rec = should_record({&logits});
  Tensor y = make({1}, {-log_p[target]}, rec);
  if (rec) {
    NodePtr zn = logits.node();
    active_tape()->record(y.node(), [zn, target, lp = std::move(log_p)](const detail::Node& o) {
      zn->ensure_grad();
      for (std::size_t i = 0; i < lp.size(); ++i) {
        zn->grad[i] += o.grad[0] * (std::exp(lp[i]) - (i == target ? 1.0 : 0.0));
      }
    });
  }
  return y;
}

Tensor sigmoid_cross_entropy(const Tensor& logits, std::span<const double> targets) {
  if (targets.size() != logits.size()) {
    throw ShapeError("sigmoid_cross_entropy: " + std::to_string(logits.size()) + " logits vs " +
                     std::to_string(targets.size()) + " targets");
  }
  const auto xv = logits.data();
  double total = 0.0;
  for (std::size_t j = 0; j < xv.size(); ++j) {
    const double x = xv[j];
    total += std::max(x, 0.0) - x * targets[j] + std::log1p(std::exp(-std::abs(x)));
  }
  const bool rec = should_record({&logits});
  Tensor y = make({1}, {total}, rec);
  if (rec) {
    NodePtr xn = logits.node();
    std::vector<double> t(targets.begin(), targets.end());
    active_tape()->record(y.node(), [xn, t = std::move(t)](const detail::Node& o) {
      xn->ensure_grad();
      for (std::size_t j = 0; j < t.size(); ++j) {
        xn->grad[j] += o.grad[0] * (stable_sigmoid(xn->value[j]) - t[j]);
      }
    });
  }
  return y;
}

LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmParams& params) {
  require_rank(params.w_input, 2, "lstm_cell", "w_input");
  require_rank(params.w_hidden, 2, "lstm_cell", "w_hidden");
  const std::size_t hidden = params.hidden_dim();
  const std::size_t gates = 4 * hidden;
  if (params.w_hidden.dim(1) != gates || params.w_input.dim(1) != gates ||
      params.bias.size() != gates) {
    throw ShapeError("lstm_cell: parameter shapes " + shape_to_string(params.w_input.shape()) +
                     ", " + shape_to_string(params.w_hidden.shape()) + ", " +
                     shape_to_string(params.bias.shape()) + " are inconsistent");
  }
  if (x.rank() != 1 || x.size() != params.input_dim()) {
    throw ShapeError("lstm_cell: input " + shape_to_string(x.shape()) + " but cell expects " +
                     std::to_string(params.input_dim()));
  }
  if (prev.h.size() != hidden || prev.c.size() != hidden) {
    throw ShapeError("lstm_cell: state sizes " + std::to_string(prev.h.size()) + "/" +
                     std::to_string(prev.c.size()) + " but hidden dim is " +
                     std::to_string(hidden));
  }
  const Tensor pre =
      add(add(matmul(x, params.w_input), matmul(prev.h, params.w_hidden)), params.bias);
  const Tensor in_gate = sigmoid(slice(pre, 0, hidden));
  const Tensor forget_gate = sigmoid(slice(pre, hidden, hidden));
  const Tensor candidate = tanh(slice(pre, 2 * hidden, hidden));
  const Tensor out_gate = sigmoid(slice(pre, 3 * hidden, hidden));
  Tensor c = add(mul(forget_gate, prev.c), mul(in_gate, candidate));
  Tensor h = mul(out_gate, tanh(c));
  return {std::move(h), std::move(c)};
}

}  // namespace hetembed
