// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hetembed {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
  }
};
}  // namespace detail

/// Dense row-major array of doubles with an optional gradient slot.
///
/// Copies share the underlying storage. Values produced by operations are
/// never modified afterwards; only parameters are updated in place, through
/// mutable_data(), by the optimizer.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Accumulated gradient; empty span when nothing has flowed back yet.
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  /// Deep copy that does not take part in differentiation.
  Tensor detach() const;
  /// Deep copy with its own storage, keeping requires_grad.
  Tensor clone() const;

  std::vector<double> to_vector() const { return node_->value; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node) { return Tensor(std::move(node)); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

/// Ordered record of differentiable operations. Single-threaded.
///
/// Operations record onto the tape made active by a TapeScope on the calling
/// thread, and only when at least one input requires a gradient. With no
/// active tape operations run as plain forward computations.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  void record(std::shared_ptr<detail::Node> output, std::function<void(const detail::Node&)> rule);

 private:
  struct Entry {
    std::shared_ptr<detail::Node> output;
    std::function<void(const detail::Node&)> rule;
  };
  std::vector<Entry> entries_;

  friend void backward(Tape& tape, const Tensor& loss);
};

/// Makes `tape` the active tape of the current thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording on the current thread for the scope's lifetime.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Reverse sweep from a scalar loss. Gradients accumulate into every
/// requires_grad tensor reachable from `loss`.
void backward(Tape& tape, const Tensor& loss);

// Elementwise (identical shapes).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);

// Reductions to a scalar.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Structural.
Tensor reshape(const Tensor& x, Shape shape);
Tensor flatten(const Tensor& x);
/// Concatenates 1-D tensors.
Tensor concat(const std::vector<Tensor>& parts);
/// Elements [start, start+length) of a 1-D tensor.
Tensor slice(const Tensor& x, std::size_t start, std::size_t length);

/// [m x k] * [k x n] -> [m x n]. A 1-D left operand is a row vector and
/// yields a 1-D result.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Valid cross-correlation: x [C_in x L], kernels [C_out x C_in x W],
/// bias [C_out] -> [C_out x (L - W + 1)].
Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias);
/// Windowed max over the last axis of [C x L]. Gradient goes to the first
/// maximum in each window.
Tensor max_pool1d(const Tensor& x, std::size_t width, std::size_t stride);
/// Fixed-size max pooling: [C x L] -> [C x bins] with bin b covering
/// [floor(b*L/bins), floor((b+1)*L/bins)), or the single index
/// min(start, L-1) when that interval is empty.
Tensor roi_pool1d(const Tensor& x, std::size_t bins);

Tensor softmax(const Tensor& z);
Tensor log_softmax(const Tensor& z);

/// Per-label sigmoid cross-entropy on logits, summed over labels:
/// sum_j max(x_j, 0) - x_j*y_j + log(1 + exp(-|x_j|)).
Tensor sigmoid_cross_entropy(const Tensor& logits, std::span<const double> targets);

/// -log p(target) under softmax(logits).
Tensor softmax_nll(const Tensor& logits, std::size_t target);

struct LstmParams {
  Tensor w_input;   // [d x 4H], gate blocks ordered i, f, g, o
  Tensor w_hidden;  // [H x 4H]
  Tensor bias;      // [4H]

  std::size_t input_dim() const { return w_input.dim(0); }
  std::size_t hidden_dim() const { return w_hidden.dim(0); }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

/// One LSTM step:
///   i, f, o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c).
LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmParams& params);

/// Result of a finite-difference comparison.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +/- step crossed a relu or max-selection boundary
  /// and were therefore excluded.
  std::size_t skipped_kinks = 0;
};

/// Compares the reverse-mode gradient of `f` at `point` with central
/// differences. Relative error per coordinate is
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                           double step = 1e-3);

/// Same comparison for a closure over parameter tensors, perturbing the
/// parameters in place (restored afterwards). When `max_coords_per_param`
/// is nonzero, that many coordinates per tensor are sampled with `seed`.
GradCheckResult grad_check_params(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                  double step = 1e-3, std::size_t max_coords_per_param = 0,
                                  std::uint64_t seed = 0);

namespace detail {
/// Piecewise ops fold their discrete choices (relu masks, max positions)
/// into this hash while a KinkTrace is live on the thread.
class KinkTrace {
 public:
  KinkTrace();
  ~KinkTrace();
  KinkTrace(const KinkTrace&) = delete;
  KinkTrace& operator=(const KinkTrace&) = delete;
  std::uint64_t signature() const { return hash_; }
  void mix(std::uint64_t v) { hash_ = (hash_ ^ v) * 0x100000001b3ULL; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  KinkTrace* previous_;
};
KinkTrace* active_kink_trace();
}  // namespace detail

}  // namespace hetembed
