// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "hetembed/tensor.hpp"

namespace hetembed {

struct OptimizerConfig {
  std::string kind = "adam";  // "adam" | "sgd"
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

/// Bias-corrected Adam, or plain SGD, over a fixed set of parameters.
/// A parameter with no accumulated gradient is treated as having gradient 0.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::vector<Tensor> params);

  void step();
  void zero_grad();
  std::size_t steps() const { return steps_; }

 private:
  OptimizerConfig cfg_;
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

}  // namespace hetembed
