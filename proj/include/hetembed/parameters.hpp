// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "hetembed/rng.hpp"
#include "hetembed/tensor.hpp"

namespace hetembed {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<NamedTensor>;

/// Trainable tensor with entries uniform in +/- sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Extracts the tensors of a parameter list.
std::vector<Tensor> tensors_of(const ParameterList& params);

/// Deep copy of parameter values, for snapshot/restore.
std::vector<std::vector<double>> snapshot(const ParameterList& params);
void restore(const ParameterList& params, const std::vector<std::vector<double>>& values);

}  // namespace hetembed
