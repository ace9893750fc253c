// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hetembed {

struct GradSuiteEntry {
  std::string name;
  double tolerance = 0.0;
  /// Worst relative error over all points.
  double max_rel_error = 0.0;
  std::size_t points = 0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;

  bool passed() const { return checked > 0 && max_rel_error < tolerance; }
};

/// Finite-difference checks of every differentiable primitive, of fan-out
/// accumulation, of the LSTM cell, of the embedder and of the Stage-I and
/// Stage-II losses under the default model config. Each entry is evaluated
/// at `points` random points with inputs uniform in [-1, 1].
std::vector<GradSuiteEntry> run_grad_suite(std::uint64_t seed, std::size_t points = 10);

/// One line per entry: name, max relative error, tolerance, PASS/FAIL.
std::string format_grad_suite(const std::vector<GradSuiteEntry>& entries);

}  // namespace hetembed
