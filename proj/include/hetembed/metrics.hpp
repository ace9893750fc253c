// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

// Multi-label evaluation metrics.
//
// Labels are ranked by descending score; equal scores rank the lower label
// index first. Ranking loss counts a (true, false) pair as reversed when
// score(true) <= score(false), so ties are penalized.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "hetembed/data.hpp"

namespace hetembed {

struct EvalInstance {
  std::vector<double> scores;
  LabelVector true_set;
  /// Thresholded prediction; only Hamming loss reads it.
  LabelVector pred_set;
};

/// 1-based rank of every label.
std::vector<std::size_t> rank_labels(std::span<const double> scores);

double hamming_loss(std::span<const EvalInstance> batch);
double one_error(std::span<const EvalInstance> batch);
double coverage(std::span<const EvalInstance> batch);
double ranking_loss(std::span<const EvalInstance> batch);
double average_precision(std::span<const EvalInstance> batch);

struct MetricValue {
  std::string name;
  double value = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

/// All five metrics, each computed over the instances meeting its
/// precondition; the rest are counted as skipped. A metric with no usable
/// instance reports NaN.
struct MetricReport {
  std::vector<MetricValue> metrics;  // hamming_loss, one_error, coverage, ranking_loss, average_precision

  const MetricValue& get(const std::string& name) const;
  double value(const std::string& name) const { return get(name).value; }
};

MetricReport compute_report(std::span<const EvalInstance> batch);

/// `metric,value,instances_used,instances_skipped`.
void write_report_csv(const std::filesystem::path& path, const MetricReport& report);
std::string format_report_table(const MetricReport& report);

}  // namespace hetembed
