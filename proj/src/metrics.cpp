// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "csv.hpp"
#include "hetembed/error.hpp"

namespace hetembed {

namespace {

void check_batch(std::span<const EvalInstance> batch, const char* metric) {
  if (batch.empty()) throw DataError(std::string(metric) + ": empty batch");
  const std::size_t q = batch[0].scores.size();
  for (const auto& inst : batch) {
    if (inst.scores.size() != q || inst.true_set.size() != q) {
      throw DataError(std::string(metric) + ": inconsistent label count in batch");
    }
  }
}

void require_nonempty_truth(const EvalInstance& inst, const char* metric) {
  if (inst.true_set.count() == 0) {
    throw DataError(std::string(metric) + ": instance has no true labels");
  }
}

}  // namespace

std::vector<std::size_t> rank_labels(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> rank(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

double hamming_loss(std::span<const EvalInstance> batch) {
  check_batch(batch, "hamming_loss");
  double total = 0.0;
  for (const auto& inst : batch) {
    const std::size_t q = inst.true_set.size();
    if (inst.pred_set.size() != q) throw DataError("hamming_loss: prediction size differs from truth");
    std::size_t diff = 0;
    for (std::size_t j = 0; j < q; ++j) diff += inst.pred_set.bits[j] != inst.true_set.bits[j];
    total += static_cast<double>(diff) / static_cast<double>(q);
  }
  return total / static_cast<double>(batch.size());
}

double one_error(std::span<const EvalInstance> batch) {
  check_batch(batch, "one_error");
  std::size_t misses = 0;
  for (const auto& inst : batch) {
    require_nonempty_truth(inst, "one_error");
    const auto top = static_cast<std::size_t>(
        std::max_element(inst.scores.begin(), inst.scores.end()) - inst.scores.begin());
    misses += inst.true_set.test(top) ? 0 : 1;
  }
  return static_cast<double>(misses) / static_cast<double>(batch.size());
}

double coverage(std::span<const EvalInstance> batch) {
  check_batch(batch, "coverage");
  double total = 0.0;
  for (const auto& inst : batch) {
    require_nonempty_truth(inst, "coverage");
    const auto rank = rank_labels(inst.scores);
    std::size_t deepest = 0;
    for (std::size_t j = 0; j < rank.size(); ++j) {
      if (inst.true_set.test(j)) deepest = std::max(deepest, rank[j]);
    }
    total += static_cast<double>(deepest - 1);
  }
  return total / static_cast<double>(batch.size());
}

double ranking_loss(std::span<const EvalInstance> batch) {
  check_batch(batch, "ranking_loss");
  double total = 0.0;
  for (const auto& inst : batch) {
    const std::size_t q = inst.true_set.size();
    const std::size_t positives = inst.true_set.count();
    if (positives == 0 || positives == q) {
      throw DataError("ranking_loss: instance needs both true and false labels");
    }
    // Sort false-label scores once, then count those >= each true score.
    std::vector<double> negatives;
    for (std::size_t j = 0; j < q; ++j) {
      if (!inst.true_set.test(j)) negatives.push_back(inst.scores[j]);
    }
    std::sort(negatives.begin(), negatives.end());
    std::size_t reversed = 0;
    for (std::size_t j = 0; j < q; ++j) {
      if (!inst.true_set.test(j)) continue;
      const auto first_ge =
          std::lower_bound(negatives.begin(), negatives.end(), inst.scores[j]);
      reversed += static_cast<std::size_t>(negatives.end() - first_ge);
    }
    total += static_cast<double>(reversed) /
             static_cast<double>(positives * (q - positives));
  }
  return total / static_cast<double>(batch.size());
}

double average_precision(std::span<const EvalInstance> batch) {
  check_batch(batch, "average_precision");
  double total = 0.0;
  for (const auto& inst : batch) {
    require_nonempty_truth(inst, "average_precision");
    const auto rank = rank_labels(inst.scores);
    std::vector<std::size_t> true_ranks;
    for (std::size_t j = 0; j < rank.size(); ++j) {
      if (inst.true_set.test(j)) true_ranks.push_back(rank[j]);
    }
    std::sort(true_ranks.begin(), true_ranks.end());
    double precision = 0.0;
    for (std::size_t i = 0; i < true_ranks.size(); ++i) {
      precision += static_cast<double>(i + 1) / static_cast<double>(true_ranks[i]);
    }
    total += precision / static_cast<double>(true_ranks.size());
  }
  return total / static_cast<double>(batch.size());
}

const MetricValue& MetricReport::get(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return m;
  }
  throw Error("unknown metric " + name);
}

MetricReport compute_report(std::span<const EvalInstance> batch) {
  if (batch.empty()) throw DataError("cannot evaluate an empty dataset");
  std::vector<EvalInstance> has_truth, has_both;
  for (const auto& inst : batch) {
    const std::size_t c = inst.true_set.count();
    if (c > 0) has_truth.push_back(inst);
    if (c > 0 && c < inst.true_set.size()) has_both.push_back(inst);
  }
  const auto make = [&](const std::string& name, const std::vector<EvalInstance>& subset,
                        double (*fn)(std::span<const EvalInstance>)) {
    MetricValue v{name, std::numeric_limits<double>::quiet_NaN(), subset.size(),
                  batch.size() - subset.size()};
    if (!subset.empty()) v.value = fn(subset);
    return v;
  };
  MetricReport report;
  report.metrics.push_back({"hamming_loss", hamming_loss(batch), batch.size(), 0});
  report.metrics.push_back(make("one_error", has_truth, one_error));
  report.metrics.push_back(make("coverage", has_truth, coverage));
  report.metrics.push_back(make("ranking_loss", has_both, ranking_loss));
  report.metrics.push_back(make("average_precision", has_truth, average_precision));
  return report;
}

void write_report_csv(const std::filesystem::path& path, const MetricReport& report) {
  csv::Writer w(path, {"metric", "value", "instances_used", "instances_skipped"});
  for (const auto& m : report.metrics) {
    w.row({m.name, csv::format_number(m.value), std::to_string(m.used), std::to_string(m.skipped)});
  }
}

std::string format_report_table(const MetricReport& report) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-18s %10s %8s %8s\n", "metric", "value", "used", "skipped");
  out += line;
  for (const auto& m : report.metrics) {
    std::snprintf(line, sizeof(line), "%-18s %10.4f %8zu %8zu\n", m.name.c_str(), m.value, m.used,
                  m.skipped);
    out += line;
  }
  return out;
}

}  // namespace hetembed
