// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hetembed {

/// First-level ATC classes, the default label set.
inline constexpr std::array<const char*, 14> kAtcClasses = {"A", "B", "C", "D", "G", "H", "J",
                                                            "L", "M", "N", "P", "R", "S", "V"};

/// Default label column names: the ATC letters when q == 14, L0..L{q-1} otherwise.
std::vector<std::string> default_label_names(std::size_t q);

/// One feature source. `id` is the source's type index in 0..k-1.
struct DomainSpec {
  int id = 0;
  std::string name;
  std::size_t dim = 1;

  bool operator==(const DomainSpec&) const = default;
};

/// Throws ConfigError unless ids are exactly 0..k-1 (in order) and dims >= 1.
void validate_specs(const std::vector<DomainSpec>& specs);

struct LabelVector {
  std::vector<std::uint8_t> bits;

  LabelVector() = default;
  explicit LabelVector(std::vector<std::uint8_t> b) : bits(std::move(b)) {}
  static LabelVector from_indices(std::size_t q, const std::vector<std::size_t>& on);

  std::size_t size() const { return bits.size(); }
  std::size_t count() const;
  bool test(std::size_t j) const { return bits[j] != 0; }
  std::vector<double> as_doubles() const;

  bool operator==(const LabelVector&) const = default;
};

struct CompoundRecord {
  /// Sample id. Replicated samples use "<compound>:<index>".
  std::string id;
  /// Raw vectors keyed by DomainSpec::id.
  std::map<int, std::vector<double>> features;
  std::optional<LabelVector> label;

  /// The compound an id belongs to: the text before the last ':' if any.
  std::string compound_id() const;
};

struct Dataset {
  std::vector<DomainSpec> specs;
  std::vector<CompoundRecord> records;
  std::vector<std::string> label_names;

  std::size_t m() const { return records.size(); }
  std::size_t q() const { return label_names.size(); }
  std::size_t k() const { return specs.size(); }
};

/// Rows of one feature file keyed by sample id.
using DomainTable = std::map<std::string, std::vector<double>>;

/// Reads `id,f0,f1,...` with exactly spec.dim feature columns.
DomainTable load_domain_csv(const std::filesystem::path& path, const DomainSpec& spec);

struct LabelTable {
  std::vector<std::string> names;
  std::map<std::string, LabelVector> rows;
};

/// Reads `id,<class>,...` with 0/1 cells.
LabelTable load_labels_csv(const std::filesystem::path& path);

struct AssembleOptions {
  /// Domain whose rows are per-sample ("compound:index"); the other domains
  /// hold one row per compound and are copied into every sample.
  std::optional<int> replicate_on;
  /// Fill a missing domain with that domain's mean vector instead of failing.
  bool impute_missing = false;
};

/// Joins per-domain tables (indexed like `specs`) into records. Labels are
/// looked up by compound id; records without a label row keep none.
Dataset assemble_dataset(const std::vector<DomainTable>& per_domain,
                         const std::vector<DomainSpec>& specs, const LabelTable& labels,
                         const AssembleOptions& options = {});

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;

  /// FNV-1a over the ordered ids of the three parts.
  std::uint64_t checksum() const;
};

/// Seeded holdout split. With `group_by_compound`, every sample of a
/// compound lands in the same part.
DatasetSplit split(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed,
                   bool group_by_compound);

/// Per-feature z-scoring, fitted on one dataset and applied to others.
struct Standardizer {
  /// Indexed by domain id.
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> stds;

  static Standardizer fit(const Dataset& ds);
  /// Identity transform for the given specs.
  static Standardizer identity(const std::vector<DomainSpec>& specs);
  Dataset apply(const Dataset& ds) const;
  std::vector<double> apply(int domain, const std::vector<double>& raw) const;

  bool operator==(const Standardizer&) const = default;
};

struct SynthParams {
  std::size_t k = 3;
  std::vector<std::size_t> dims = {64, 96, 128};
  std::size_t q = 14;
  std::size_t m = 600;
  /// Weight of the shared cross-domain latent in every domain's input.
  double dependency = 0.8;
  std::uint64_t seed = 0;
  /// Scale of each domain's constant signature vector.
  double signature_amplitude = 1.0;
  double noise = 0.5;
  std::size_t latent_dim = 4;
  std::size_t hidden_units = 16;
  /// Pre-activation gain of the hidden tanh layer.
  double gain = 4.0;
  /// Replace the tanh map with its linear part.
  bool linear = false;
};

/// Synthetic dataset whose labels are the common cause of every domain:
/// each record draws 1-3 active labels z and a shared latent u, and domain j
/// is W2_j tanh(gain * W1_j [z; dependency*u] + c_j) + amplitude*s_j + noise.
///
/// For m >= 200 every class must occur at least once; otherwise the draw is
/// repeated with seed+1, seed+2, ...
Dataset synth_generate(const SynthParams& params);

void write_domain_csv(const std::filesystem::path& path, const Dataset& ds, int domain);
void write_labels_csv(const std::filesystem::path& path, const Dataset& ds);

}  // namespace hetembed
