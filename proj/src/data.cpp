// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "hetembed/error.hpp"
#include "hetembed/rng.hpp"

namespace hetembed {

std::vector<std::string> default_label_names(std::size_t q) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < q; ++j) {
    names.push_back(q == kAtcClasses.size() ? std::string(kAtcClasses[j]) : "L" + std::to_string(j));
  }
  return names;
}

void validate_specs(const std::vector<DomainSpec>& specs) {
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].id != static_cast<int>(i)) {
      throw ConfigError("domain ids must be 0..k-1 in order; position " + std::to_string(i) +
                        " has id " + std::to_string(specs[i].id));
    }
    if (specs[i].dim == 0) throw ConfigError("domain '" + specs[i].name + "' has dim 0");
  }
}

LabelVector LabelVector::from_indices(std::size_t q, const std::vector<std::size_t>& on) {
  std::vector<std::uint8_t> bits(q, 0);
  for (std::size_t j : on) bits.at(j) = 1;
  return LabelVector(std::move(bits));
}

std::size_t LabelVector::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<double> LabelVector::as_doubles() const {
  return std::vector<double>(bits.begin(), bits.end());
}

std::string CompoundRecord::compound_id() const {
  const auto colon = id.rfind(':');
  return colon == std::string::npos ? id : id.substr(0, colon);
}

DomainTable load_domain_csv(const std::filesystem::path& path, const DomainSpec& spec) {
  const csv::Table table = csv::read(path);
  const std::size_t declared = table.header.size() - 1;
  if (declared != spec.dim) {
    throw DataError(path.string() + ": header declares " + std::to_string(declared) +
                    " feature columns but domain '" + spec.name + "' has dim " +
                    std::to_string(spec.dim));
  }
  DomainTable out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::vector<double> values(spec.dim);
    for (std::size_t c = 1; c < row.size(); ++c) {
      values[c - 1] = csv::parse_number(row[c], path, r + 2, c + 1);
    }
    if (!out.emplace(row[0], std::move(values)).second) {
      throw DataError(path.string() + ": duplicate id '" + row[0] + "' at row " +
                      std::to_string(r + 2));
    }
  }
  return out;
}

LabelTable load_labels_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  LabelTable out;
  out.names.assign(table.header.begin() + 1, table.header.end());
  if (out.names.empty()) throw DataError(path.string() + ": no label columns");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::vector<std::uint8_t> bits(out.names.size());
    for (std::size_t c = 1; c < row.size(); ++c) {
      const std::string& cell = row[c];
      if (cell != "0" && cell != "1") {
        throw DataError(path.string() + ": row " + std::to_string(r + 2) + " column " +
                        std::to_string(c + 1) + ": label cell '" + cell + "' is not 0 or 1");
      }
      bits[c - 1] = cell == "1" ? 1 : 0;
    }
    if (!out.rows.emplace(row[0], LabelVector(std::move(bits))).second) {
      throw DataError(path.string() + ": duplicate id '" + row[0] + "'");
    }
  }
  return out;
}

namespace {

std::string compound_of(const std::string& sample_id) {
  const auto colon = sample_id.rfind(':');
  return colon == std::string::npos ? sample_id : sample_id.substr(0, colon);
}

std::vector<double> mean_vector(const DomainTable& table, std::size_t dim) {
  std::vector<double> mean(dim, 0.0);
  if (table.empty()) return mean;
  for (const auto& [id, v] : table) {
    for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
  }
  for (double& x : mean) x /= static_cast<double>(table.size());
  return mean;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

}  // namespace

Dataset assemble_dataset(const std::vector<DomainTable>& per_domain,
                         const std::vector<DomainSpec>& specs, const LabelTable& labels,
                         const AssembleOptions& options) {
  validate_specs(specs);
  if (per_domain.size() != specs.size()) {
    throw DataError("assemble_dataset: " + std::to_string(per_domain.size()) + " tables for " +
                    std::to_string(specs.size()) + " domains");
  }
  if (options.replicate_on && (*options.replicate_on < 0 ||
                               *options.replicate_on >= static_cast<int>(specs.size()))) {
    throw ConfigError("replicate_on names unknown domain " + std::to_string(*options.replicate_on));
  }

  // Key under which each domain is looked up for a given sample.
  const auto key_in = [&](std::size_t domain, const std::string& sample) {
    if (options.replicate_on && static_cast<int>(domain) != *options.replicate_on) {
      return compound_of(sample);
    }
    return sample;
  };

  std::vector<std::string> samples;
  if (options.replicate_on) {
    for (const auto& [id, v] : per_domain[static_cast<std::size_t>(*options.replicate_on)]) {
      samples.push_back(id);
    }
  } else {
    std::set<std::string> all;
    for (const auto& table : per_domain) {
      for (const auto& [id, v] : table) all.insert(id);
    }
    samples.assign(all.begin(), all.end());
  }

  std::vector<std::string> complete;
  std::vector<std::string> incomplete;
  for (const std::string& s : samples) {
    bool ok = true;
    for (std::size_t d = 0; d < specs.size(); ++d) {
      if (!per_domain[d].contains(key_in(d, s))) ok = false;
    }
    (ok ? complete : incomplete).push_back(s);
  }

  Dataset ds;
  ds.specs = specs;
  ds.label_names = labels.names;
  // Sources with no id in common describe different entities: nothing joins.
  if (complete.empty() && !options.impute_missing) return ds;
  if (!incomplete.empty() && !options.impute_missing) {
    std::vector<std::string> report;
    for (const std::string& s : incomplete) {
      std::string missing;
      for (std::size_t d = 0; d < specs.size(); ++d) {
        if (!per_domain[d].contains(key_in(d, s))) {
          missing += missing.empty() ? specs[d].name : "/" + specs[d].name;
        }
      }
      report.push_back(s + " (" + missing + ")");
    }
    throw DataError("missing domain for ids: " + join_ids(report));
  }

  std::vector<std::vector<double>> means;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    means.push_back(mean_vector(per_domain[d], specs[d].dim));
  }
  for (const std::string& s : samples) {
    CompoundRecord rec;
    rec.id = s;
    for (std::size_t d = 0; d < specs.size(); ++d) {
      const auto it = per_domain[d].find(key_in(d, s));
      rec.features[specs[d].id] = it != per_domain[d].end() ? it->second : means[d];
    }
    if (const auto it = labels.rows.find(compound_of(s)); it != labels.rows.end()) {
      rec.label = it->second;
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

std::uint64_t DatasetSplit::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
    h = (h ^ 0xff) * 0x100000001b3ULL;
  };
  for (const Dataset* part : {&train, &val, &test}) {
    for (const auto& r : part->records) mix(r.id);
    mix("|");
  }
  return h;
}

DatasetSplit split(const Dataset& ds, const SplitFractions& f, std::uint64_t seed,
                   bool group_by_compound) {
  if (!(f.train > 0 && f.val > 0 && f.test > 0) ||
      std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be positive and sum to 1");
  }
  if (ds.m() < 3) throw DataError("split needs at least 3 records, got " + std::to_string(ds.m()));

  // Groups of record indices, in first-appearance order.
  std::vector<std::vector<std::size_t>> groups;
  if (group_by_compound) {
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < ds.m(); ++i) {
      const auto [it, fresh] = slot.emplace(ds.records[i].compound_id(), groups.size());
      if (fresh) groups.emplace_back();
      groups[it->second].push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < ds.m(); ++i) groups.push_back({i});
  }
  Rng rng(seed);
  rng.shuffle(groups);

  const auto m = static_cast<double>(ds.m());
  const auto n_train = static_cast<std::size_t>(std::floor(m * f.train + 0.5));
  const auto n_val = static_cast<std::size_t>(std::floor(m * f.val + 0.5));

  DatasetSplit out;
  for (Dataset* part : {&out.train, &out.val, &out.test}) {
    part->specs = ds.specs;
    part->label_names = ds.label_names;
  }
  for (const auto& g : groups) {
    Dataset* target = &out.test;
    if (out.train.m() < n_train) {
      target = &out.train;
    } else if (out.val.m() < n_val) {
      target = &out.val;
    }
    for (std::size_t i : g) target->records.push_back(ds.records[i]);
  }
  return out;
}

Standardizer Standardizer::fit(const Dataset& ds) {
  Standardizer s;
  for (const DomainSpec& spec : ds.specs) {
    std::vector<double> mean(spec.dim, 0.0), var(spec.dim, 0.0);
    for (const auto& r : ds.records) {
      const auto& v = r.features.at(spec.id);
      for (std::size_t i = 0; i < spec.dim; ++i) mean[i] += v[i];
    }
    const double n = std::max<double>(1.0, static_cast<double>(ds.m()));
    for (double& x : mean) x /= n;
    for (const auto& r : ds.records) {
      const auto& v = r.features.at(spec.id);
      for (std::size_t i = 0; i < spec.dim; ++i) var[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
    }
    std::vector<double> sd(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) {
      const double s2 = std::sqrt(var[i] / n);
      sd[i] = s2 > 1e-12 ? s2 : 1.0;
    }
    s.means.push_back(std::move(mean));
    s.stds.push_back(std::move(sd));
  }
  return s;
}

Standardizer Standardizer::identity(const std::vector<DomainSpec>& specs) {
  Standardizer s;
  for (const DomainSpec& spec : specs) {
    s.means.emplace_back(spec.dim, 0.0);
    s.stds.emplace_back(spec.dim, 1.0);
  }
  return s;
}

std::vector<double> Standardizer::apply(int domain, const std::vector<double>& raw) const {
  const auto d = static_cast<std::size_t>(domain);
  if (d >= means.size() || raw.size() != means[d].size()) {
    throw DataError("standardizer: domain " + std::to_string(domain) + " has " +
                    std::to_string(raw.size()) + " features, expected " +
                    (d < means.size() ? std::to_string(means[d].size()) : std::string("none")));
  }
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - means[d][i]) / stds[d][i];
  return out;
}

Dataset Standardizer::apply(const Dataset& ds) const {
  Dataset out = ds;
  for (auto& r : out.records) {
    for (auto& [domain, v] : r.features) v = apply(domain, v);
  }
  return out;
}

void write_domain_csv(const std::filesystem::path& path, const Dataset& ds, int domain) {
  const DomainSpec& spec = ds.specs.at(static_cast<std::size_t>(domain));
  std::vector<std::string> header{"id"};
  for (std::size_t i = 0; i < spec.dim; ++i) header.push_back("f" + std::to_string(i));
  csv::Writer w(path, header);
  for (const auto& r : ds.records) {
    std::vector<std::string> row{r.id};
    for (double v : r.features.at(domain)) row.push_back(csv::format_number(v));
    w.row(row);
  }
}

void write_labels_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::vector<std::string> header{"id"};
  header.insert(header.end(), ds.label_names.begin(), ds.label_names.end());
  csv::Writer w(path, header);
  for (const auto& r : ds.records) {
    if (!r.label) continue;
    std::vector<std::string> row{r.id};
    for (std::uint8_t b : r.label->bits) row.push_back(b ? "1" : "0");
    w.row(row);
  }
}

}  // namespace hetembed
