// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hetembed/error.hpp"
#include "json.hpp"

namespace hetembed {

using nlohmann::json;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Linear:
      return "linear_combination";
    case Variant::Cnn:
      return "cnn";
    case Variant::CnnBiLstm:
      return "cnn_bilstm";
    case Variant::Full:
      return "cnn_bilstm_domain_specific";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::Linear, Variant::Cnn, Variant::CnnBiLstm, Variant::Full}) {
    if (variant_name(v) == name) return v;
  }
  if (name == "linear") return Variant::Linear;
  if (name == "full") return Variant::Full;
  throw ConfigError("unknown model variant '" + name + "'");
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void TrainConfig::validate() const {
  optimizer.validate();
  model.embedder.validate();
  if (model.hidden == 0) throw ConfigError("model.hidden must be positive");
  if (!(model.threshold > 0.0 && model.threshold < 1.0)) {
    throw ConfigError("model.threshold must lie strictly between 0 and 1");
  }
  const auto& f = data.split;
  if (!(f.train > 0 && f.val > 0 && f.test > 0) || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("data.split fractions must be positive and sum to 1");
  }
  if (stage1.batch_size == 0 || stage2.batch_size == 0) throw ConfigError("batch sizes must be positive");
  if (stage2.aux_ext_weight < 0.0) throw ConfigError("stage2.aux_ext_weight must be >= 0");
  if (data.source == "synthetic") {
    if (data.synthetic.dims.size() != data.synthetic.k) {
      throw ConfigError("data.synthetic.dims must list one size per domain");
    }
  } else if (data.source == "csv") {
    if (data.domains.empty()) throw ConfigError("data.domains must list at least one source");
  } else {
    throw ConfigError("data.source must be 'synthetic' or 'csv'");
  }
}

namespace {

json to_json_value(const TrainConfig& c) {
  const auto& e = c.model.embedder;
  const auto& s = c.data.synthetic;
  json domains = json::array();
  for (const auto& d : c.data.domains) {
    domains.push_back({{"id", d.spec.id}, {"name", d.spec.name}, {"dim", d.spec.dim},
                       {"path", d.path.generic_string()}});
  }
  json data = {
      {"source", c.data.source},
      {"synthetic",
       {{"k", s.k}, {"dims", s.dims}, {"q", s.q}, {"m", s.m}, {"dependency", s.dependency},
        {"signature_amplitude", s.signature_amplitude}, {"noise", s.noise},
        {"latent_dim", s.latent_dim}, {"hidden_units", s.hidden_units}, {"gain", s.gain},
        {"linear", s.linear}}},
      {"domains", domains},
      {"labels", c.data.labels.generic_string()},
      {"replicate_on", c.data.replicate_on ? json(*c.data.replicate_on) : json(nullptr)},
      {"impute_missing", c.data.impute_missing},
      {"split", {c.data.split.train, c.data.split.val, c.data.split.test}},
      {"group_by_compound", c.data.group_by_compound},
      {"standardize", c.data.standardize},
  };
  return {
      {"seed", c.seed},
      {"variant", variant_name(c.variant)},
      {"data", data},
      {"model",
       {{"channels", e.channels}, {"kernel_width", e.kernel_width}, {"pool_width", e.pool_width},
        {"pool_stride", e.pool_stride}, {"roi_bins", e.roi_bins}, {"hidden", c.model.hidden},
        {"threshold", c.model.threshold}}},
      {"stage1",
       {{"epochs", c.stage1.epochs}, {"batch_size", c.stage1.batch_size},
        {"early_stop_accuracy", c.stage1.early_stop_accuracy}, {"patience", c.stage1.patience}}},
      {"stage2",
       {{"epochs", c.stage2.epochs}, {"batch_size", c.stage2.batch_size},
        {"aux_ext_weight", c.stage2.aux_ext_weight}, {"patience", c.stage2.patience}}},
      {"optimizer",
       {{"kind", c.optimizer.kind}, {"lr", c.optimizer.lr}, {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2}, {"eps", c.optimizer.eps}}},
  };
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

std::string TrainConfig::to_json() const { return to_json_value(*this).dump(); }

std::uint64_t TrainConfig::hash() const { return fnv1a(to_json()); }

TrainConfig TrainConfig::from_json(const std::string& text, const std::filesystem::path& base_dir) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    read(j, "seed", c.seed);
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("data")) {
      const json& d = j.at("data");
      read(d, "source", c.data.source);
      if (d.contains("synthetic")) {
        const json& s = d.at("synthetic");
        auto& p = c.data.synthetic;
        read(s, "k", p.k);
        read(s, "dims", p.dims);
        read(s, "q", p.q);
        read(s, "m", p.m);
        read(s, "dependency", p.dependency);
        read(s, "signature_amplitude", p.signature_amplitude);
        read(s, "noise", p.noise);
        read(s, "latent_dim", p.latent_dim);
        read(s, "hidden_units", p.hidden_units);
        read(s, "gain", p.gain);
        read(s, "linear", p.linear);
      }
      if (d.contains("domains")) {
        for (const json& dom : d.at("domains")) {
          CsvDomain cd;
          cd.spec.id = dom.at("id").get<int>();
          cd.spec.name = dom.value("name", "domain" + std::to_string(cd.spec.id));
          cd.spec.dim = dom.at("dim").get<std::size_t>();
          cd.path = resolve(dom.at("path").get<std::string>(), base_dir);
          c.data.domains.push_back(std::move(cd));
        }
      }
      if (d.contains("labels")) c.data.labels = resolve(d.at("labels").get<std::string>(), base_dir);
      if (d.contains("replicate_on") && !d.at("replicate_on").is_null()) {
        c.data.replicate_on = d.at("replicate_on").get<int>();
      }
      read(d, "impute_missing", c.data.impute_missing);
      if (d.contains("split")) {
        const auto f = d.at("split").get<std::vector<double>>();
        if (f.size() != 3) throw ConfigError("data.split must have three fractions");
        c.data.split = {f[0], f[1], f[2]};
      }
      read(d, "group_by_compound", c.data.group_by_compound);
      read(d, "standardize", c.data.standardize);
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      read(m, "channels", c.model.embedder.channels);
      read(m, "kernel_width", c.model.embedder.kernel_width);
      read(m, "pool_width", c.model.embedder.pool_width);
      read(m, "pool_stride", c.model.embedder.pool_stride);
      read(m, "roi_bins", c.model.embedder.roi_bins);
      read(m, "hidden", c.model.hidden);
      read(m, "threshold", c.model.threshold);
    }
    if (j.contains("stage1")) {
      const json& s = j.at("stage1");
      read(s, "epochs", c.stage1.epochs);
      read(s, "batch_size", c.stage1.batch_size);
      read(s, "early_stop_accuracy", c.stage1.early_stop_accuracy);
      read(s, "patience", c.stage1.patience);
    }
    if (j.contains("stage2")) {
      const json& s = j.at("stage2");
      read(s, "epochs", c.stage2.epochs);
      read(s, "batch_size", c.stage2.batch_size);
      read(s, "aux_ext_weight", c.stage2.aux_ext_weight);
      read(s, "patience", c.stage2.patience);
    }
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      read(o, "kind", c.optimizer.kind);
      read(o, "lr", c.optimizer.lr);
      read(o, "beta1", c.optimizer.beta1);
      read(o, "beta2", c.optimizer.beta2);
      read(o, "eps", c.optimizer.eps);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return TrainConfig::from_json(ss.str(), path.parent_path());
}

}  // namespace hetembed
