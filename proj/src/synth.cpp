// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hetembed/data.hpp"
#include "hetembed/error.hpp"
#include "hetembed/rng.hpp"

namespace hetembed {

namespace {

// Fixed random two-layer map for one domain.
struct DomainMap {
  std::vector<double> w1;  // [hidden x inputs]
  std::vector<double> c1;  // [hidden]
  std::vector<double> w2;  // [dim x hidden]
  std::vector<double> signature;
};

DomainMap draw_map(Rng& rng, std::size_t inputs, std::size_t hidden, std::size_t dim) {
  DomainMap map;
  const double s1 = 1.0 / std::sqrt(static_cast<double>(inputs));
  for (std::size_t i = 0; i < hidden * inputs; ++i) map.w1.push_back(rng.normal() * s1);
  for (std::size_t i = 0; i < hidden; ++i) map.c1.push_back(rng.normal() * 0.5);
  // Each hidden unit writes a smooth random profile along the feature axis.
  std::vector<double> rough(dim * hidden);
  for (double& v : rough) v = rng.normal();
  map.w2.assign(dim * hidden, 0.0);
  const int radius = 2;
  for (std::size_t h = 0; h < hidden; ++h) {
    for (std::size_t f = 0; f < dim; ++f) {
      double acc = 0.0;
      int n = 0;
      for (int o = -radius; o <= radius; ++o) {
        const auto idx = static_cast<long>(f) + o;
        if (idx < 0 || idx >= static_cast<long>(dim)) continue;
        acc += rough[static_cast<std::size_t>(idx) * hidden + h];
        ++n;
      }
      map.w2[f * hidden + h] = acc / std::sqrt(static_cast<double>(n * hidden) / 2.0);
    }
  }
  for (std::size_t f = 0; f < dim; ++f) map.signature.push_back(rng.normal());
  return map;
}

Dataset generate_once(const SynthParams& p, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t inputs = p.q + p.latent_dim;
  std::vector<DomainMap> maps;
  for (std::size_t j = 0; j < p.k; ++j) maps.push_back(draw_map(rng, inputs, p.hidden_units, p.dims[j]));

  Dataset ds;
  ds.label_names = default_label_names(p.q);
  for (std::size_t j = 0; j < p.k; ++j) {
    ds.specs.push_back(DomainSpec{static_cast<int>(j), "domain" + std::to_string(j), p.dims[j]});
  }
  const std::size_t max_active = std::min<std::size_t>(3, p.q);
  std::vector<std::size_t> order(p.q);
  std::vector<double> input(inputs);
  std::vector<double> hidden(p.hidden_units);
  for (std::size_t i = 0; i < p.m; ++i) {
    const std::size_t active = 1 + rng.below(max_active);
    for (std::size_t j = 0; j < p.q; ++j) order[j] = j;
    rng.shuffle(order);
    std::vector<std::size_t> on(order.begin(), order.begin() + static_cast<long>(active));
    const LabelVector z = LabelVector::from_indices(p.q, on);
    for (std::size_t j = 0; j < p.q; ++j) input[j] = z.bits[j];
    for (std::size_t r = 0; r < p.latent_dim; ++r) input[p.q + r] = p.dependency * rng.normal();

    CompoundRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "c%05zu", i);
    rec.id = id;
    rec.label = z;
    for (std::size_t j = 0; j < p.k; ++j) {
      const DomainMap& map = maps[j];
      for (std::size_t h = 0; h < p.hidden_units; ++h) {
        double pre = 0.0;
        for (std::size_t a = 0; a < inputs; ++a) pre += map.w1[h * inputs + a] * input[a];
        hidden[h] = p.linear ? pre : std::tanh(p.gain * pre + map.c1[h]);
      }
      std::vector<double> x(p.dims[j]);
      for (std::size_t f = 0; f < p.dims[j]; ++f) {
        double v = 0.0;
        for (std::size_t h = 0; h < p.hidden_units; ++h) v += map.w2[f * p.hidden_units + h] * hidden[h];
        x[f] = v + p.signature_amplitude * map.signature[f] + p.noise * rng.normal();
      }
      rec.features[static_cast<int>(j)] = std::move(x);
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

bool every_class_present(const Dataset& ds) {
  std::vector<bool> seen(ds.q(), false);
  for (const auto& r : ds.records) {
    for (std::size_t j = 0; j < ds.q(); ++j) seen[j] = seen[j] || r.label->test(j);
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

}  // namespace

Dataset synth_generate(const SynthParams& p) {
  if (p.k == 0 || p.dims.size() != p.k) {
    throw ConfigError("synth_generate: need k >= 1 and one dim per domain");
  }
  for (std::size_t d : p.dims) {
    if (d == 0) throw ConfigError("synth_generate: dims must be >= 1");
  }
  if (p.q == 0 || p.m == 0 || p.hidden_units == 0) {
    throw ConfigError("synth_generate: q, m and hidden_units must be >= 1");
  }
  if (p.dependency < 0.0 || p.dependency > 1.0) {
    throw ConfigError("synth_generate: dependency must lie in [0, 1]");
  }
  std::uint64_t seed = p.seed;
  Dataset ds = generate_once(p, seed);
  while (p.m >= 200 && !every_class_present(ds)) ds = generate_once(p, ++seed);
  return ds;
}

}  // namespace hetembed
