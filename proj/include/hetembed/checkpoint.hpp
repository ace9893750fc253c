// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

// Binary checkpoint layout (all integers and doubles little-endian):
//
//   "HETEMBCK"                      8-byte magic
//   u32 version                     currently 1
//   u64 config_hash                 FNV-1a of the config JSON below
//   u64 n, n bytes                  canonical config JSON
//   u32 k, then per domain:         i32 id, u32 n, name, u64 dim
//   u32 q, then per label:          u32 n, name
//   per domain:                     dim f64 means, dim f64 stds
//   u32 blocks, then per block:     u32 n, name, u32 rank, rank x u64 dims,
//                                   prod(dims) f64 values
//   u64 total_length                byte length of the whole file

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hetembed/config.hpp"
#include "hetembed/data.hpp"
#include "hetembed/model.hpp"

namespace hetembed {

struct ParameterBlock {
  std::string name;
  Shape shape;
  std::vector<double> values;

  bool operator==(const ParameterBlock&) const = default;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string config_json;
  std::uint64_t config_hash = 0;
  std::vector<DomainSpec> specs;
  std::vector<std::string> label_names;
  Standardizer standardizer;
  std::vector<ParameterBlock> blocks;

  static Checkpoint capture(const TrainConfig& cfg, const Model& model,
                            const std::vector<std::string>& label_names,
                            const Standardizer& standardizer);

  std::vector<std::uint8_t> to_bytes() const;
  /// Verifies magic, version, config hash and total length.
  static Checkpoint from_bytes(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  TrainConfig config() const;
  /// Rebuilds the model and copies the stored parameter values into it.
  Model model() const;
};

}  // namespace hetembed
