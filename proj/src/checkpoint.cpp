// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetembed/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hetembed/error.hpp"

namespace hetembed {

namespace {

constexpr char kMagic[8] = {'H', 'E', 'T', 'E', 'M', 'B', 'C', 'K'};

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes.insert(bytes.end(), p, p + n); }

  std::vector<std::uint8_t> bytes;

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() { return text(u32()); }
  std::string text(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<long>(pos_), bytes_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return s;
  }
  void expect_magic() {
    need(8);
    if (std::memcmp(bytes_.data() + pos_, kMagic, 8) != 0) throw DataError("not a checkpoint file (bad magic)");
    pos_ += 8;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint is truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint Checkpoint::capture(const TrainConfig& cfg, const Model& model,
                               const std::vector<std::string>& label_names,
                               const Standardizer& standardizer) {
  Checkpoint ck;
  ck.config_json = cfg.to_json();
  ck.config_hash = fnv1a(ck.config_json);
  ck.specs = model.specs;
  ck.label_names = label_names;
  ck.standardizer = standardizer;
  for (const auto& p : model.parameters()) {
    ck.blocks.push_back({p.name, p.tensor.shape(), p.tensor.to_vector()});
  }
  return ck;
}

std::vector<std::uint8_t> Checkpoint::to_bytes() const {
  Writer w;
  w.raw(kMagic, 8);
  w.u32(kVersion);
  w.u64(config_hash);
  w.u64(config_json.size());
  w.raw(config_json.data(), config_json.size());
  w.u32(static_cast<std::uint32_t>(specs.size()));
  for (const auto& s : specs) {
    w.i32(s.id);
    w.str(s.name);
    w.u64(s.dim);
  }
  w.u32(static_cast<std::uint32_t>(label_names.size()));
  for (const auto& n : label_names) w.str(n);
  for (std::size_t d = 0; d < specs.size(); ++d) {
    for (double v : standardizer.means.at(d)) w.f64(v);
    for (double v : standardizer.stds.at(d)) w.f64(v);
  }
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    w.str(b.name);
    w.u32(static_cast<std::uint32_t>(b.shape.size()));
    for (std::size_t d : b.shape) w.u64(d);
    for (double v : b.values) w.f64(v);
  }
  w.u64(w.bytes.size() + 8);
  return std::move(w.bytes);
}

Checkpoint Checkpoint::from_bytes(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.expect_magic();
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config_hash = r.u64();
  ck.config_json = r.text(r.u64());
  if (fnv1a(ck.config_json) != ck.config_hash) {
    throw DataError("checkpoint config hash does not match its embedded config");
  }
  const std::uint32_t k = r.u32();
  for (std::uint32_t i = 0; i < k; ++i) {
    DomainSpec s;
    s.id = r.i32();
    s.name = r.str();
    s.dim = r.u64();
    ck.specs.push_back(std::move(s));
  }
  const std::uint32_t q = r.u32();
  for (std::uint32_t i = 0; i < q; ++i) ck.label_names.push_back(r.str());
  for (const auto& s : ck.specs) {
    std::vector<double> means(s.dim), stds(s.dim);
    for (double& v : means) v = r.f64();
    for (double& v : stds) v = r.f64();
    ck.standardizer.means.push_back(std::move(means));
    ck.standardizer.stds.push_back(std::move(stds));
  }
  const std::uint32_t nblocks = r.u32();
  for (std::uint32_t i = 0; i < nblocks; ++i) {
    ParameterBlock b;
    b.name = r.str();
    const std::uint32_t rank = r.u32();
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      b.shape.push_back(r.u64());
      n *= b.shape.back();
    }
    if (n > bytes.size() / 8) throw DataError("checkpoint is truncated");
    b.values.resize(n);
    for (double& v : b.values) v = r.f64();
    ck.blocks.push_back(std::move(b));
  }
  const std::uint64_t total = r.u64();
  if (total != bytes.size() || r.pos() != bytes.size()) {
    throw DataError("checkpoint length mismatch: header says " + std::to_string(total) + " bytes, file has " +
                    std::to_string(bytes.size()));
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = to_bytes();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

TrainConfig Checkpoint::config() const { return TrainConfig::from_json(config_json); }

Model Checkpoint::model() const {
  const TrainConfig cfg = config();
  Model m = Model::init(cfg.variant, specs, label_names.size(), cfg.model, cfg.seed);
  const ParameterList params = m.parameters();
  if (params.size() != blocks.size()) {
    throw DataError("checkpoint holds " + std::to_string(blocks.size()) + " parameter blocks, model expects " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != blocks[i].name || params[i].tensor.shape() != blocks[i].shape) {
      throw DataError("checkpoint block '" + blocks[i].name + "' " + shape_to_string(blocks[i].shape) +
                      " does not match model parameter '" + params[i].name + "' " +
                      shape_to_string(params[i].tensor.shape()));
    }
    Tensor t = params[i].tensor;
    auto dst = t.mutable_data();
    std::copy(blocks[i].values.begin(), blocks[i].values.end(), dst.begin());
  }
  return m;
}

}  // namespace hetembed
