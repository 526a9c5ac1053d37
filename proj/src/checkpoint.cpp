// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/checkpoint.hpp"

#include <fstream>

#include "depthkit/errors.hpp"

namespace depthkit {

namespace {

constexpr char kMagic[4] = {'D', 'K', 'C', 'P'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot open " + path.string() + " for writing");
  }
  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u32(uint32_t v) { bytes(&v, sizeof v); }
  void u64(uint64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  bool good() const { return out_.good(); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : in_(path, std::ios::binary), path_(path.string()) {
    if (!in_) throw DataError("cannot open checkpoint " + path_);
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (!in_)
      throw DataError("corrupt checkpoint " + path_ + " at offset " + std::to_string(offset_));
    offset_ += n;
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    const uint64_t n = u64();
    if (n > (1ull << 32))
      throw DataError("corrupt checkpoint " + path_ + " at offset " + std::to_string(offset_));
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }
  size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
  size_t offset_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(ckpt.version);
  w.str(ckpt.config_text);
  w.u64(ckpt.config_hash);
  w.u64(ckpt.global_step);
  w.str(ckpt.rng_state);
  w.u32(static_cast<uint32_t>(ckpt.fingerprints.size()));
  for (const auto& [name, hash] : ckpt.fingerprints) {
    w.str(name);
    w.u64(hash);
  }
  w.u32(static_cast<uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, m] : ckpt.arrays) {
    w.str(name);
    w.u32(static_cast<uint32_t>(m.rows()));
    w.u32(static_cast<uint32_t>(m.cols()));
    w.bytes(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
  }
  if (!w.good()) throw DataError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("corrupt checkpoint " + r.path() + " at offset 0: bad magic");
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != Checkpoint::kVersion)
    throw DataError("checkpoint " + r.path() + ": format version " +
                    std::to_string(ckpt.version) + " does not match supported version " +
                    std::to_string(Checkpoint::kVersion));
  ckpt.config_text = r.str();
  ckpt.config_hash = r.u64();
  ckpt.global_step = r.u64();
  ckpt.rng_state = r.str();
  const uint32_t nfp = r.u32();
  for (uint32_t i = 0; i < nfp; ++i) {
    std::string name = r.str();
    const uint64_t hash = r.u64();
    ckpt.fingerprints.emplace_back(std::move(name), hash);
  }
  const uint32_t narr = r.u32();
  for (uint32_t i = 0; i < narr; ++i) {
    std::string name = r.str();
    const uint32_t rows = r.u32();
    const uint32_t cols = r.u32();
    Mat<double> m(rows, cols);
    r.bytes(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
    ckpt.arrays.emplace(std::move(name), std::move(m));
  }
  return ckpt;
}

void apply_arrays(const std::map<std::string, Mat<double>>& arrays,
                  const std::vector<nn::Parameter<double>*>& params) {
  std::string report;
  for (auto* p : params) {
    const auto it = arrays.find(p->name);
    if (it == arrays.end()) {
      report += "  missing array '" + p->name + "'\n";
      continue;
    }
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      report += "  '" + p->name + "': expected " + std::to_string(p->value.rows()) + "x" +
                std::to_string(p->value.cols()) + ", checkpoint has " +
                std::to_string(it->second.rows()) + "x" + std::to_string(it->second.cols()) + "\n";
    }
  }
  if (!report.empty()) throw ContractError("checkpoint does not fit the model:\n" + report);
  for (auto* p : params) p->value = arrays.at(p->name);
}

}  // namespace depthkit
