// Copyright 2026 The esimcse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "esimcse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "esimcse/error.hpp"

namespace esimcse {
namespace {

constexpr char kMagic[8] = {'E', 'S', 'I', 'M', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  void params(const EncoderParams<float>& p) {
    for (const Matrix<float>* m : arrays(p)) {
      for (Eigen::Index i = 0; i < m->size(); ++i) f32(m->data()[i]);
    }
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool magic() {
    need(sizeof(kMagic));
    const bool ok = std::memcmp(bytes_.data() + pos_, kMagic, sizeof(kMagic)) == 0;
    pos_ += sizeof(kMagic);
    return ok;
  }
  EncoderParams<float> params(const EncoderConfig& config) {
    Rng rng(0);
    EncoderParams<float> p = init_params<float>(config, rng);
    for (Matrix<float>* m : arrays(p)) {
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = f32();
    }
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint) {
  const EncoderConfig& c = checkpoint.config;
  c.validate();
  check_shapes(checkpoint.params, c);
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  for (int v : {c.vocab_size, c.layers, c.width, c.heads, c.ffn_width, c.max_length}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.f64(c.dropout);
  w.u64(checkpoint.vocab_hash);
  w.u32(checkpoint.momentum ? 1 : 0);
  w.f64(checkpoint.momentum ? checkpoint.momentum->lambda : 0.0);
  w.params(checkpoint.params);
  if (checkpoint.momentum) {
    check_shapes(checkpoint.momentum->params, c);
    w.params(checkpoint.momentum->params);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (!r.magic()) throw DataError("not a checkpoint file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  EncoderConfig& c = ck.config;
  for (int* field : {&c.vocab_size, &c.layers, &c.width, &c.heads, &c.ffn_width, &c.max_length}) {
    *field = static_cast<int>(r.u32());
  }
  c.dropout = r.f64();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  ck.vocab_hash = r.u64();
  const std::uint32_t has_momentum = r.u32();
  const double lambda = r.f64();
  ck.params = r.params(c);
  if (has_momentum == 1) {
    MomentumState<float> m;
    m.lambda = lambda;
    m.params = r.params(c);
    ck.momentum = std::move(m);
  } else if (has_momentum != 0) {
    throw DataError("checkpoint header: bad momentum flag");
  }
  if (!r.done()) throw DataError("checkpoint has trailing bytes");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace esimcse
