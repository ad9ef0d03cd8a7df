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

#pragma once

// Binary checkpoint, all fields little-endian:
//
//   char[8] magic "ESIMCKPT"
//   u32     format version (kCheckpointVersion)
//   u32     vocab_size, layers, width, heads, ffn_width, max_length
//   f64     dropout
//   u64     vocabulary hash (Vocab::hash)
//   u32     has_momentum (0 or 1)
//   f64     momentum coefficient (0 when absent)
//   f32[]   encoder arrays in declaration order, row-major
//   f32[]   momentum arrays, same order, when has_momentum
//
// Equal parameters serialize to equal bytes.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esimcse/encoder.hpp"
#include "esimcse/momentum.hpp"

namespace esimcse {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EncoderConfig config;
  std::uint64_t vocab_hash = 0;
  EncoderParams<float> params;
  std::optional<MomentumState<float>> momentum;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace esimcse
