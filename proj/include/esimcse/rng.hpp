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

#include <cstdint>
#include <string_view>

namespace esimcse {

// Deterministic pseudo-random generator: xoshiro256** with its 256-bit state
// expanded from the 64-bit seed by splitmix64. Distribution helpers are
// implemented here rather than taken from <random>, whose distributions are
// not specified bit-for-bit across standard libraries.
//
// Version 1 stream layout:
//   uniform()      (next() >> 11) * 2^-53
//   uniform_int(n) rejection of the low (2^64 mod n) values, then modulo
//   normal()       Box-Muller, cosine branch only, two uniforms per draw
//   substream(id)  seeded by splitmix64(seed ^ splitmix64(id))
// Changing any of these changes every seeded run, so bump kRngVersion.
inline constexpr int kRngVersion = 1;
inline constexpr std::string_view kRngAlgorithm = "xoshiro256**/splitmix64";

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next();

  // Uniform in [0, 1).
  double uniform();

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  // Independent generator derived from this generator's seed and `id`.
  // Does not depend on, or advance, the current state.
  Rng substream(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace esimcse
