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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esimcse/rng.hpp"
#include "esimcse/tokenizer.hpp"

namespace esimcse {

enum class Strategy {
  kNone,
  kSubwordRepetition,
  kWordRepetition,
  kInsertStopword,
  kInsertMask,
  kRandomInsert,
  kRandomDelete,
};

std::string_view to_string(Strategy strategy);
// Accepts the names produced by to_string, e.g. "subword-repetition".
Strategy parse_strategy(std::string_view name);

struct AugmentationConfig {
  Strategy strategy = Strategy::kSubwordRepetition;
  double dup_rate = 0.32;
  std::vector<std::string> stopwords;  // insert-stopword only; empty means the built-in list

  void validate() const;
};

// Built-in English stop-word list (same content as data/stopwords.txt).
const std::vector<std::string>& default_stopwords();
// One lowercase word per line; blank lines skipped.
std::vector<std::string> load_stopwords(const std::string& path);

// Number of units to repeat: uniform over the integers
// 0..max(2, floor(dup_rate * n)), then clamped to n. Returns 0 for n = 0.
std::size_t sample_dup_len(std::size_t n, double dup_rate, Rng& rng);

// `dup_len` distinct 0-based positions from [0, n), uniformly, sorted.
std::vector<std::size_t> sample_dup_set(std::size_t n, std::size_t dup_len, Rng& rng);

// Units an augmentation samples over: sub-word tokens or whole words.
bool is_word_level(Strategy strategy);

class Augmenter {
 public:
  Augmenter(AugmentationConfig config, const Vocab& vocab);

  // Samples dup_len and dup_set, then transforms.
  TokenSequence apply(const TokenSequence& seq, Rng& rng) const;

  // Transforms at fixed 0-based unit positions (tokens, or words for the
  // word-level strategies). `rng` is only used to pick inserted tokens.
  TokenSequence apply_at(const TokenSequence& seq, std::span<const std::size_t> positions, Rng& rng) const;

  const AugmentationConfig& config() const { return config_; }

 private:
  AugmentationConfig config_;
  const Vocab* vocab_;
  std::vector<TokenSequence> stopword_tokens_;
};

}  // namespace esimcse
