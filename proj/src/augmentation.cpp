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

#include "esimcse/augmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "esimcse/error.hpp"

namespace esimcse {
namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 7> kStrategyNames = {{
    {Strategy::kNone, "none"},
    {Strategy::kSubwordRepetition, "subword-repetition"},
    {Strategy::kWordRepetition, "word-repetition"},
    {Strategy::kInsertStopword, "insert-stopword"},
    {Strategy::kInsertMask, "insert-mask"},
    {Strategy::kRandomInsert, "random-insert"},
    {Strategy::kRandomDelete, "random-delete"},
}};

// [begin, end) token spans of each word.
std::vector<std::pair<std::size_t, std::size_t>> word_spans(const TokenSequence& seq) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i == 0 || seq.word_start[i]) {
      if (!spans.empty()) spans.back().second = i;
      spans.emplace_back(i, seq.size());
    }
  }
  return spans;
}

void push(TokenSequence& out, int id, bool starts_word) {
  out.ids.push_back(id);
  out.word_start.push_back(starts_word);
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  for (const auto& [s, name] : kStrategyNames) {
    if (s == strategy) return name;
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (const auto& [s, n] : kStrategyNames) {
    if (n == name) return s;
  }
  throw std::invalid_argument("unknown augmentation strategy '" + std::string(name) + "'");
}

bool is_word_level(Strategy strategy) {
  return strategy == Strategy::kWordRepetition || strategy == Strategy::kInsertStopword ||
         strategy == Strategy::kInsertMask;
}

void AugmentationConfig::validate() const {
  if (!(dup_rate >= 0.0 && dup_rate <= 1.0)) throw std::invalid_argument("dup_rate must lie in [0, 1]");
}

std::vector<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read stop-word file " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  if (words.empty()) throw DataError("stop-word file " + path + " is empty");
  return words;
}

std::size_t sample_dup_len(std::size_t n, double dup_rate, Rng& rng) {
  if (n == 0) return 0;
  const auto scaled = static_cast<std::size_t>(std::floor(dup_rate * static_cast<double>(n)));
  const std::size_t upper = std::max<std::size_t>(2, scaled);
  const auto draw = static_cast<std::size_t>(rng.uniform_int(upper + 1));
  return std::min(draw, n);
}

std::vector<std::size_t> sample_dup_set(std::size_t n, std::size_t dup_len, Rng& rng) {
  if (dup_len > n) throw std::invalid_argument("sample_dup_set: dup_len exceeds sequence length");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < dup_len; ++i) {
    std::swap(pool[i], pool[i + static_cast<std::size_t>(rng.uniform_int(n - i))]);
  }
  pool.resize(dup_len);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Augmenter::Augmenter(AugmentationConfig config, const Vocab& vocab)
    : config_(std::move(config)), vocab_(&vocab) {
  config_.validate();
  if (config_.strategy == Strategy::kInsertStopword) {
    const auto& words = config_.stopwords.empty() ? default_stopwords() : config_.stopwords;
    for (const auto& w : words) stopword_tokens_.push_back(tokenize_subwords(w, vocab));
  }
  if (config_.strategy == Strategy::kRandomInsert && vocab.size() <= kNumSpecials) {
    throw std::invalid_argument("random-insert needs a vocabulary with content tokens");
  }
}

TokenSequence Augmenter::apply(const TokenSequence& seq, Rng& rng) const {
  if (seq.size() == 0) throw std::invalid_argument("augmentation needs at least one content token");
  if (config_.strategy == Strategy::kNone) return seq;
  const std::size_t units = is_word_level(config_.strategy) ? word_spans(seq).size() : seq.size();
  std::size_t dup_len = sample_dup_len(units, config_.dup_rate, rng);
  if (config_.strategy == Strategy::kRandomDelete) dup_len = std::min(dup_len, units - 1);
  const auto positions = sample_dup_set(units, dup_len, rng);
  return apply_at(seq, positions, rng);
}

TokenSequence Augmenter::apply_at(const TokenSequence& seq, std::span<const std::size_t> positions,
                                  Rng& rng) const {
  TokenSequence out;
  out.raw = seq.raw;
  std::vector<bool> selected;

  if (is_word_level(config_.strategy)) {
    const auto spans = word_spans(seq);
    selected.assign(spans.size(), false);
    for (auto p : positions) {
      if (p >= spans.size()) throw std::invalid_argument("augmentation position out of range");
      selected[p] = true;
    }
    for (std::size_t w = 0; w < spans.size(); ++w) {
      const auto [begin, end] = spans[w];
      for (std::size_t i = begin; i < end; ++i) push(out, seq.ids[i], i == begin);
      if (!selected[w]) continue;
      switch (config_.strategy) {
        case Strategy::kWordRepetition:
          for (std::size_t i = begin; i < end; ++i) push(out, seq.ids[i], i == begin);
          break;
        case Strategy::kInsertStopword: {
          const auto& stop = stopword_tokens_[static_cast<std::size_t>(rng.uniform_int(stopword_tokens_.size()))];
          for (std::size_t i = 0; i < stop.size(); ++i) push(out, stop.ids[i], i == 0);
          break;
        }
        case Strategy::kInsertMask:
          push(out, kMaskId, true);
          break;
        default:
          break;
      }
    }
    return out;
  }

  selected.assign(seq.size(), false);
  for (auto p : positions) {
    if (p >= seq.size()) throw std::invalid_argument("augmentation position out of range");
    selected[p] = true;
  }
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const bool first = i == 0 || seq.word_start[i];
    switch (config_.strategy) {
      case Strategy::kSubwordRepetition:
        push(out, seq.ids[i], first);
        if (selected[i]) push(out, seq.ids[i], false);
        break;
      case Strategy::kRandomInsert:
        push(out, seq.ids[i], first);
        if (selected[i]) {
          const auto span = static_cast<std::uint64_t>(vocab_->size() - kNumSpecials);
          const int id = kNumSpecials + static_cast<int>(rng.uniform_int(span));
          push(out, id, !vocab_->is_continuation(id));
        }
        break;
      case Strategy::kRandomDelete:
        if (!selected[i]) push(out, seq.ids[i], first);
        break;
      default:
        push(out, seq.ids[i], first);
        break;
    }
  }
  if (!out.word_start.empty()) out.word_start[0] = true;
  return out;
}

}  // namespace esimcse
