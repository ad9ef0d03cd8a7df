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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace esimcse {

// Reserved ids, always the first entries of every vocabulary.
enum SpecialToken : int {
  kPadId = 0,
  kUnknownId = 1,
  kClassId = 2,
  kSeparatorId = 3,
  kMaskId = 4,
};
inline constexpr int kNumSpecials = 5;

// Marks a sub-word that continues the current word.
inline constexpr std::string_view kContinuation = "##";

class Vocab {
 public:
  // Vocabulary holding only the special tokens.
  Vocab();

  // Tokens in id order; the first kNumSpecials must be the specials.
  static Vocab from_tokens(std::vector<std::string> tokens);

  // One token per line, line index = id.
  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  std::optional<int> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  // Appends `token` unless present; returns its id.
  int add(std::string token);

  bool is_continuation(int id) const;

  // FNV-1a over the newline-joined token list.
  std::uint64_t hash() const;

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Content tokens of one sentence (no specials) with word boundaries.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<bool> word_start;  // true on the first sub-word of each word
  std::string raw;

  std::size_t size() const { return ids.size(); }
  std::size_t word_count() const;
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Lowercased, whitespace-delimited words. Throws on blank input.
std::vector<std::string> tokenize_words(std::string_view sentence);

// UTF-8 code points of `word`, each as its own string.
std::vector<std::string> split_codepoints(std::string_view word);

// Frequency-ordered pair merging over the corpus words until `target_size`
// tokens exist or no pair is left to merge.
Vocab build_vocab(std::span<const std::string> corpus, int target_size);

// Greedy longest-match segmentation of every word. A word with an
// unmatchable span becomes a single unknown token.
TokenSequence tokenize_subwords(std::string_view sentence, const Vocab& vocab);

// Inverse of tokenize_subwords for in-vocabulary words.
std::string detokenize(const TokenSequence& seq, const Vocab& vocab);

// Space-joined token strings, e.g. "micro micro ##biology".
std::string token_string(const TokenSequence& seq, const Vocab& vocab);

}  // namespace esimcse
