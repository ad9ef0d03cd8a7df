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

#include "esimcse/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include "esimcse/error.hpp"

namespace esimcse {
namespace {

constexpr std::size_t kMaxWordChars = 100;

const char* const kSpecialTokens[kNumSpecials] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool starts_with_continuation(std::string_view s) { return s.starts_with(kContinuation); }

std::string_view strip_continuation(std::string_view s) {
  return starts_with_continuation(s) ? s.substr(kContinuation.size()) : s;
}

// Word as its initial symbol sequence: first code point bare, the rest "##"-prefixed.
std::vector<std::string> initial_symbols(const std::string& word) {
  std::vector<std::string> symbols = split_codepoints(word);
  for (std::size_t i = 1; i < symbols.size(); ++i) symbols[i] = std::string(kContinuation) + symbols[i];
  return symbols;
}

}  // namespace

Vocab::Vocab() {
  for (const char* s : kSpecialTokens) add(s);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < static_cast<std::size_t>(kNumSpecials)) {
    throw DataError("vocabulary is missing the special tokens");
  }
  for (int i = 0; i < kNumSpecials; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kSpecialTokens[i]) {
      throw DataError("vocabulary token " + std::to_string(i) + " must be " + kSpecialTokens[i]);
    }
  }
  Vocab vocab;
  for (std::size_t i = kNumSpecials; i < tokens.size(); ++i) {
    if (tokens[i].empty()) throw DataError("empty token at line " + std::to_string(i + 1));
    if (vocab.contains(tokens[i])) throw DataError("duplicate token '" + tokens[i] + "'");
    vocab.add(std::move(tokens[i]));
  }
  return vocab;
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary file " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

int Vocab::add(std::string token) {
  if (auto id = find(token)) return *id;
  const int id = size();
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

bool Vocab::is_continuation(int id) const { return starts_with_continuation(token(id)); }

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& t : tokens_) {
    for (char c : t) feed(static_cast<unsigned char>(c));
    feed('\n');
  }
  return h;
}

std::size_t TokenSequence::word_count() const {
  return static_cast<std::size_t>(std::count(word_start.begin(), word_start.end(), true));
}

std::vector<std::string> tokenize_words(std::string_view sentence) {
  std::vector<std::string> words;
  std::string current;
  for (char c : sentence) {
    if (is_space(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ascii_lower(c));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  if (words.empty()) throw std::invalid_argument("sentence is empty after whitespace normalization");
  return words;
}

std::vector<std::string> split_codepoints(std::string_view word) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < word.size();) {
    const auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    len = std::min(len, word.size() - i);
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> corpus, int target_size) {
  std::map<std::string, long> word_freq;
  for (const auto& line : corpus) {
    bool blank = std::all_of(line.begin(), line.end(), is_space);
    if (blank) continue;
    for (auto& w : tokenize_words(line)) ++word_freq[w];
  }
  if (word_freq.empty()) throw std::invalid_argument("build_vocab: corpus is empty");

  std::vector<std::pair<std::vector<std::string>, long>> words;
  std::set<std::string> alphabet;
  for (const auto& [word, freq] : word_freq) {
    auto symbols = initial_symbols(word);
    alphabet.insert(symbols.begin(), symbols.end());
    words.emplace_back(std::move(symbols), freq);
  }
  if (target_size < kNumSpecials + static_cast<int>(alphabet.size())) {
    throw std::invalid_argument("build_vocab: target size " + std::to_string(target_size) +
                                " is below specials + alphabet (" +
                                std::to_string(kNumSpecials + alphabet.size()) + ")");
  }

  Vocab vocab;
  for (const auto& s : alphabet) vocab.add(s);

  while (vocab.size() < target_size) {
    std::map<std::pair<std::string, std::string>, long> pair_freq;
    for (const auto& [symbols, freq] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) pair_freq[{symbols[i], symbols[i + 1]}] += freq;
    }
    if (pair_freq.empty()) break;
    // Highest count wins; std::map order breaks ties lexicographically.
    auto best = pair_freq.begin();
    for (auto it = pair_freq.begin(); it != pair_freq.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    std::string merged = left + std::string(strip_continuation(right));
    for (auto& [symbols, freq] : words) {
      std::vector<std::string> next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(symbols[i]);
        }
      }
      symbols = std::move(next);
    }
    vocab.add(std::move(merged));
  }
  return vocab;
}

TokenSequence tokenize_subwords(std::string_view sentence, const Vocab& vocab) {
  TokenSequence seq;
  seq.raw = std::string(sentence);
  for (const auto& word : tokenize_words(sentence)) {
    const auto chars = split_codepoints(word);
    std::vector<int> pieces;
    bool unknown = chars.size() > kMaxWordChars;
    for (std::size_t start = 0; start < chars.size() && !unknown;) {
      std::optional<int> match;
      std::size_t end = chars.size();
      for (; end > start; --end) {
        std::string candidate = start > 0 ? std::string(kContinuation) : std::string();
        for (std::size_t k = start; k < end; ++k) candidate += chars[k];
        if ((match = vocab.find(candidate))) break;
      }
      if (!match) {
        unknown = true;
      } else {
        pieces.push_back(*match);
        start = end;
      }
    }
    if (unknown) pieces.assign(1, kUnknownId);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      seq.ids.push_back(pieces[i]);
      seq.word_start.push_back(i == 0);
    }
  }
  return seq;
}

std::string detokenize(const TokenSequence& seq, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (seq.word_start[i] && !out.empty()) out += ' ';
    out += strip_continuation(vocab.token(seq.ids[i]));
  }
  return out;
}

std::string token_string(const TokenSequence& seq, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.token(seq.ids[i]);
  }
  return out;
}

}  // namespace esimcse
