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

#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esimcse/contrastive.hpp"
#include "esimcse/encoder.hpp"
#include "esimcse/tokenizer.hpp"

namespace esimcse {

inline constexpr double kMinGold = 0.0;
inline constexpr double kMaxGold = 5.0;

struct StsPair {
  std::string first;
  std::string second;
  double gold = 0.0;
};

// Tab-separated `gold<TAB>sentence_a<TAB>sentence_b` lines; blank lines are
// skipped. Malformed lines raise DataError naming `source` and the line.
std::vector<StsPair> parse_sts(std::istream& in, const std::string& source);
std::vector<StsPair> load_sts(const std::string& path);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average ranks. Throws std::invalid_argument on
// length mismatch or fewer than two values and std::domain_error when either
// list is constant.
double spearman(std::span<const double> x, std::span<const double> y);

// Number of whitespace-delimited words.
std::size_t word_count(std::string_view sentence);

struct GroupCorrelation {
  std::size_t size = 0;
  std::optional<double> spearman;  // empty when fewer than two pairs or constant scores
};

struct AuditReport {
  int threshold = 3;
  GroupCorrelation small;  // |len_a - len_b| <= threshold
  GroupCorrelation large;  // |len_a - len_b| >  threshold
};

// Spearman(gold, prediction) separately for pairs whose word-count difference
// is within `threshold` and beyond it.
AuditReport length_bias_audit(std::span<const StsPair> pairs, std::span<const double> predictions,
                              int threshold = 3);

// Cosine similarity of dropout-off embeddings of each pair's two sentences.
template <typename S>
std::vector<double> score_pairs(std::span<const StsPair> pairs, const EncoderParams<S>& params,
                                const EncoderConfig& config, const Vocab& vocab) {
  if (pairs.empty()) throw std::invalid_argument("score_pairs: no pairs");
  std::vector<TokenSequence> sequences;
  sequences.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    sequences.push_back(tokenize_subwords(p.first, vocab));
    sequences.push_back(tokenize_subwords(p.second, vocab));
  }
  const Matrix<S> emb = encode_each<S>(sequences, params, config);
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (Eigen::Index i = 0; i + 1 < emb.rows(); i += 2) scores.push_back(cosine_sim(emb.row(i), emb.row(i + 1)));
  return scores;
}

// Spearman between gold scores and model predictions on `pairs`.
template <typename S>
double evaluate_spearman(std::span<const StsPair> pairs, const EncoderParams<S>& params,
                         const EncoderConfig& config, const Vocab& vocab) {
  const auto predictions = score_pairs(pairs, params, config, vocab);
  std::vector<double> gold;
  for (const auto& p : pairs) gold.push_back(p.gold);
  return spearman(gold, predictions);
}

}  // namespace esimcse
