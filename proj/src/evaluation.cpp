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

#include "esimcse/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "esimcse/error.hpp"

namespace esimcse {
namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::optional<double> correlation_or_empty(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  try {
    return spearman(x, y);
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<StsPair> parse_sts(std::istream& in, const std::string& source) {
  std::vector<StsPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    auto fail = [&](const std::string& why) {
      return DataError(source + ":" + std::to_string(line_no) + ": " + why);
    };
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw fail("expected 3 tab-separated fields");
    if (line.find('\t', tab2 + 1) != std::string::npos) throw fail("expected 3 tab-separated fields");
    StsPair pair;
    const char* begin = line.data();
    const char* end = line.data() + tab1;
    auto [ptr, ec] = std::from_chars(begin, end, pair.gold);
    if (ec != std::errc() || ptr != end || !std::isfinite(pair.gold)) {
      throw fail("unparseable score '" + line.substr(0, tab1) + "'");
    }
    if (pair.gold < kMinGold || pair.gold > kMaxGold) throw fail("score outside [0, 5]");
    pair.first = line.substr(tab1 + 1, tab2 - tab1 - 1);
    pair.second = line.substr(tab2 + 1);
    if (blank(pair.first) || blank(pair.second)) throw fail("empty sentence");
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<StsPair> load_sts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset " + path);
  return parse_sts(in, path);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) hold ranks i+1..j+1.
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: lists differ in length");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least two values");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double cov = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) throw std::domain_error("spearman: constant list has no rank variance");
  return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
}

std::size_t word_count(std::string_view sentence) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : sentence) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

AuditReport length_bias_audit(std::span<const StsPair> pairs, std::span<const double> predictions, int threshold) {
  if (pairs.size() != predictions.size()) throw std::invalid_argument("audit: one prediction per pair required");
  if (threshold < 0) throw std::invalid_argument("audit: threshold must be non-negative");
  std::vector<double> gold_small, pred_small, gold_large, pred_large;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto a = static_cast<long>(word_count(pairs[i].first));
    const auto b = static_cast<long>(word_count(pairs[i].second));
    if (std::labs(a - b) <= threshold) {
      gold_small.push_back(pairs[i].gold);
      pred_small.push_back(predictions[i]);
    } else {
      gold_large.push_back(pairs[i].gold);
      pred_large.push_back(predictions[i]);
    }
  }
  AuditReport report;
  report.threshold = threshold;
  report.small = {gold_small.size(), correlation_or_empty(gold_small, pred_small)};
  report.large = {gold_large.size(), correlation_or_empty(gold_large, pred_large)};
  return report;
}

}  // namespace esimcse
