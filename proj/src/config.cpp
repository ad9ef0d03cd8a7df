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

#include "esimcse/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "esimcse/error.hpp"

namespace esimcse {
namespace {

std::string normalize_key(std::string_view key) {
  std::string out(key);
  for (char& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch-size must be at least 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (eval_every < 1) throw std::invalid_argument("eval-every must be at least 1");
  if (!(queue_multiple >= 0.0)) throw std::invalid_argument("queue-multiple must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("lr must be positive");
  augmentation.validate();
  EncoderConfig probe = encoder_config(kNumSpecials + 1);
  probe.validate();
}

std::size_t TrainConfig::queue_capacity() const {
  return static_cast<std::size_t>(std::llround(queue_multiple * batch_size));
}

EncoderConfig TrainConfig::encoder_config(int actual_vocab_size) const {
  EncoderConfig c;
  c.vocab_size = actual_vocab_size;
  c.layers = layers;
  c.width = width;
  c.heads = heads;
  c.ffn_width = ffn_width;
  c.max_length = max_length;
  c.dropout = dropout;
  return c;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "corpus", "dev", "out", "batch-size", "temperature", "epochs", "eval-every", "queue-multiple",
      "momentum", "strategy", "dup-rate", "stopwords", "dropout", "lr", "seed", "vocab-size",
      "layers", "width", "heads", "ffn-width", "max-length"};
  return keys;
}

void apply_setting(TrainConfig& c, std::string_view raw_key, std::string_view raw_value) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string_view value = trim(raw_value);
  if (key == "corpus") {
    c.corpus_path = value;
  } else if (key == "dev") {
    c.dev_path = value;
  } else if (key == "out") {
    c.output_dir = value;
  } else if (key == "stopwords") {
    c.stopwords_path = value;
  } else if (key == "batch-size") {
    c.batch_size = parse_number<int>(key, value);
  } else if (key == "temperature") {
    c.temperature = parse_number<double>(key, value);
  } else if (key == "epochs") {
    c.epochs = parse_number<int>(key, value);
  } else if (key == "eval-every") {
    c.eval_every = parse_number<int>(key, value);
  } else if (key == "queue-multiple") {
    c.queue_multiple = parse_number<double>(key, value);
  } else if (key == "momentum") {
    c.momentum = parse_number<double>(key, value);
  } else if (key == "strategy") {
    c.augmentation.strategy = parse_strategy(value);
  } else if (key == "dup-rate") {
    c.augmentation.dup_rate = parse_number<double>(key, value);
  } else if (key == "dropout") {
    c.dropout = parse_number<double>(key, value);
  } else if (key == "lr") {
    c.learning_rate = parse_number<double>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "vocab-size") {
    c.vocab_size = parse_number<int>(key, value);
  } else if (key == "layers") {
    c.layers = parse_number<int>(key, value);
  } else if (key == "width") {
    c.width = parse_number<int>(key, value);
  } else if (key == "heads") {
    c.heads = parse_number<int>(key, value);
  } else if (key == "ffn-width") {
    c.ffn_width = parse_number<int>(key, value);
  } else if (key == "max-length") {
    c.max_length = parse_number<int>(key, value);
  } else {
    throw std::invalid_argument("unknown setting '" + key + "'");
  }
}

void apply_config_file(TrainConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    if (trim(view).empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_setting(config, view.substr(0, eq), view.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace esimcse
