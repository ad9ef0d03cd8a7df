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
#include <string>
#include <string_view>
#include <vector>

#include "esimcse/augmentation.hpp"
#include "esimcse/encoder.hpp"

namespace esimcse {

struct TrainConfig {
  int batch_size = 64;
  double temperature = 0.05;
  int epochs = 1;
  int eval_every = 125;
  double queue_multiple = 2.5;  // queue capacity = round(multiple * batch_size); 0 disables
  double momentum = 0.995;
  AugmentationConfig augmentation;
  double dropout = 0.1;
  double learning_rate = 2e-3;
  std::uint64_t seed = 42;

  int vocab_size = 400;
  int layers = 2;
  int width = 64;
  int heads = 4;
  int ffn_width = 256;
  int max_length = 64;

  std::string corpus_path;
  std::string dev_path;
  std::string output_dir;
  std::string stopwords_path;

  void validate() const;
  std::size_t queue_capacity() const;
  EncoderConfig encoder_config(int actual_vocab_size) const;
};

// Names accepted by apply_setting, in display order.
const std::vector<std::string>& config_keys();

// Sets one field from its textual value. Keys use dashes ("batch-size");
// underscores are accepted too. Throws std::invalid_argument on an unknown
// key or unparseable value.
void apply_setting(TrainConfig& config, std::string_view key, std::string_view value);

// Flat `key = value` lines; '#' starts a comment.
void apply_config_file(TrainConfig& config, const std::string& path);

}  // namespace esimcse
