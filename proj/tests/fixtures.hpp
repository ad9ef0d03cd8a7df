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

// Shared builders for tests and the acceptance binary.

#include <span>
#include <string>
#include <vector>

#include "esimcse/contrastive.hpp"
#include "esimcse/encoder.hpp"
#include "esimcse/grad_check.hpp"
#include "esimcse/tokenizer.hpp"

namespace esimcse::fixture {

inline std::vector<std::string> sample_sentences() {
  return {"the old farmer carried a basket to the market",
          "a young doctor opened the window",
          "children were playing in the park near the river",
          "the cat slept",
          "my brother repaired the bicycle in the garden yesterday",
          "she bought a violin",
          "the pilot watched the storm from the airport",
          "an old man painted the bridge"};
}

inline Vocab sample_vocab(int target = 120) { return build_vocab(sample_sentences(), target); }

inline std::vector<TokenSequence> tokenize_all(std::span<const std::string> sentences, const Vocab& vocab) {
  std::vector<TokenSequence> out;
  for (const auto& s : sentences) out.push_back(tokenize_subwords(s, vocab));
  return out;
}

inline EncoderConfig small_config(int vocab_size, int width = 16, int layers = 2) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.layers = layers;
  c.width = width;
  c.heads = 4;
  c.ffn_width = 2 * width;
  c.max_length = 24;
  c.dropout = 0.1;
  return c;
}

// Reassembles encoder variables from flat leaves in declaration order.
template <typename S>
EncoderVars<S> vars_from(std::span<const Var<S>> leaves, const EncoderConfig& config) {
  EncoderVars<S> w;
  w.layers.resize(static_cast<std::size_t>(config.layers));
  std::size_t i = 0;
  w.visit([&](const std::string&, Var<S>& v) { v = leaves[i++]; });
  return w;
}

template <typename S>
std::vector<Matrix<S>> flatten(const EncoderParams<S>& params) {
  std::vector<Matrix<S>> out;
  for (const Matrix<S>* m : arrays(params)) out.push_back(*m);
  return out;
}

// Full-model queue-extended contrastive loss with fixed dropout masks: both
// views are encoded with dropout on from generators reseeded on every call.
inline LossBuilder model_loss(const EncoderConfig& config, std::vector<TokenSequence> first,
                              std::vector<TokenSequence> second, Matrix<double> queue, double temperature,
                              std::uint64_t dropout_seed) {
  return [=](Tape<double>& tape, std::span<const Var<double>> leaves) {
    const auto w = vars_from<double>(leaves, config);
    Rng a(dropout_seed), b(dropout_seed + 1);
    const Var<double> h = encode(tape, w, config, first, true, a);
    const Var<double> hp = encode(tape, w, config, second, true, b);
    return infonce_loss(h, hp, queue, temperature);
  };
}

}  // namespace esimcse::fixture
