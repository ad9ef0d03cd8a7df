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

// Small post-layer-norm transformer encoder producing one embedding per
// sentence from its classification-token position.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "esimcse/adam.hpp"
#include "esimcse/autodiff.hpp"
#include "esimcse/rng.hpp"
#include "esimcse/tensor.hpp"
#include "esimcse/tokenizer.hpp"

namespace esimcse {

struct EncoderConfig {
  int vocab_size = 0;
  int layers = 2;
  int width = 64;
  int heads = 4;
  int ffn_width = 256;
  int max_length = 64;  // including the classification and separator tokens
  double dropout = 0.1;

  void validate() const {
    if (vocab_size <= kNumSpecials) throw std::invalid_argument("encoder: vocabulary has no content tokens");
    if (layers < 1 || width < 1 || heads < 1 || ffn_width < 1) {
      throw std::invalid_argument("encoder: dimensions must be positive");
    }
    if (width % heads != 0) throw std::invalid_argument("encoder: width must be divisible by heads");
    if (max_length < 3) throw std::invalid_argument("encoder: max_length must be at least 3");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("encoder: dropout must lie in [0, 1)");
  }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Field lists drive visiting, zipping and transforming in declaration order,
// which is also the checkpoint order.
#define ESIMCSE_LAYER_FIELDS(X) \
  X(query_w)                    \
  X(query_b)                    \
  X(key_w)                      \
  X(key_b)                      \
  X(value_w)                    \
  X(value_b)                    \
  X(attn_out_w)                 \
  X(attn_out_b)                 \
  X(attn_norm_gain)             \
  X(attn_norm_bias)             \
  X(ffn_in_w)                   \
  X(ffn_in_b)                   \
  X(ffn_out_w)                  \
  X(ffn_out_b)                  \
  X(ffn_norm_gain)              \
  X(ffn_norm_bias)

template <typename T>
struct LayerWeights {
#define ESIMCSE_DECLARE(name) T name;
  ESIMCSE_LAYER_FIELDS(ESIMCSE_DECLARE)
#undef ESIMCSE_DECLARE
};

template <typename T>
struct EncoderWeights {
  T token_embedding;
  T position_embedding;
  T embed_norm_gain;
  T embed_norm_bias;
  std::vector<LayerWeights<T>> layers;
  T pool_w;
  T pool_b;

  // f(name, member) for every array in declaration order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  // Applies f to every array, producing weights of the result type.
  template <typename F>
  auto transform(F&& f) const {
    using U = std::decay_t<decltype(f(token_embedding))>;
    EncoderWeights<U> out;
    out.token_embedding = f(token_embedding);
    out.position_embedding = f(position_embedding);
    out.embed_norm_gain = f(embed_norm_gain);
    out.embed_norm_bias = f(embed_norm_bias);
    for (const auto& layer : layers) {
      LayerWeights<U> l;
#define ESIMCSE_MAP(name) l.name = f(layer.name);
      ESIMCSE_LAYER_FIELDS(ESIMCSE_MAP)
#undef ESIMCSE_MAP
      out.layers.push_back(std::move(l));
    }
    out.pool_w = f(pool_w);
    out.pool_b = f(pool_b);
    return out;
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("token_embedding"), self.token_embedding);
    f(std::string("position_embedding"), self.position_embedding);
    f(std::string("embed_norm_gain"), self.embed_norm_gain);
    f(std::string("embed_norm_bias"), self.embed_norm_bias);
    for (std::size_t i = 0; i < self.layers.size(); ++i) {
      const std::string prefix = "layer" + std::to_string(i) + ".";
#define ESIMCSE_VISIT(name) f(prefix + #name, self.layers[i].name);
      ESIMCSE_LAYER_FIELDS(ESIMCSE_VISIT)
#undef ESIMCSE_VISIT
    }
    f(std::string("pool_w"), self.pool_w);
    f(std::string("pool_b"), self.pool_b);
  }
};

template <typename S>
using EncoderParams = EncoderWeights<Matrix<S>>;

// Gradient of a scalar with respect to every encoder array, shape-matched.
template <typename S>
using EncoderGrads = EncoderWeights<Matrix<S>>;

template <typename S>
using EncoderVars = EncoderWeights<Var<S>>;

template <typename S>
std::vector<Matrix<S>*> arrays(EncoderParams<S>& params) {
  std::vector<Matrix<S>*> out;
  params.visit([&](const std::string&, Matrix<S>& m) { out.push_back(&m); });
  return out;
}

template <typename S>
std::vector<const Matrix<S>*> arrays(const EncoderParams<S>& params) {
  std::vector<const Matrix<S>*> out;
  params.visit([&](const std::string&, const Matrix<S>& m) { out.push_back(&m); });
  return out;
}

template <typename S>
std::vector<std::string> array_names(const EncoderParams<S>& params) {
  std::vector<std::string> out;
  params.visit([&](const std::string& name, const Matrix<S>&) { out.push_back(name); });
  return out;
}

template <typename To, typename From>
EncoderParams<To> cast_params(const EncoderParams<From>& params) {
  return params.transform([](const Matrix<From>& m) { return Matrix<To>(m.template cast<To>()); });
}

// Expected shape of every array, in declaration order.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> param_shapes(const EncoderConfig& c) {
  const Eigen::Index d = c.width;
  const Eigen::Index f = c.ffn_width;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> s = {{c.vocab_size, d}, {c.max_length, d}, {1, d}, {1, d}};
  for (int l = 0; l < c.layers; ++l) {
    const std::vector<std::pair<Eigen::Index, Eigen::Index>> layer = {
        {d, d}, {1, d}, {d, d}, {1, d}, {d, d}, {1, d}, {d, d}, {1, d},
        {1, d}, {1, d}, {d, f}, {1, f}, {f, d}, {1, d}, {1, d}, {1, d}};
    s.insert(s.end(), layer.begin(), layer.end());
  }
  s.push_back({d, d});
  s.push_back({1, d});
  return s;
}

// Weights ~ N(0, 1/fan_in), embeddings ~ N(0, 0.02^2), biases 0, norm gains 1.
template <typename S>
EncoderParams<S> init_params(const EncoderConfig& config, Rng& rng) {
  config.validate();
  auto normal = [&rng](Eigen::Index rows, Eigen::Index cols, double stddev) {
    Matrix<S> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(stddev * rng.normal());
    return m;
  };
  auto weight = [&](Eigen::Index fan_in, Eigen::Index fan_out) {
    return normal(fan_in, fan_out, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  };
  const Eigen::Index d = config.width;
  const Eigen::Index f = config.ffn_width;
  EncoderParams<S> p;
  p.token_embedding = normal(config.vocab_size, d, 0.02);
  p.position_embedding = normal(config.max_length, d, 0.02);
  p.embed_norm_gain = Matrix<S>::Ones(1, d);
  p.embed_norm_bias = Matrix<S>::Zero(1, d);
  for (int l = 0; l < config.layers; ++l) {
    LayerWeights<Matrix<S>> w;
    w.query_w = weight(d, d);
    w.query_b = Matrix<S>::Zero(1, d);
    w.key_w = weight(d, d);
    w.key_b = Matrix<S>::Zero(1, d);
    w.value_w = weight(d, d);
    w.value_b = Matrix<S>::Zero(1, d);
    w.attn_out_w = weight(d, d);
    w.attn_out_b = Matrix<S>::Zero(1, d);
    w.attn_norm_gain = Matrix<S>::Ones(1, d);
    w.attn_norm_bias = Matrix<S>::Zero(1, d);
    w.ffn_in_w = weight(d, f);
    w.ffn_in_b = Matrix<S>::Zero(1, f);
    w.ffn_out_w = weight(f, d);
    w.ffn_out_b = Matrix<S>::Zero(1, d);
    w.ffn_norm_gain = Matrix<S>::Ones(1, d);
    w.ffn_norm_bias = Matrix<S>::Zero(1, d);
    p.layers.push_back(std::move(w));
  }
  p.pool_w = weight(d, d);
  p.pool_b = Matrix<S>::Zero(1, d);
  return p;
}

template <typename S>
void check_shapes(const EncoderParams<S>& params, const EncoderConfig& config) {
  const auto expected = param_shapes(config);
  const auto got = arrays(params);
  if (got.size() != expected.size()) throw std::invalid_argument("encoder parameters: wrong array count");
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i]->rows() != expected[i].first || got[i]->cols() != expected[i].second) {
      throw std::invalid_argument("encoder parameters: shape mismatch in array " + std::to_string(i));
    }
  }
}

template <typename S>
EncoderVars<S> bind_parameters(Tape<S>& tape, const EncoderParams<S>& params) {
  return params.transform([&tape](const Matrix<S>& m) { return tape.parameter(m); });
}

template <typename S>
EncoderVars<S> bind_constants(Tape<S>& tape, const EncoderParams<S>& params) {
  return params.transform([&tape](const Matrix<S>& m) { return tape.constant(m); });
}

template <typename S>
EncoderGrads<S> gradients(const Tape<S>& tape, const EncoderVars<S>& vars) {
  return vars.transform([&tape](const Var<S>& v) { return tape.gradient(v); });
}

// Sentence embeddings (rows) for `sequences`. Each sequence becomes
// [CLS] content [SEP], content truncated to max_length - 2, padded to the
// longest in the batch; attention never looks at padding keys. With
// `dropout_on`, fresh inverted-dropout masks are drawn from `rng` for the
// attention probabilities, attention output and feed-forward output.
template <typename S>
Var<S> encode(Tape<S>& tape, const EncoderVars<S>& w, const EncoderConfig& config,
              std::span<const TokenSequence> sequences, bool dropout_on, Rng& rng) {
  if (sequences.empty()) throw std::invalid_argument("encode: empty batch");
  if (w.token_embedding.tape() != &tape) throw std::invalid_argument("encode: weights bound to another tape");
  const auto batch = static_cast<Eigen::Index>(sequences.size());
  const Eigen::Index max_content = config.max_length - 2;
  std::vector<Eigen::Index> lengths;
  Eigen::Index padded = 0;
  for (const auto& seq : sequences) {
    if (seq.size() == 0) throw std::invalid_argument("encode: sequence has no content tokens");
    lengths.push_back(std::min<Eigen::Index>(static_cast<Eigen::Index>(seq.size()), max_content) + 2);
    padded = std::max(padded, lengths.back());
  }

  std::vector<int> ids(static_cast<std::size_t>(batch * padded), kPadId);
  std::vector<int> positions(ids.size());
  std::vector<int> class_rows;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto base = static_cast<std::size_t>(b * padded);
    const auto& seq = sequences[static_cast<std::size_t>(b)];
    ids[base] = kClassId;
    for (Eigen::Index i = 0; i < lengths[b] - 2; ++i) {
      const int id = seq.ids[static_cast<std::size_t>(i)];
      if (id < 0 || id >= config.vocab_size) throw std::invalid_argument("encode: token id out of range");
      ids[base + static_cast<std::size_t>(i) + 1] = id;
    }
    ids[base + static_cast<std::size_t>(lengths[b] - 1)] = kSeparatorId;
    for (Eigen::Index i = 0; i < padded; ++i) positions[base + static_cast<std::size_t>(i)] = static_cast<int>(i);
    class_rows.push_back(static_cast<int>(base));
  }

  const double p = dropout_on ? config.dropout : 0.0;
  const Eigen::Index head_width = config.width / config.heads;
  const S score_scale = S(1) / std::sqrt(static_cast<S>(head_width));

  Var<S> x = gather_rows(w.token_embedding, ids) + gather_rows(w.position_embedding, positions);
  x = layer_norm_rows(x, w.embed_norm_gain, w.embed_norm_bias);

  for (const auto& layer : w.layers) {
    const Var<S> q = add_row(matmul(x, layer.query_w), layer.query_b);
    const Var<S> k = add_row(matmul(x, layer.key_w), layer.key_b);
    const Var<S> v = add_row(matmul(x, layer.value_w), layer.value_b);
    std::vector<Var<S>> per_sequence;
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Var<S> qb = slice_rows(q, b * padded, padded);
      const Var<S> kb = slice_rows(k, b * padded, padded);
      const Var<S> vb = slice_rows(v, b * padded, padded);
      std::vector<Var<S>> heads;
      for (Eigen::Index h = 0; h < config.heads; ++h) {
        const Eigen::Index col = h * head_width;
        Var<S> scores = scale(matmul_nt(slice_cols(qb, col, head_width), slice_cols(kb, col, head_width)), score_scale);
        Var<S> probs = dropout(masked_softmax_rows(scores, lengths[b]), p, rng);
        heads.push_back(matmul(probs, slice_cols(vb, col, head_width)));
      }
      per_sequence.push_back(concat_cols<S>(heads));
    }
    Var<S> attended = add_row(matmul(concat_rows<S>(per_sequence), layer.attn_out_w), layer.attn_out_b);
    attended = dropout(attended, p, rng);
    x = layer_norm_rows(x + attended, layer.attn_norm_gain, layer.attn_norm_bias);

    Var<S> hidden = gelu(add_row(matmul(x, layer.ffn_in_w), layer.ffn_in_b));
    Var<S> ffn = dropout(add_row(matmul(hidden, layer.ffn_out_w), layer.ffn_out_b), p, rng);
    x = layer_norm_rows(x + ffn, layer.ffn_norm_gain, layer.ffn_norm_bias);
  }

  const Var<S> pooled = gather_rows(x, class_rows);
  return tanh(add_row(matmul(pooled, w.pool_w), w.pool_b));
}

// Value-only batch encoding.
template <typename S>
Matrix<S> encode_batch(std::span<const TokenSequence> sequences, const EncoderParams<S>& params,
                       const EncoderConfig& config, bool dropout_on, Rng& rng) {
  Tape<S> tape;
  const auto vars = bind_constants(tape, params);
  return encode(tape, vars, config, sequences, dropout_on, rng).value();
}

// Encodes every sequence on its own (no padding), dropout off.
template <typename S>
Matrix<S> encode_each(std::span<const TokenSequence> sequences, const EncoderParams<S>& params,
                      const EncoderConfig& config) {
  Matrix<S> out(static_cast<Eigen::Index>(sequences.size()), config.width);
  Tape<S> tape;
  const auto vars = bind_constants(tape, params);
  Rng unused(0);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = encode(tape, vars, config, sequences.subspan(i, 1), false, unused).value();
  }
  return out;
}

template <typename S>
void adam_step(EncoderParams<S>& params, const EncoderGrads<S>& grads, AdamState<S>& state) {
  auto p = arrays(params);
  auto g = arrays(grads);
  adam_step<S>(std::span<Matrix<S>* const>(p), std::span<const Matrix<S>* const>(g), state);
}

}  // namespace esimcse
