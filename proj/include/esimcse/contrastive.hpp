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

// Cosine similarity and the InfoNCE objectives: in-batch negatives only, and
// in-batch plus a read-only set of queued negatives.

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "esimcse/autodiff.hpp"
#include "esimcse/tensor.hpp"

namespace esimcse {

inline constexpr double kMinEmbeddingNorm = 1e-12;

template <typename DA, typename DB>
double cosine_sim(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_sim: widths differ");
  const auto ad = a.template cast<double>();
  const auto bd = b.template cast<double>();
  const double na = ad.norm();
  const double nb = bd.norm();
  if (na <= kMinEmbeddingNorm || nb <= kMinEmbeddingNorm) {
    throw std::domain_error("cosine_sim: near-zero embedding");
  }
  // Reshape-free dot product for row or column vectors alike.
  double dot = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) dot += ad(i) * bd(i);
  return dot / (na * nb);
}

template <typename S>
struct LossBatch {
  Matrix<S> first;   // h_i, one row per sentence
  Matrix<S> second;  // h_i^+, row i is the positive of first row i
  Matrix<S> queue;   // queued negatives; zero rows disables them
  double temperature = 0.05;
};

// Mean over i of -log(exp(s_ii / t) / (sum_j exp(s_ij / t) + sum_m exp(q_im / t)))
// where s are cosine similarities between first and second views and q between
// first views and queue rows. The queue enters as a constant: no gradient
// reaches it.
template <typename S>
Var<S> infonce_loss(Var<S> first, Var<S> second, const Matrix<S>& queue, double temperature) {
  detail::same_tape(first, second);
  if (!(temperature > 0.0)) throw std::invalid_argument("infonce: temperature must be positive");
  if (first.rows() < 1 || first.rows() != second.rows() || first.cols() != second.cols()) {
    throw std::invalid_argument("infonce: both views need the same N >= 1 embeddings");
  }
  if (queue.rows() > 0 && queue.cols() != first.cols()) {
    throw std::invalid_argument("infonce: queue width differs from embedding width");
  }
  Tape<S>& tape = *first.tape();
  const S min_norm = static_cast<S>(kMinEmbeddingNorm);
  const Var<S> a = normalize_rows(first, min_norm);
  const Var<S> b = normalize_rows(second, min_norm);
  Var<S> logits = matmul_nt(a, b);
  if (queue.rows() > 0) {
    const Var<S> q = normalize_rows(tape.constant(queue), min_norm);
    const Var<S> parts[] = {logits, matmul_nt(a, q)};
    logits = concat_cols<S>(parts);
  }
  logits = scale(logits, static_cast<S>(1.0 / temperature));
  std::vector<int> targets(static_cast<std::size_t>(first.rows()));
  std::iota(targets.begin(), targets.end(), 0);
  return softmax_cross_entropy(logits, targets);
}

// Queue-extended loss value.
template <typename S>
S esimcse_loss(const LossBatch<S>& batch) {
  Tape<S> tape;
  return infonce_loss(tape.constant(batch.first), tape.constant(batch.second), batch.queue, batch.temperature)
      .value()(0, 0);
}

// In-batch loss value; the batch must carry no queue.
template <typename S>
S simcse_loss(const LossBatch<S>& batch) {
  if (batch.queue.rows() != 0) throw std::invalid_argument("simcse_loss: batch carries queued negatives");
  return esimcse_loss(batch);
}

}  // namespace esimcse
