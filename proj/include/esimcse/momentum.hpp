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

#include <deque>
#include <span>
#include <stdexcept>

#include "esimcse/encoder.hpp"

namespace esimcse {

// Exponential-moving-average shadow of the encoder parameters.
template <typename S>
struct MomentumState {
  EncoderParams<S> params;
  double lambda = 0.995;

  MomentumState() = default;
  // Starts as an exact copy of `encoder`.
  MomentumState(const EncoderParams<S>& encoder, double coefficient) : params(encoder), lambda(coefficient) {
    if (!(coefficient >= 0.0 && coefficient < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  }
};

// params <- lambda * params + (1 - lambda) * encoder, every array.
template <typename S>
void ema_update(MomentumState<S>& state, const EncoderParams<S>& encoder) {
  auto shadow = arrays(state.params);
  const auto live = arrays(encoder);
  if (shadow.size() != live.size()) throw std::invalid_argument("ema_update: parameter sets differ");
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    if (shadow[i]->rows() != live[i]->rows() || shadow[i]->cols() != live[i]->cols()) {
      throw std::invalid_argument("ema_update: shape mismatch");
    }
  }
  if (state.lambda == 0.0) {
    for (std::size_t i = 0; i < shadow.size(); ++i) *shadow[i] = *live[i];
    return;
  }
  // Written as a step toward the encoder so equal arrays stay bit-identical.
  const S take = static_cast<S>(1.0 - state.lambda);
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    *shadow[i] += take * (*live[i] - *shadow[i]);
  }
}

// Fixed-capacity FIFO of detached sentence embeddings, oldest first.
template <typename S>
class EmbeddingQueue {
 public:
  EmbeddingQueue(std::size_t capacity, Eigen::Index width) : capacity_(capacity), width_(width) {
    if (capacity == 0) throw std::invalid_argument("queue capacity must be positive");
    if (width <= 0) throw std::invalid_argument("queue width must be positive");
  }

  // Appends the rows of `batch` in order and returns the rows evicted to stay
  // within capacity, oldest first.
  Matrix<S> enqueue(const Matrix<S>& batch) {
    if (batch.rows() > 0 && batch.cols() != width_) throw std::invalid_argument("enqueue: width mismatch");
    for (Eigen::Index r = 0; r < batch.rows(); ++r) rows_.push_back(batch.row(r));
    const std::size_t excess = rows_.size() > capacity_ ? rows_.size() - capacity_ : 0;
    Matrix<S> evicted(static_cast<Eigen::Index>(excess), width_);
    for (std::size_t i = 0; i < excess; ++i) {
      evicted.row(static_cast<Eigen::Index>(i)) = rows_.front();
      rows_.pop_front();
    }
    return evicted;
  }

  Matrix<S> entries() const {
    Matrix<S> out(static_cast<Eigen::Index>(rows_.size()), width_);
    for (std::size_t i = 0; i < rows_.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows_[i];
    return out;
  }

  std::size_t size() const { return rows_.size(); }
  std::size_t capacity() const { return capacity_; }
  Eigen::Index width() const { return width_; }

 private:
  std::size_t capacity_;
  Eigen::Index width_;
  std::deque<RowVector<S>> rows_;
};

// Shadow-encoder embeddings with dropout off; plain values, so nothing
// recorded here can receive a gradient.
template <typename S>
Matrix<S> momentum_encode(std::span<const TokenSequence> sequences, const MomentumState<S>& state,
                          const EncoderConfig& config) {
  Rng unused(0);
  return encode_batch(sequences, state.params, config, false, unused);
}

}  // namespace esimcse
