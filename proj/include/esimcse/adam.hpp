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

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "esimcse/tensor.hpp"

namespace esimcse {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename S>
struct AdamState {
  AdamConfig config;
  std::vector<Matrix<S>> first_moment;
  std::vector<Matrix<S>> second_moment;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(AdamConfig c) : config(c) {}
};

// One bias-corrected Adam update. Moments are created on the first call and
// must keep the same shapes afterwards.
template <typename S>
void adam_step(std::span<Matrix<S>* const> params, std::span<const Matrix<S>* const> grads,
               AdamState<S>& state) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: param/grad count differs");
  if (state.step < 0) throw std::invalid_argument("adam_step: negative step counter");
  if (state.first_moment.empty() && state.step == 0) {
    for (const Matrix<S>* p : params) {
      state.first_moment.push_back(Matrix<S>::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix<S>::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw std::invalid_argument("adam_step: state size differs");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix<S>& p = *params[i];
    const Matrix<S>& g = *grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols() || state.first_moment[i].rows() != p.rows() ||
        state.first_moment[i].cols() != p.cols()) {
      throw std::invalid_argument("adam_step: shape mismatch");
    }
  }

  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const S b1 = static_cast<S>(c.beta1);
  const S b2 = static_cast<S>(c.beta2);
  const S correction1 = static_cast<S>(1.0 - std::pow(c.beta1, t));
  const S correction2 = static_cast<S>(1.0 - std::pow(c.beta2, t));
  const S lr = static_cast<S>(c.learning_rate);
  const S eps = static_cast<S>(c.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = grads[i]->array();
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    params[i]->array() -= lr * (m / correction1) / ((v / correction2).sqrt() + eps);
  }
}

}  // namespace esimcse
