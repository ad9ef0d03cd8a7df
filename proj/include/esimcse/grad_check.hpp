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

// Central finite-difference verification of tape gradients, 64-bit only.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "esimcse/autodiff.hpp"

namespace esimcse {

struct GradCheckOptions {
  double epsilon = 1e-6;
  // Coordinates checked per array; arrays at most this large are checked fully.
  std::size_t samples_per_array = 16;
  // Lower bound on the relative-error denominator max(|analytic|, |numeric|).
  double denominator_floor = 1e-7;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  std::vector<double> max_rel_error_per_array;
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::vector<std::string> nonfinite;  // "array:index" of perturbations whose loss was not finite

  bool ok(double tolerance) const { return nonfinite.empty() && max_rel_error < tolerance; }
};

// Builds the loss on `tape` from parameter leaves, in the order of `params`.
using LossBuilder = std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

inline GradCheckReport grad_check(std::span<const Matrix<double>> params, const LossBuilder& build,
                                  const GradCheckOptions& options = {}) {
  if (!(options.epsilon >= 1e-7 && options.epsilon <= 1e-3)) {
    throw std::invalid_argument("grad_check: epsilon must lie in [1e-7, 1e-3]");
  }

  std::vector<Matrix<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> leaves;
    for (const auto& p : params) leaves.push_back(tape.parameter(p));
    const Var<double> loss = build(tape, leaves);
    tape.backward(loss);
    for (const auto& leaf : leaves) analytic.push_back(tape.gradient(leaf));
  }

  std::vector<Matrix<double>> work(params.begin(), params.end());
  auto evaluate = [&]() {
    Tape<double> tape;
    std::vector<Var<double>> leaves;
    for (const auto& p : work) leaves.push_back(tape.constant(p));
    return build(tape, leaves).value()(0, 0);
  };

  GradCheckReport report;
  Rng rng(options.seed);
  for (std::size_t a = 0; a < work.size(); ++a) {
    const auto size = static_cast<std::size_t>(work[a].size());
    std::vector<std::size_t> coords(size);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    const std::size_t take = std::min(size, options.samples_per_array);
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(coords[i], coords[i + rng.uniform_int(size - i)]);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < take; ++i) {
      double& x = work[a].data()[coords[i]];
      const double saved = x;
      x = saved + options.epsilon;
      const double plus = evaluate();
      x = saved - options.epsilon;
      const double minus = evaluate();
      x = saved;
      ++report.coordinates;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        report.nonfinite.push_back(std::to_string(a) + ":" + std::to_string(coords[i]));
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      worst = std::max(worst, relative_error(analytic[a].data()[coords[i]], numeric,
                                             options.denominator_floor));
    }
    report.max_rel_error_per_array.push_back(worst);
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  return report;
}

}  // namespace esimcse
