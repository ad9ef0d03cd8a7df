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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "esimcse/autodiff.hpp"
#include "esimcse/grad_check.hpp"
#include "oracles.hpp"

using namespace esimcse;
using M = Matrix<double>;
using V = Var<double>;
using Leaves = std::span<const V>;

namespace {

// Reduces an arbitrary-shape output to a scalar with fixed random weights so
// every output element carries a distinct gradient.
V weighted_sum(Tape<double>& tape, V x, unsigned seed = 99) {
  const M w = oracle::random_matrix(x.rows(), x.cols(), seed);
  return sum(tape.record(x.value().cwiseProduct(w), {x}, [w, x](Tape<double>& t, const M& g) {
    t.accumulate(x, g.cwiseProduct(w));
  }));
}

void check_op(std::vector<M> params, const LossBuilder& build, std::size_t samples = 64) {
  GradCheckOptions opt;
  opt.samples_per_array = samples;
  const auto report = grad_check(params, build, opt);
  INFO("max relative error " << report.max_rel_error);
  CHECK(report.ok(1e-6));
}

}  // namespace

TEST_CASE("autodiff: identity loss has unit gradient") {
  Tape<double> tape;
  M x(1, 1);
  x << 3.5;
  const V v = tape.parameter(x);
  tape.backward(v);
  CHECK(tape.gradient(v)(0, 0) == 1.0);
}

TEST_CASE("autodiff: constant loss gives zero gradients") {
  Tape<double> tape;
  const V p = tape.parameter(oracle::random_matrix(2, 3, 1));
  const V c = tape.constant(M::Constant(1, 1, 2.0));
  tape.backward(c);
  CHECK(tape.gradient(p).isZero(0.0));
}

TEST_CASE("autodiff: backward requires a scalar and a var from the same tape") {
  Tape<double> tape, other;
  const V p = tape.parameter(oracle::random_matrix(2, 2, 2));
  CHECK_THROWS_AS(tape.backward(p), std::invalid_argument);
  const V q = other.parameter(M::Ones(1, 1));
  CHECK_THROWS(tape.backward(q));
}

TEST_CASE("autodiff: sum(softmax(Wx)) matches finite differences") {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const Eigen::Index rows = 2 + seed % 4, inner = 1 + seed % 5, cols = 1 + (seed * 7) % 5;
    check_op({oracle::random_matrix(rows, inner, seed), oracle::random_matrix(inner, cols, seed + 50)},
             [](Tape<double>& t, Leaves v) { return weighted_sum(t, softmax_rows(matmul(v[0], v[1]))); });
  }
}

TEST_CASE("autodiff: every op matches finite differences") {
  const M a = oracle::random_matrix(3, 4, 1);
  const M b = oracle::random_matrix(3, 4, 2);
  const M c = oracle::random_matrix(4, 5, 3);
  const M row = oracle::random_matrix(1, 4, 4);

  SUBCASE("matmul") {
    check_op({a, c}, [](Tape<double>& t, Leaves v) { return weighted_sum(t, matmul(v[0], v[1])); });
  }
  SUBCASE("matmul_nt") {
    check_op({a, b}, [](Tape<double>& t, Leaves v) { return weighted_sum(t, matmul_nt(v[0], v[1])); });
  }
  SUBCASE("add and add_row") {
    check_op({a, b, row}, [](Tape<double>& t, Leaves v) {
      return weighted_sum(t, add_row(add(v[0], v[1]), v[2]));
    });
  }
  SUBCASE("scale") {
    check_op({a}, [](Tape<double>& t, Leaves v) { return weighted_sum(t, scale(v[0], -2.5)); });
  }
  SUBCASE("tanh") {
    check_op({a}, [](Tape<double>& t, Leaves v) { return weighted_sum(t, tanh(scale(v[0], 2.0))); });
  }
  SUBCASE("gelu") {
    check_op({a}, [](Tape<double>& t, Leaves v) { return weighted_sum(t, gelu(scale(v[0], 3.0))); });
  }
  SUBCASE("masked_softmax_rows") {
    check_op({a}, [](Tape<double>& t, Leaves v) { return weighted_sum(t, masked_softmax_rows(v[0], 2)); });
  }
  SUBCASE("softmax_cross_entropy") {
    check_op({a}, [](Tape<double>&, Leaves v) {
      const int targets[] = {0, 3, 1};
      return softmax_cross_entropy(scale(v[0], 4.0), targets);
    });
  }
  SUBCASE("layer_norm_rows") {
    check_op({a, row, oracle::random_matrix(1, 4, 5)}, [](Tape<double>& t, Leaves v) {
      return weighted_sum(t, layer_norm_rows(v[0], v[1], v[2]));
    });
  }
  SUBCASE("normalize_rows") {
    check_op({a}, [](Tape<double>& t, Leaves v) { return weighted_sum(t, normalize_rows(v[0])); });
  }
  SUBCASE("l2_norm_rows") {
    check_op({a}, [](Tape<double>& t, Leaves v) { return weighted_sum(t, l2_norm_rows(v[0])); });
  }
  SUBCASE("gather_rows with repeated ids") {
    check_op({c}, [](Tape<double>& t, Leaves v) {
      const int ids[] = {2, 0, 2, 3};
      return weighted_sum(t, gather_rows(v[0], ids));
    });
  }
  SUBCASE("slices and concatenation") {
    check_op({a, b}, [](Tape<double>& t, Leaves v) {
      const V rows[] = {slice_rows(v[0], 1, 2), v[1]};
      const V cols[] = {slice_cols(v[1], 0, 3), slice_cols(v[0], 2, 2)};
      return add(weighted_sum(t, concat_rows<double>(rows), 3), weighted_sum(t, concat_cols<double>(cols), 4));
    });
  }
  SUBCASE("sum, mean and dot") {
    check_op({a, b}, [](Tape<double>&, Leaves v) { return add(dot(v[0], v[1]), add(mean(v[0]), sum(v[1]))); });
  }
  SUBCASE("dropout with a fixed mask") {
    check_op({a}, [](Tape<double>& t, Leaves v) {
      Rng rng(17);
      return weighted_sum(t, dropout(v[0], 0.3, rng));
    });
  }
}

TEST_CASE("autodiff: shared inputs accumulate gradients") {
  check_op({oracle::random_matrix(2, 3, 8)}, [](Tape<double>& t, Leaves v) {
    return add(weighted_sum(t, add(tanh(v[0]), scale(v[0], 0.5))), weighted_sum(t, matmul_nt(v[0], v[0]), 5));
  });
}

TEST_CASE("autodiff: linear loss is exact") {
  const M w = oracle::random_matrix(1, 6, 21);
  GradCheckOptions opt;
  opt.epsilon = 1e-3;
  const auto report = grad_check(std::vector<M>{oracle::random_matrix(1, 6, 22)},
                                 [&](Tape<double>& t, Leaves v) { return dot(t.constant(w), v[0]); }, opt);
  CHECK(report.max_rel_error < 1e-12);
}

TEST_CASE("autodiff: grad_check rejects epsilon outside its range") {
  const LossBuilder build = [](Tape<double>&, Leaves v) { return sum(v[0]); };
  const std::vector<M> p{M::Ones(1, 2)};
  GradCheckOptions opt;
  opt.epsilon = 1e-2;
  CHECK_THROWS_AS(grad_check(p, build, opt), std::invalid_argument);
  opt.epsilon = 1e-9;
  CHECK_THROWS_AS(grad_check(p, build, opt), std::invalid_argument);
}

TEST_CASE("autodiff: grad_check reports non-finite perturbations") {
  const LossBuilder build = [](Tape<double>& t, Leaves v) {
    M out(1, 1);
    const double x = v[0].value()(0, 0);
    out(0, 0) = x > 0.5 ? std::numeric_limits<double>::infinity() : x;
    return t.record(out, {v[0]}, [x = v[0]](Tape<double>& tt, const M& g) { tt.accumulate(x, g); });
  };
  GradCheckOptions opt;
  opt.epsilon = 1e-3;
  const auto report = grad_check(std::vector<M>{M::Constant(1, 1, 0.5)}, build, opt);
  CHECK_FALSE(report.ok(1.0));
  CHECK(report.nonfinite.size() == 1);
}

TEST_CASE("autodiff: stable softmax and layer norm on extreme finite inputs") {
  Tape<double> tape;
  M big(2, 3);
  big << 1e300, -1e300, 0.0, 800.0, 800.0, -800.0;
  CHECK(all_finite(softmax_rows(tape.constant(big)).value()));
  const M flat = M::Constant(2, 4, 1e6);
  CHECK(all_finite(layer_norm_rows(tape.constant(flat), tape.constant(M::Ones(1, 4)),
                                   tape.constant(M::Zero(1, 4)))
                       .value()));
}

TEST_CASE("autodiff: masked softmax ignores masked columns") {
  Tape<double> tape;
  M x = oracle::random_matrix(2, 5, 30);
  const M p = masked_softmax_rows(tape.constant(x), 3).value();
  CHECK(p.rightCols(2).isZero(0.0));
  for (int r = 0; r < 2; ++r) CHECK(p.row(r).sum() == doctest::Approx(1.0).epsilon(1e-14));
  x(0, 4) = 1e9;
  CHECK(masked_softmax_rows(tape.constant(x), 3).value().row(0) == p.row(0));
}

TEST_CASE("autodiff: inverted dropout keeps the expectation and p = 0 is the identity") {
  Tape<double> tape;
  const M ones = M::Ones(200, 200);
  Rng rng(3);
  const M d = dropout(tape.constant(ones), 0.25, rng).value();
  CHECK(d.mean() == doctest::Approx(1.0).epsilon(0.01));
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double v = d.data()[i];
    REQUIRE((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15));
  }
  Rng r1(4), r2(4);
  CHECK(dropout(tape.constant(ones), 0.0, r1).value() == ones);
  CHECK(r1.next() == r2.next());
}

TEST_CASE("autodiff: normalize_rows rejects a zero row") {
  Tape<double> tape;
  CHECK_THROWS_AS(normalize_rows(tape.constant(M::Zero(1, 3))), std::domain_error);
}

TEST_CASE("autodiff: gradients are deterministic") {
  auto run = [] {
    Tape<double> tape;
    const V a = tape.parameter(oracle::random_matrix(4, 4, 40));
    Rng rng(2);
    tape.backward(sum(gelu(dropout(matmul(a, a), 0.5, rng))));
    return M(tape.gradient(a));
  };
  CHECK(run() == run());
}
