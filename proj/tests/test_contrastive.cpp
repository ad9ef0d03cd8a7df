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
#include <cstring>
#include <vector>

#include "esimcse/contrastive.hpp"
#include "esimcse/grad_check.hpp"
#include "oracles.hpp"

using namespace esimcse;
using M = Matrix<double>;

TEST_CASE("contrastive: cosine similarity") {
  RowVector<double> a(3), b(3);
  a << 1, 2, 2;
  b << 2, 1, 2;
  CHECK(cosine_sim(a, b) == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
  CHECK(cosine_sim(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  RowVector<double> x(3), y(3);
  x << 1, 0, 0;
  y << 0, 1, 0;
  CHECK(cosine_sim(x, y) == 0.0);
  CHECK_THROWS_AS(cosine_sim(x, RowVector<double>::Zero(3)), std::domain_error);
  CHECK_THROWS_AS(cosine_sim(x, RowVector<double>::Ones(4)), std::invalid_argument);
}

TEST_CASE("contrastive: single pair has zero loss") {
  LossBatch<double> batch{oracle::random_matrix(1, 5, 1), oracle::random_matrix(1, 5, 2), M(0, 5), 0.05};
  CHECK(simcse_loss(batch) == 0.0);
}

TEST_CASE("contrastive: identical embeddings give log N") {
  const M h = M::Ones(2, 4);
  LossBatch<double> batch{h, h, M(0, 4), 0.05};
  CHECK(simcse_loss(batch) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("contrastive: one orthogonal queued negative at unit temperature") {
  M h(1, 2), q(1, 2);
  h << 1, 0;
  q << 0, 1;
  LossBatch<double> batch{h, h, q, 1.0};
  const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  CHECK(esimcse_loss(batch) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(0.313262).epsilon(1e-6));
}

TEST_CASE("contrastive: matches the brute-force oracle") {
  for (unsigned seed = 0; seed < 50; ++seed) {
    const Eigen::Index n = 1 + seed % 8, m = seed % 17, d = 3 + seed % 6;
    const double tau = seed % 2 ? 0.05 : 0.5;
    LossBatch<double> batch{oracle::random_matrix(n, d, seed), oracle::random_matrix(n, d, seed + 100),
                            oracle::random_matrix(m, d, seed + 200), tau};
    const double got = esimcse_loss(batch);
    const double want = oracle::infonce(batch.first, batch.second, batch.queue, tau);
    REQUIRE(std::abs(got - want) < 1e-10);
  }
  LossBatch<double> three{oracle::random_matrix(3, 64, 1), oracle::random_matrix(3, 64, 2), M(0, 64), 0.05};
  CHECK(std::abs(simcse_loss(three) - oracle::infonce(three.first, three.second, three.queue, 0.05)) < 1e-10);
}

TEST_CASE("contrastive: empty queue reduces bitwise to the in-batch loss") {
  LossBatch<double> batch{oracle::random_matrix(6, 8, 7), oracle::random_matrix(6, 8, 8), M(0, 8), 0.05};
  const double a = esimcse_loss(batch);
  const double b = simcse_loss(batch);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  batch.queue = oracle::random_matrix(2, 8, 9);
  CHECK_THROWS_AS(simcse_loss(batch), std::invalid_argument);
}

TEST_CASE("contrastive: loss is invariant to embedding scale") {
  LossBatch<double> batch{oracle::random_matrix(4, 6, 3), oracle::random_matrix(4, 6, 4),
                          oracle::random_matrix(5, 6, 5), 0.1};
  const double base = esimcse_loss(batch);
  batch.first *= 7.0;
  batch.queue *= 0.01;
  CHECK(esimcse_loss(batch) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("contrastive: gradients match finite differences, queue gets none") {
  const M queue = oracle::random_matrix(8, 6, 12);
  const auto report = grad_check(std::vector<M>{oracle::random_matrix(4, 6, 10), oracle::random_matrix(4, 6, 11)},
                                 [&](Tape<double>&, std::span<const Var<double>> v) {
                                   return infonce_loss(v[0], v[1], queue, 0.05);
                                 });
  CHECK(report.ok(1e-6));

  Tape<double> tape;
  const auto a = tape.parameter(oracle::random_matrix(3, 6, 13));
  const auto b = tape.parameter(oracle::random_matrix(3, 6, 14));
  tape.backward(infonce_loss(a, b, queue, 0.05));
  CHECK(tape.gradient(a).norm() > 0.0);
}

TEST_CASE("contrastive: input validation") {
  Tape<double> tape;
  const auto a = tape.constant(oracle::random_matrix(3, 4, 1));
  const auto b = tape.constant(oracle::random_matrix(2, 4, 2));
  CHECK_THROWS_AS(infonce_loss(a, b, M(0, 4), 0.05), std::invalid_argument);
  CHECK_THROWS_AS(infonce_loss(a, a, M(0, 4), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(infonce_loss(a, a, oracle::random_matrix(2, 5, 3), 0.05), std::invalid_argument);
}
