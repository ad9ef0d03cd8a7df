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
#include <set>
#include <stdexcept>
#include <vector>

#include "esimcse/rng.hpp"

using esimcse::Rng;

TEST_CASE("rng: same seed gives the same stream") {
  Rng a(123), b(123), c(124);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    differs |= x != c.next();
  }
  CHECK(differs);
}

TEST_CASE("rng: splitmix64 reference values") {
  // First outputs of splitmix64 from state 0, as published with the algorithm.
  std::uint64_t state = 0;
  CHECK(esimcse::splitmix64(state) == 0xE220A8397B1DCDAFull);
  CHECK(esimcse::splitmix64(state) == 0x6E789E6AA1B965F4ull);
  CHECK(esimcse::splitmix64(state) == 0x06C45D188009454Full);
}

TEST_CASE("rng: uniform lies in [0, 1) with mean near 1/2") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("rng: uniform_int covers its range evenly") {
  Rng rng(9);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) ++counts[rng.uniform_int(6)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("rng: normal has unit variance") {
  Rng rng(11);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("rng: substreams ignore the parent's position") {
  Rng a(5);
  Rng before = a.substream(3);
  for (int i = 0; i < 10; ++i) a.next();
  Rng after = a.substream(3);
  std::set<std::uint64_t> firsts;
  for (int i = 0; i < 20; ++i) CHECK(before.next() == after.next());
  for (std::uint64_t id = 0; id < 50; ++id) firsts.insert(a.substream(id).next());
  CHECK(firsts.size() == 50);
}
