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

// Template-generated English-like sentences and gold-scored sentence pairs for
// small end-to-end training runs.
//
// A sentence realizes five content slots (adjective, subject, verb, object,
// place) followed by one meaning-free filler phrase repeated 0-3 times. A
// pair's gold score is the weighted fraction of slots whose values agree,
// scaled to [0, 5]. Filler counts are drawn independently for each side, so
// length differences carry no signal.

#include <cstddef>
#include <string>
#include <vector>

#include "esimcse/evaluation.hpp"
#include "esimcse/rng.hpp"

namespace esimcse {

std::vector<std::string> synthetic_corpus(std::size_t count, Rng& rng);
std::vector<StsPair> synthetic_sts(std::size_t count, Rng& rng);

}  // namespace esimcse
