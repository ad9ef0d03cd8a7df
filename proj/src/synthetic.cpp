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

#include "esimcse/synthetic.hpp"

#include <array>
#include <cmath>
#include <span>
#include <string_view>

namespace esimcse {
namespace {

constexpr std::array<std::string_view, 20> kAdjectives = {
    "old", "young", "tall", "quiet", "happy", "tired", "clever", "brave", "famous", "lonely",
    "angry", "friendly", "curious", "gentle", "busy", "proud", "nervous", "polite", "lucky", "strange"};

constexpr std::array<std::string_view, 30> kSubjects = {
    "teacher", "farmer", "doctor", "student", "pilot", "painter", "baker", "soldier", "dancer", "writer",
    "nurse", "singer", "lawyer", "driver", "gardener", "scientist", "musician", "engineer", "captain", "chef",
    "child", "woman", "man", "girl", "boy", "dog", "cat", "horse", "robot", "monkey"};

constexpr std::array<std::string_view, 25> kVerbs = {
    "found", "carried", "painted", "washed", "bought", "sold", "opened", "cleaned", "watched", "repaired",
    "dropped", "borrowed", "cooked", "hid", "lifted", "pushed", "pulled", "stole", "kicked", "touched",
    "counted", "measured", "wrapped", "chased", "ignored"};

constexpr std::array<std::string_view, 30> kObjects = {
    "ball", "letter", "box", "guitar", "bicycle", "basket", "lamp", "window", "bottle", "camera",
    "umbrella", "ladder", "blanket", "violin", "wallet", "helmet", "kettle", "mirror", "bucket", "hammer",
    "carpet", "jacket", "pillow", "notebook", "drum", "candle", "rope", "shovel", "teapot", "microscope"};

constexpr std::array<std::string_view, 20> kPlaces = {
    "in the kitchen", "in the garden", "near the river", "at the station", "in the market",
    "on the beach", "at the school", "in the forest", "near the bridge", "in the library",
    "at the airport", "in the village", "on the farm", "in the museum", "at the harbor",
    "in the park", "on the hill", "in the hospital", "at the factory", "in the desert"};

// A single meaning-free phrase repeated 0-3 times: length varies freely and
// the phrase carries no information about which sentence it belongs to.
constexpr std::string_view kFiller = "as far as we know";

// Slot weights: adjective, subject, verb, object, place.
constexpr std::array<double, 5> kSlotWeights = {0.5, 1.5, 1.0, 1.5, 0.5};
constexpr std::array<std::size_t, 5> kSlotSizes = {kAdjectives.size(), kSubjects.size(), kVerbs.size(),
                                                   kObjects.size(), kPlaces.size()};

using Slots = std::array<std::size_t, 5>;

Slots random_slots(Rng& rng) {
  Slots s{};
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::size_t>(rng.uniform_int(kSlotSizes[i]));
  return s;
}

std::string realize(const Slots& s, Rng& rng) {
  std::string out = "the ";
  out += kAdjectives[s[0]];
  out += ' ';
  out += kSubjects[s[1]];
  out += ' ';
  out += kVerbs[s[2]];
  out += " the ";
  out += kObjects[s[3]];
  out += ' ';
  out += kPlaces[s[4]];
  const auto fillers = rng.uniform_int(4);
  for (std::uint64_t i = 0; i < fillers; ++i) {
    out += ' ';
    out += kFiller;
  }
  return out;
}

}  // namespace

std::vector<std::string> synthetic_corpus(std::size_t count, Rng& rng) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Slots slots = random_slots(rng);
    out.push_back(realize(slots, rng));
  }
  return out;
}

std::vector<StsPair> synthetic_sts(std::size_t count, Rng& rng) {
  double total_weight = 0.0;
  for (double w : kSlotWeights) total_weight += w;
  std::vector<StsPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Slots a = random_slots(rng);
    Slots b = a;
    const double keep = rng.uniform();
    double shared = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (rng.uniform() >= keep) {
        // Resample to a different value so the slot really changes.
        b[k] = (a[k] + 1 + static_cast<std::size_t>(rng.uniform_int(kSlotSizes[k] - 1))) % kSlotSizes[k];
      } else {
        shared += kSlotWeights[k];
      }
    }
    StsPair pair;
    pair.first = realize(a, rng);
    pair.second = realize(b, rng);
    pair.gold = std::round(5.0 * shared / total_weight * 100.0) / 100.0;
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace esimcse
