/*
 * Copyright 2026 The Cheem Explorer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHEEM_RANDOM_HPP_
#define CHEEM_RANDOM_HPP_

#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace cheem {

// SplitMix64. The standard distributions are implementation defined, so all
// sampling here goes through the helpers below to stay bit-reproducible
// across standard libraries.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Independent stream seed for item `index` under a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 outer(seed);
  const std::uint64_t base = outer();
  SplitMix64 inner(base ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  return inner();
}

// Uniform integer in [0, bound) by rejection; bound > 0.
inline std::uint64_t uniform_index(SplitMix64& rng, std::uint64_t bound) {
  const std::uint64_t limit = SplitMix64::max() - SplitMix64::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(SplitMix64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

inline std::vector<int> random_permutation(std::size_t size, SplitMix64& rng) {
  std::vector<int> order(size);
  std::iota(order.begin(), order.end(), 0);
  shuffle(std::span<int>(order), rng);
  return order;
}

}  // namespace cheem

#endif  // CHEEM_RANDOM_HPP_
