// Copyright 2026 The reupload Authors.
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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace reup {

/// Engine used for every random stream in the library.
using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

/**
 * Derive an independent stream seed from a root seed and a path of indices,
 * e.g. (seed, generation, individual, point). Streams keyed this way do not
 * depend on which worker thread evaluates them.
 */
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
    for (const auto p : path) {
        h = splitmix64(h ^ splitmix64(p + 0x2545f4914f6cdd1dULL));
    }
    return h;
}

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
    return Engine{derive_seed(seed, path)};
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Engine &rng) {
    return static_cast<double>(rng() >> 11U) * 0x1.0p-53;
}

inline double uniform(Engine &rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Engine &rng, std::size_t n) {
    // Lemire's multiply-shift with rejection.
    const auto range = static_cast<std::uint64_t>(n);
    std::uint64_t x = rng();
    auto m = static_cast<unsigned __int128>(x) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
        const std::uint64_t threshold = (0 - range) % range;
        while (low < threshold) {
            x = rng();
            m = static_cast<unsigned __int128>(x) * range;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64U);
}

inline bool bernoulli(Engine &rng, double p) { return uniform01(rng) < p; }

/// Fixed stream tags so different consumers of one seed never collide.
enum class Stream : std::uint64_t {
    Dataset = 1,
    Init = 2,
    Fitness = 3,
    Selection = 4,
    Crossover = 5,
    Mutation = 6,
    Objective = 7,
    Shuffle = 8,
    Landscape = 9,
    Calibration = 10,
    Analysis = 11,
    Detection = 12,
};

constexpr std::uint64_t tag(Stream s) noexcept { return static_cast<std::uint64_t>(s); }

} // namespace reup
