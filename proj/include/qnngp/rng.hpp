// Copyright 2026 The qnngp Authors
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

#include <cstdint>
#include <random>
#include <string_view>

namespace qnngp {

/// Selects the OpenMP kernel or the serial reference loop.
enum class Execution { serial, parallel };

/// Expands a single 64-bit seed into independent named substreams.
///
/// A substream depends only on (seed, name, index), so per-sample streams give
/// identical results for any thread count or scheduling.
class SeedStream {
  public:
    explicit SeedStream(std::uint64_t seed) noexcept : seed_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    [[nodiscard]] std::uint64_t derive(std::string_view name, std::uint64_t index = 0) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : name) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        std::uint64_t x = seed_ ^ h;
        x = mix(x);
        x ^= index + 0x9e3779b97f4a7c15ULL;
        return mix(mix(x));
    }

    [[nodiscard]] std::mt19937_64 substream(std::string_view name, std::uint64_t index = 0) const {
        std::uint64_t s = derive(name, index);
        std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
        return std::mt19937_64(seq);
    }

    /// Child stream family, e.g. one per experiment cell.
    [[nodiscard]] SeedStream child(std::string_view name, std::uint64_t index = 0) const noexcept {
        return SeedStream(derive(name, index));
    }

  private:
    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

} // namespace qnngp
