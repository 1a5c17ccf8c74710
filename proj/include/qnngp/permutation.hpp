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

#include <cstddef>
#include <string>
#include <vector>

namespace qnngp {

/// Partition of p, parts in non-increasing order.
using CycleType = std::vector<int>;

/// "2,1,1" style key.
std::string to_string(const CycleType &type);

/// Bijection on {0, ..., p-1}.
class Permutation {
  public:
    /// images[k] is the image of k. Throws ContractViolation unless a bijection.
    explicit Permutation(std::vector<int> images);

    static Permutation identity(int p);
    /// Swaps a and b, fixes everything else.
    static Permutation transposition(int p, int a, int b);
    /// All p! permutations in lexicographic order of their image lists.
    static std::vector<Permutation> all(int p);

    [[nodiscard]] int size() const noexcept { return static_cast<int>(images_.size()); }
    [[nodiscard]] int operator()(int k) const { return images_[static_cast<std::size_t>(k)]; }
    [[nodiscard]] const std::vector<int> &images() const noexcept { return images_; }

    /// (this * rhs)(k) = this(rhs(k)).
    [[nodiscard]] Permutation compose(const Permutation &rhs) const;
    [[nodiscard]] Permutation inverse() const;

    /// Cycles including fixed points; each starts at its smallest element and
    /// follows k -> sigma(k).
    [[nodiscard]] std::vector<std::vector<int>> cycles() const;
    [[nodiscard]] int cycle_count() const;
    [[nodiscard]] CycleType cycle_type() const;
    [[nodiscard]] bool is_identity() const noexcept;

    friend bool operator==(const Permutation &a, const Permutation &b) { return a.images_ == b.images_; }
    friend bool operator<(const Permutation &a, const Permutation &b) { return a.images_ < b.images_; }

  private:
    std::vector<int> images_;
};

} // namespace qnngp
