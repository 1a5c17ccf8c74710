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

#include "qnngp/permutation.hpp"

#include <algorithm>
#include <numeric>

#include "qnngp/errors.hpp"

namespace qnngp {

std::string to_string(const CycleType &type) {
    std::string out;
    for (std::size_t i = 0; i < type.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += std::to_string(type[i]);
    }
    return out;
}

Permutation::Permutation(std::vector<int> images) : images_(std::move(images)) {
    if (images_.empty()) {
        throw ContractViolation("permutation must act on at least one element");
    }
    std::vector<bool> seen(images_.size(), false);
    for (int v : images_) {
        if (v < 0 || static_cast<std::size_t>(v) >= images_.size() || seen[static_cast<std::size_t>(v)]) {
            throw ContractViolation("permutation images are not a bijection");
        }
        seen[static_cast<std::size_t>(v)] = true;
    }
}

Permutation Permutation::identity(int p) {
    std::vector<int> v(static_cast<std::size_t>(p));
    std::iota(v.begin(), v.end(), 0);
    return Permutation(std::move(v));
}

Permutation Permutation::transposition(int p, int a, int b) {
    Permutation id = identity(p);
    std::swap(id.images_.at(static_cast<std::size_t>(a)), id.images_.at(static_cast<std::size_t>(b)));
    return id;
}

std::vector<Permutation> Permutation::all(int p) {
    std::vector<int> v(static_cast<std::size_t>(p));
    std::iota(v.begin(), v.end(), 0);
    std::vector<Permutation> out;
    do {
        out.emplace_back(v);
    } while (std::next_permutation(v.begin(), v.end()));
    return out;
}

Permutation Permutation::compose(const Permutation &rhs) const {
    if (rhs.size() != size()) {
        throw DimensionMismatch("composing permutations of different order");
    }
    std::vector<int> v(images_.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = images_[static_cast<std::size_t>(rhs.images_[k])];
    }
    return Permutation(std::move(v));
}

Permutation Permutation::inverse() const {
    std::vector<int> v(images_.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[static_cast<std::size_t>(images_[k])] = static_cast<int>(k);
    }
    return Permutation(std::move(v));
}

std::vector<std::vector<int>> Permutation::cycles() const {
    std::vector<std::vector<int>> out;
    std::vector<bool> seen(images_.size(), false);
    for (std::size_t start = 0; start < images_.size(); ++start) {
        if (seen[start]) {
            continue;
        }
        std::vector<int> cycle;
        int k = static_cast<int>(start);
        while (!seen[static_cast<std::size_t>(k)]) {
            seen[static_cast<std::size_t>(k)] = true;
            cycle.push_back(k);
            k = images_[static_cast<std::size_t>(k)];
        }
        out.push_back(std::move(cycle));
    }
    return out;
}

int Permutation::cycle_count() const { return static_cast<int>(cycles().size()); }

CycleType Permutation::cycle_type() const {
    CycleType t;
    for (const auto &c : cycles()) {
        t.push_back(static_cast<int>(c.size()));
    }
    std::sort(t.begin(), t.end(), std::greater<>());
    return t;
}

bool Permutation::is_identity() const noexcept {
    for (std::size_t k = 0; k < images_.size(); ++k) {
        if (images_[k] != static_cast<int>(k)) {
            return false;
        }
    }
    return true;
}

} // namespace qnngp
