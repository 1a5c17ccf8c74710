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
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "qnngp/linalg.hpp"
#include "qnngp/permutation.hpp"
#include "qnngp/rng.hpp"
#include "qnngp/stats.hpp"

namespace qnngp {

/// Weingarten function Wg(sigma, d) on S_p, one value per cycle type.
class WeingartenTable {
  public:
    [[nodiscard]] int p() const noexcept { return p_; }
    [[nodiscard]] std::size_t d() const noexcept { return d_; }
    [[nodiscard]] const std::map<CycleType, double> &values() const noexcept { return values_; }
    [[nodiscard]] double value(const CycleType &type) const;
    [[nodiscard]] double operator()(const Permutation &sigma) const { return value(sigma.cycle_type()); }

    /// max over sigma of |sum_tau Wg(sigma tau^-1) d^{#cycles(tau)} - delta_{sigma,e}|
    [[nodiscard]] double orthogonality_residual() const;
    [[nodiscard]] double condition_number() const noexcept { return condition_; }
    /// Built from the pseudo-inverse of a singular Gram matrix (d < p).
    [[nodiscard]] bool rank_deficient() const noexcept { return rank_deficient_; }

  private:
    friend WeingartenTable weingarten_table(int, std::size_t, bool);
    int p_ = 0;
    std::size_t d_ = 0;
    std::map<CycleType, double> values_;
    double condition_ = 1.0;
    bool rank_deficient_ = false;
};

/// Inverts the Gram matrix G_{sigma,tau} = d^{#cycles(sigma^-1 tau)} and reads
/// the identity row. d < p throws SingularGram unless allow_rank_deficient, in
/// which case the Moore-Penrose pseudo-inverse is used.
WeingartenTable weingarten_table(int p, std::size_t d, bool allow_rank_deficient = false);

/// Process-wide cache of rank-deficiency-tolerant tables; thread safe.
const WeingartenTable &cached_weingarten_table(int p, std::size_t d);

struct MomentPair {
    DensityMatrix rho;
    HermitianObservable obs;
};

/// Ordered (rho_k, O_k) pairs describing E[prod_k Tr(U rho_k U^dagger O_k)].
class MomentSpec {
  public:
    explicit MomentSpec(std::vector<MomentPair> pairs);

    [[nodiscard]] int order() const noexcept { return static_cast<int>(pairs_.size()); }
    [[nodiscard]] std::size_t dim() const noexcept { return pairs_.front().rho.dim(); }
    [[nodiscard]] const std::vector<MomentPair> &pairs() const noexcept { return pairs_; }
    [[nodiscard]] const MomentPair &operator[](std::size_t k) const { return pairs_.at(k); }
    /// Pairs whose bit is set in mask, in order.
    [[nodiscard]] MomentSpec subset(unsigned mask) const;
    /// Pair k of the result is pair sigma(k) of this spec.
    [[nodiscard]] MomentSpec relabeled(const Permutation &sigma) const;

  private:
    std::vector<MomentPair> pairs_;
};

/// Exact Haar average via the permutation-pair Weingarten sum.
double haar_expectation(const MomentSpec &spec);

/// Joint cumulant of f_1..f_p from the moments of every nonempty subset
/// (mask bit k set means f_k is included). For p = 4 the default is the Wick
/// form E1234 - E12 E34 - E13 E24 - E14 E23; full_cumulant subtracts every
/// lower partition.
double connected_from_subsets(int p, const std::function<double(unsigned)> &moment, bool full_cumulant = false);

/// Connected correlator of the full spec; order must equal spec.order().
double connected_moment(const MomentSpec &spec, int order, bool full_cumulant = false);

/// Leading large-d term: Tr(rho1 rho2) Tr(O1 O2) / d^2 for order 2; for
/// order 4 the exact Wg(e) coefficient applied to the dominant trace terms
/// (SingularGram below d = 4).
double leading_order(const MomentSpec &spec, int order);

/// Haar Monte Carlo of the raw (or connected) moment; per-sample substreams
/// ("haar-sample", s) make the result independent of thread count.
MomentEstimate monte_carlo_moment(const MomentSpec &spec, std::size_t n_samples, std::uint64_t seed,
                                  bool connected = false, bool full_cumulant = false,
                                  Execution exec = Execution::parallel);

/// Several specs of one dimension evaluated on the same unitaries.
std::vector<MomentEstimate> monte_carlo_moments(std::span<const MomentSpec> specs, std::size_t n_samples,
                                                std::uint64_t seed, bool connected = false,
                                                bool full_cumulant = false, Execution exec = Execution::parallel);

} // namespace qnngp
