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

#include "qnngp/haar_moments.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>

#include "parallel.hpp"
#include "qnngp/errors.hpp"

namespace qnngp {

double WeingartenTable::value(const CycleType &type) const {
    auto it = values_.find(type);
    if (it == values_.end()) {
        throw ContractViolation("cycle type " + to_string(type) + " is not a partition of " + std::to_string(p_));
    }
    return it->second;
}

double WeingartenTable::orthogonality_residual() const {
    const auto perms = Permutation::all(p_);
    double worst = 0.0;
    for (const auto &sigma : perms) {
        double s = 0.0;
        for (const auto &tau : perms) {
            s += (*this)(sigma.compose(tau.inverse())) * std::pow(static_cast<double>(d_), tau.cycle_count());
        }
        worst = std::max(worst, std::abs(s - (sigma.is_identity() ? 1.0 : 0.0)));
    }
    return worst;
}

WeingartenTable weingarten_table(int p, std::size_t d, bool allow_rank_deficient) {
    if (p > 4) {
        throw UnsupportedOrder("Weingarten tables are limited to p <= 4");
    }
    if (p < 1 || d < 1) {
        throw InvalidDimension("Weingarten table needs p >= 1 and d >= 1");
    }
    if (static_cast<std::size_t>(p) > d && !allow_rank_deficient) {
        throw SingularGram("Gram matrix is singular for d = " + std::to_string(d) + " < p = " + std::to_string(p));
    }
    const auto perms = Permutation::all(p);
    const auto n = static_cast<Eigen::Index>(perms.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Permutation inv = perms[static_cast<std::size_t>(i)].inverse();
        for (Eigen::Index j = 0; j < n; ++j) {
            gram(i, j) = std::pow(static_cast<double>(d), inv.compose(perms[static_cast<std::size_t>(j)]).cycle_count());
        }
    }
    int rank = 0;
    const Eigen::MatrixXd inv = pinv_symmetric(gram, 1e-10, &rank);
    WeingartenTable table;
    table.p_ = p;
    table.d_ = d;
    table.rank_deficient_ = rank < n;
    if (table.rank_deficient_ && !allow_rank_deficient) {
        throw SingularGram("Gram matrix is numerically singular");
    }
    table.condition_ = table.rank_deficient_ ? std::numeric_limits<double>::infinity()
                                             : condition_number_symmetric(gram);
    // perms[0] is the identity; its row of the inverse holds Wg.
    std::map<CycleType, std::pair<double, double>> range;
    for (Eigen::Index j = 0; j < n; ++j) {
        const CycleType type = perms[static_cast<std::size_t>(j)].cycle_type();
        const double v = inv(0, j);
        auto [it, fresh] = range.try_emplace(type, v, v);
        if (!fresh) {
            it->second.first = std::min(it->second.first, v);
            it->second.second = std::max(it->second.second, v);
        }
    }
    for (const auto &[type, mm] : range) {
        const double mid = 0.5 * (mm.first + mm.second);
        if (mm.second - mm.first > 1e-12 * std::max(1.0, std::abs(mid))) {
            throw ContractViolation("Weingarten values differ within cycle type " + to_string(type));
        }
        table.values_[type] = mid;
    }
    return table;
}

const WeingartenTable &cached_weingarten_table(int p, std::size_t d) {
    static std::mutex guard;
    static std::map<std::pair<int, std::size_t>, std::unique_ptr<WeingartenTable>> cache;
    std::lock_guard<std::mutex> lock(guard);
    auto &slot = cache[{p, d}];
    if (!slot) {
        slot = std::make_unique<WeingartenTable>(weingarten_table(p, d, true));
    }
    return *slot;
}

MomentSpec::MomentSpec(std::vector<MomentPair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) {
        throw InvalidDimension("moment spec needs at least one pair");
    }
    if (pairs_.size() > 4) {
        throw UnsupportedOrder("moments are limited to p <= 4");
    }
    const std::size_t d = pairs_.front().rho.dim();
    for (const auto &pr : pairs_) {
        if (pr.rho.dim() != d || pr.obs.dim() != d) {
            throw DimensionMismatch("moment spec pairs differ in dimension");
        }
    }
}

MomentSpec MomentSpec::subset(unsigned mask) const {
    std::vector<MomentPair> out;
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
        if (mask & (1u << k)) {
            out.push_back(pairs_[k]);
        }
    }
    return MomentSpec(std::move(out));
}

MomentSpec MomentSpec::relabeled(const Permutation &sigma) const {
    if (sigma.size() != order()) {
        throw ArityError("relabeling permutation has the wrong order");
    }
    std::vector<MomentPair> out;
    for (int k = 0; k < order(); ++k) {
        out.push_back(pairs_[static_cast<std::size_t>(sigma(k))]);
    }
    return MomentSpec(std::move(out));
}

namespace {

/// prod over cycles c of pi of Tr(A_{c0} A_{pi(c0)} ...)
cplx cycle_trace(const Permutation &pi, const std::vector<const ComplexMatrix *> &a) {
    cplx out = 1.0;
    for (const auto &cyc : pi.cycles()) {
        if (cyc.size() == 1) {
            out *= a[static_cast<std::size_t>(cyc[0])]->trace();
            continue;
        }
        ComplexMatrix prod = *a[static_cast<std::size_t>(cyc[0])];
        for (std::size_t k = 1; k + 1 < cyc.size(); ++k) {
            prod = prod * *a[static_cast<std::size_t>(cyc[k])];
        }
        out *= trace_product(prod, *a[static_cast<std::size_t>(cyc.back())]);
    }
    return out;
}

void set_partitions(int p, int k, std::vector<std::vector<int>> &blocks,
                    const std::function<void(const std::vector<std::vector<int>> &)> &visit) {
    if (k == p) {
        visit(blocks);
        return;
    }
    for (auto &b : blocks) {
        b.push_back(k);
        set_partitions(p, k + 1, blocks, visit);
        b.pop_back();
    }
    blocks.push_back({k});
    set_partitions(p, k + 1, blocks, visit);
    blocks.pop_back();
}

} // namespace

double haar_expectation(const MomentSpec &spec) {
    const int p = spec.order();
    const std::size_t d = spec.dim();
    const WeingartenTable &wg = cached_weingarten_table(p, d);
    std::vector<const ComplexMatrix *> rho;
    std::vector<const ComplexMatrix *> obs;
    for (const auto &pr : spec.pairs()) {
        rho.push_back(&pr.rho.matrix());
        obs.push_back(&pr.obs.matrix());
    }
    const auto perms = Permutation::all(p);
    std::vector<cplx> t_obs;
    std::vector<cplx> t_rho;
    for (const auto &pi : perms) {
        t_obs.push_back(cycle_trace(pi, obs));
        t_rho.push_back(cycle_trace(pi.inverse(), rho));
    }
    cplx total = 0.0;
    for (std::size_t s = 0; s < perms.size(); ++s) {
        const Permutation sinv = perms[s].inverse();
        for (std::size_t t = 0; t < perms.size(); ++t) {
            total += wg(sinv.compose(perms[t])) * t_obs[s] * t_rho[t];
        }
    }
    return total.real();
}

double connected_from_subsets(int p, const std::function<double(unsigned)> &moment, bool full_cumulant) {
    if (p < 1 || p > 4) {
        throw UnsupportedOrder("connected moments are limited to 1 <= p <= 4");
    }
    auto m = [&](std::initializer_list<int> ks) {
        unsigned mask = 0;
        for (int k : ks) {
            mask |= 1u << k;
        }
        return moment(mask);
    };
    if (p == 4 && !full_cumulant) {
        return m({0, 1, 2, 3}) - m({0, 1}) * m({2, 3}) - m({0, 2}) * m({1, 3}) - m({0, 3}) * m({1, 2});
    }
    static const double factorial[] = {1.0, 1.0, 2.0, 6.0};
    double total = 0.0;
    std::vector<std::vector<int>> blocks;
    set_partitions(p, 0, blocks, [&](const std::vector<std::vector<int>> &part) {
        const std::size_t nb = part.size();
        double term = ((nb - 1) % 2 ? -1.0 : 1.0) * factorial[nb - 1];
        for (const auto &b : part) {
            unsigned mask = 0;
            for (int k : b) {
                mask |= 1u << k;
            }
            term *= moment(mask);
        }
        total += term;
    });
    return total;
}

double connected_moment(const MomentSpec &spec, int order, bool full_cumulant) {
    if (order != spec.order()) {
        throw ArityError("connected order " + std::to_string(order) + " differs from spec order " +
                         std::to_string(spec.order()));
    }
    std::map<unsigned, double> memo;
    return connected_from_subsets(
        order,
        [&](unsigned mask) {
            auto it = memo.find(mask);
            if (it == memo.end()) {
                it = memo.emplace(mask, haar_expectation(spec.subset(mask))).first;
            }
            return it->second;
        },
        full_cumulant);
}

double leading_order(const MomentSpec &spec, int order) {
    if (order != spec.order() || (order != 2 && order != 4)) {
        throw ArityError("leading order is defined for order 2 and 4 specs of matching size");
    }
    const double d = static_cast<double>(spec.dim());
    auto r = [&](int k) -> const ComplexMatrix & { return spec[static_cast<std::size_t>(k)].rho.matrix(); };
    auto o = [&](int k) -> const ComplexMatrix & { return spec[static_cast<std::size_t>(k)].obs.matrix(); };
    if (order == 2) {
        return (trace_product(r(0), r(1)) * trace_product(o(0), o(1))).real() / (d * d);
    }
    if (spec.dim() < 4) {
        throw SingularGram("order-4 leading coefficient needs d >= 4");
    }
    auto tr3 = [](const ComplexMatrix &a, const ComplexMatrix &b, const ComplexMatrix &c) {
        return trace_product(a * b, c);
    };
    auto tr4 = [](const ComplexMatrix &a, const ComplexMatrix &b, const ComplexMatrix &c, const ComplexMatrix &e) {
        return trace_product(a * b, c * e);
    };
    const double d2 = d * d;
    const double pref = (d2 * d2 - 8.0 * d2 + 6.0) / (d2 * (d2 * d2 * d2 - 14.0 * d2 * d2 + 49.0 * d2 - 36.0));
    cplx v4 = tr4(o(0), o(1), o(2), o(3)) + tr4(o(0), o(1), o(3), o(2)) + tr4(o(0), o(2), o(1), o(3)) +
              tr4(o(0), o(2), o(3), o(1)) + tr4(o(0), o(3), o(1), o(2)) + tr4(o(0), o(3), o(2), o(1));
    cplx sum = tr4(r(0), r(1), r(2), r(3)) * v4;
    sum += tr3(r(0), r(1), r(2)) * (tr3(o(1), o(2), o(0)) + tr3(o(2), o(1), o(0))) * o(3).trace();
    sum += tr3(r(0), r(1), r(3)) * (tr3(o(1), o(3), o(0)) + tr3(o(3), o(1), o(0))) * o(2).trace();
    sum += tr3(r(0), r(2), r(3)) * (tr3(o(2), o(3), o(0)) + tr3(o(3), o(2), o(0))) * o(1).trace();
    sum += tr3(r(1), r(2), r(3)) * o(0).trace() *
           (tr3(o(2), o(3), o(1)) + tr3(o(3), o(2), o(1)) - 2.0 * o(1).trace() * o(2).trace() * o(3).trace());
    return pref * sum.real();
}

std::vector<MomentEstimate> monte_carlo_moments(std::span<const MomentSpec> specs, std::size_t n_samples,
                                                std::uint64_t seed, bool connected, bool full_cumulant,
                                                Execution exec) {
    if (n_samples < 100) {
        throw InvalidDimension("Monte Carlo moments need N >= 100");
    }
    if (specs.empty()) {
        return {};
    }
    const std::size_t d = specs.front().dim();
    std::vector<std::size_t> offset;
    std::size_t cols = 0;
    for (const auto &s : specs) {
        if (s.dim() != d) {
            throw DimensionMismatch("batched specs must share a dimension");
        }
        offset.push_back(cols);
        cols += static_cast<std::size_t>(s.order());
    }
    // Scalar observables give exact constants, so O = I columns carry no roundoff.
    std::vector<const MomentPair *> pairs;
    std::vector<char> scalar;
    std::vector<double> scalar_value;
    for (const auto &s : specs) {
        for (const auto &pr : s.pairs()) {
            pairs.push_back(&pr);
            scalar.push_back(pr.obs.is_scalar() ? 1 : 0);
            scalar_value.push_back(pr.obs.scalar_value());
        }
    }
    Eigen::MatrixXd f(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(cols));
    const SeedStream seeds(seed);
    detail::for_each_index(n_samples, exec, [&](std::size_t s) {
        auto rng = seeds.substream("haar-sample", s);
        const ComplexMatrix u = sample_haar_unitary(d, rng).matrix();
        const MomentPair *last_rho_pair = nullptr;
        ComplexMatrix evolved;
        for (std::size_t c = 0; c < cols; ++c) {
            double v;
            if (scalar[c]) {
                v = scalar_value[c];
            } else {
                if (!last_rho_pair || &last_rho_pair->rho.matrix() != &pairs[c]->rho.matrix()) {
                    evolved = u * pairs[c]->rho.matrix() * u.adjoint();
                    last_rho_pair = pairs[c];
                }
                v = trace_product(evolved, pairs[c]->obs.matrix()).real();
            }
            f(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) = v;
        }
    });
    std::vector<MomentEstimate> out;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const int p = specs[k].order();
        const auto base = static_cast<Eigen::Index>(offset[k]);
        if (!connected) {
            Eigen::VectorXd prod = f.col(base);
            for (int j = 1; j < p; ++j) {
                prod.array() *= f.col(base + j).array();
            }
            out.push_back(mean_estimate(prod));
            continue;
        }
        const unsigned nmask = (1u << p) - 1;
        Eigen::MatrixXd sub(f.rows(), static_cast<Eigen::Index>(nmask));
        for (unsigned mask = 1; mask <= nmask; ++mask) {
            Eigen::VectorXd prod = Eigen::VectorXd::Ones(f.rows());
            for (int j = 0; j < p; ++j) {
                if (mask & (1u << j)) {
                    prod.array() *= f.col(base + j).array();
                }
            }
            sub.col(static_cast<Eigen::Index>(mask - 1)) = prod;
        }
        out.push_back(jackknife(sub, [&](const Eigen::VectorXd &means) {
            return connected_from_subsets(
                p, [&](unsigned mask) { return means(static_cast<Eigen::Index>(mask - 1)); }, full_cumulant);
        }));
    }
    return out;
}

MomentEstimate monte_carlo_moment(const MomentSpec &spec, std::size_t n_samples, std::uint64_t seed, bool connected,
                                  bool full_cumulant, Execution exec) {
    return monte_carlo_moments(std::span<const MomentSpec>(&spec, 1), n_samples, seed, connected, full_cumulant,
                               exec)
        .front();
}

} // namespace qnngp
