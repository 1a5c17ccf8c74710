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

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "qnngp/errors.hpp"
#include "qnngp/haar_moments.hpp"

using namespace qnngp;

namespace {

double tr(const ComplexMatrix &a) { return trace(a).real(); }

// Two-point raw moment, Weingarten coefficients written out by hand.
double two_point_closed_form(const MomentSpec &s) {
    const double d = static_cast<double>(s.dim());
    const ComplexMatrix &o1 = s[0].obs.matrix(), &o2 = s[1].obs.matrix();
    const ComplexMatrix &r1 = s[0].rho.matrix(), &r2 = s[1].rho.matrix();
    return (tr(o1) * tr(o2) * tr(r1) * tr(r2) + tr(o1 * o2) * tr(r1 * r2)) / (d * d - 1) -
           (tr(o1 * o2) * tr(r1) * tr(r2) + tr(o1) * tr(o2) * tr(r1 * r2)) / (d * d * d - d);
}

// Compact connected 2-point expression (drops the rho-trace factors).
double two_point_compact(const MomentSpec &s) {
    const double d = static_cast<double>(s.dim());
    const ComplexMatrix &o1 = s[0].obs.matrix(), &o2 = s[1].obs.matrix();
    const ComplexMatrix &r1 = s[0].rho.matrix(), &r2 = s[1].rho.matrix();
    return tr(o2 * o1) / (d - d * d * d) + tr(o2 * o1) * tr(r1 * r2) / (d * d - 1) +
           tr(o1) * tr(o2) / (d * d - 1) + tr(o1) * tr(o2) * tr(r1) * tr(r2) / (d * d);
}

MomentSpec random_spec(int p, std::size_t d, std::mt19937_64 &rng, bool traceless = false) {
    std::vector<MomentPair> pairs;
    for (int k = 0; k < p; ++k) {
        pairs.push_back({random_density_matrix(d, 1 + static_cast<std::size_t>(k) % d, rng),
                         random_hermitian(d, rng, traceless)});
    }
    return MomentSpec(std::move(pairs));
}

MomentSpec repeated(const DensityMatrix &rho, std::vector<HermitianObservable> obs) {
    std::vector<MomentPair> pairs;
    for (auto &o : obs) {
        pairs.push_back({rho, std::move(o)});
    }
    return MomentSpec(std::move(pairs));
}

} // namespace

TEST_SUITE("haar_moments") {

TEST_CASE("Weingarten values for p = 1, 2") {
    for (std::size_t d : {2u, 3u, 7u, 16u}) {
        const double dd = static_cast<double>(d);
        CHECK(weingarten_table(1, d).value({1}) == doctest::Approx(1.0 / dd).epsilon(1e-14));
        const WeingartenTable t = weingarten_table(2, d);
        CHECK(t.value({1, 1}) == doctest::Approx(1.0 / (dd * dd - 1)).epsilon(1e-12));
        CHECK(t.value({2}) == doctest::Approx(-1.0 / (dd * (dd * dd - 1))).epsilon(1e-12));
    }
}

TEST_CASE("Weingarten orthogonality and errors") {
    for (int p = 1; p <= 4; ++p) {
        for (std::size_t d : {4u, 8u, 16u}) {
            const WeingartenTable t = weingarten_table(p, d);
            CHECK(t.orthogonality_residual() < 1e-10);
            CHECK_FALSE(t.rank_deficient());
        }
    }
    CHECK(weingarten_table(4, 4).values().size() == 5);
    CHECK_THROWS_AS(weingarten_table(3, 2), SingularGram);
    CHECK_THROWS_AS(weingarten_table(5, 8), UnsupportedOrder);
    const WeingartenTable pinv = weingarten_table(4, 2, true);
    CHECK(pinv.rank_deficient());
}

TEST_CASE("Weingarten values agree with the 3-point closed form") {
    // Wg(e) = (d^2-2)/(d(d^2-1)(d^2-4)), Wg(2,1) = -1/((d^2-1)(d^2-4)), Wg(3) = 2/(d(d^2-1)(d^2-4))
    for (std::size_t d : {3u, 5u, 8u}) {
        const double x = static_cast<double>(d);
        const double den = (x * x - 1) * (x * x - 4);
        const WeingartenTable t = weingarten_table(3, d);
        CHECK(t.value({1, 1, 1}) == doctest::Approx((x * x - 2) / (x * den)).epsilon(1e-12));
        CHECK(t.value({2, 1}) == doctest::Approx(-1.0 / den).epsilon(1e-12));
        CHECK(t.value({3}) == doctest::Approx(2.0 / (x * den)).epsilon(1e-12));
    }
}

TEST_CASE("first moment is Tr(O) Tr(rho) / d") {
    auto rng = SeedStream(1).substream("p1");
    for (std::size_t d : {2u, 4u, 8u}) {
        const MomentSpec s = random_spec(1, d, rng);
        CHECK(haar_expectation(s) == doctest::Approx(tr(s[0].obs.matrix()) / static_cast<double>(d)).epsilon(1e-12));
        const MomentSpec z = random_spec(1, d, rng, true);
        CHECK(std::abs(haar_expectation(z)) < 1e-12);
    }
    CHECK_THROWS_AS(MomentSpec(std::vector<MomentPair>(5, {DensityMatrix::basis(2, 0), pauli_string("Z")})),
                    UnsupportedOrder);
}

TEST_CASE("second moment matches the closed form") {
    auto rng = SeedStream(2).substream("p2");
    for (std::size_t d : {2u, 4u, 8u, 16u}) {
        for (int k = 0; k < 20; ++k) {
            const MomentSpec s = random_spec(2, d, rng);
            CHECK(std::abs(haar_expectation(s) - two_point_closed_form(s)) < 1e-12);
        }
    }
    const MomentSpec zz = repeated(DensityMatrix::basis(2, 0), {pauli_string("Z"), pauli_string("Z")});
    CHECK(haar_expectation(zz) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("connected two-point examples") {
    const DensityMatrix zero = DensityMatrix::basis(2, 0);
    const DensityMatrix one = DensityMatrix::basis(2, 1);
    const MomentSpec same = repeated(zero, {pauli_string("Z"), pauli_string("Z")});
    CHECK(connected_moment(same, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(std::abs(connected_moment(same, 2) - haar_expectation(same)) < 1e-12);
    const MomentSpec orth({{zero, pauli_string("Z")}, {one, pauli_string("Z")}});
    CHECK(connected_moment(orth, 2) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));

    auto rng = SeedStream(3).substream("const");
    for (int p : {2, 4}) {
        std::vector<MomentPair> pairs = random_spec(p, 4, rng).pairs();
        pairs[1].obs = HermitianObservable::identity(4);
        if (p == 2) {
            CHECK(std::abs(connected_moment(MomentSpec(pairs), p)) < 1e-12);
        }
        CHECK(std::abs(connected_moment(MomentSpec(pairs), p, true)) < 1e-12);
    }
    CHECK_THROWS_AS(connected_moment(same, 4), ArityError);
}

TEST_CASE("compact connected form agrees only for traceless observables") {
    auto rng = SeedStream(4).substream("compact");
    for (std::size_t d : {2u, 4u, 8u}) {
        const MomentSpec t = random_spec(2, d, rng, true);
        CHECK(std::abs(connected_moment(t, 2) - two_point_compact(t)) < 1e-12);
    }
    // O = I + Z has trace 2 at d = 2; the compact form then misses the
    // rho-trace factors and carries the wrong sign on the product term.
    const HermitianObservable shifted(ComplexMatrix::Identity(2, 2) + pauli('Z'), "I+Z");
    const MomentSpec s = repeated(DensityMatrix::basis(2, 0), {shifted, shifted});
    const double exact = connected_moment(s, 2);
    CHECK(exact == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(two_point_compact(s) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("relabeling and unitary invariance") {
    auto rng = SeedStream(5).substream("inv");
    for (int p = 2; p <= 4; ++p) {
        const MomentSpec s = random_spec(p, 4, rng);
        const double base = haar_expectation(s);
        for (const auto &sigma : Permutation::all(p)) {
            CHECK(std::abs(haar_expectation(s.relabeled(sigma)) - base) < 1e-12);
        }
        const ComplexMatrix v = sample_haar_unitary(4, rng).matrix();
        std::vector<MomentPair> rot;
        for (const auto &pr : s.pairs()) {
            rot.push_back({DensityMatrix(v * pr.rho.matrix() * v.adjoint()),
                           HermitianObservable(v * pr.obs.matrix() * v.adjoint())});
        }
        CHECK(std::abs(haar_expectation(MomentSpec(rot)) - base) < 1e-10);
    }
}

TEST_CASE("odd moments: the one-point vanishes, the three-point need not") {
    auto rng = SeedStream(6).substream("odd");
    for (std::size_t d : {2u, 4u, 8u}) {
        CHECK(std::abs(haar_expectation(random_spec(1, d, rng, true))) < 1e-12);
    }
    const DensityMatrix psi = random_pure_state(4, rng);
    // Tr of the product of three Z-strings is nonzero, and so is the moment.
    const MomentSpec zzz = repeated(psi, {pauli_string("ZI"), pauli_string("IZ"), pauli_string("ZZ")});
    CHECK(haar_expectation(zzz) == doctest::Approx(1.0 / 15.0).epsilon(1e-12));
    const MomentEstimate mc = monte_carlo_moment(zzz, 100000, 61);
    CHECK(std::abs(z_score(mc, 1.0 / 15.0)) < 4.0);
    CHECK(std::abs(mc.value) / mc.std_error > 4.0);
    // XI anticommutes with all three observables: U -> U XI flips every sign.
    const MomentSpec flip = repeated(psi, {pauli_string("ZI"), pauli_string("ZZ"), pauli_string("ZX")});
    CHECK(std::abs(haar_expectation(flip)) < 1e-12);
}

TEST_CASE("leading-order two-point") {
    const MomentSpec same = repeated(DensityMatrix::basis(2, 0), {pauli_string("Z"), pauli_string("Z")});
    CHECK(leading_order(same, 2) == doctest::Approx(0.5));
    const MomentSpec orth = repeated(DensityMatrix::basis(4, 0), {pauli_string("ZI"), pauli_string("IZ")});
    CHECK(leading_order(orth, 2) == 0.0);
    // The relative gap shrinks like 1/d.
    double prev = 1e300;
    for (int n = 1; n <= 5; ++n) {
        std::string z(static_cast<std::size_t>(n), 'I');
        z[0] = 'Z';
        const MomentSpec s = repeated(DensityMatrix::basis(std::size_t(1) << n, 0), {pauli_string(z), pauli_string(z)});
        const double gap = std::abs(connected_moment(s, 2) - leading_order(s, 2)) / std::abs(connected_moment(s, 2));
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("leading-order four-point against the exact value") {
    const auto z0 = [](int n) {
        std::string z(static_cast<std::size_t>(n), 'I');
        z[0] = 'Z';
        return pauli_string(z);
    };
    CHECK_THROWS_AS(leading_order(MomentSpec(std::vector<MomentPair>(4, {DensityMatrix::basis(2, 0), z0(1)})), 4),
                    SingularGram);
    double prev = -1e300;
    for (int n = 2; n <= 5; ++n) {
        const std::size_t d = std::size_t(1) << n;
        const MomentSpec s(std::vector<MomentPair>(4, {DensityMatrix::basis(d, 0), z0(n)}));
        const double dd = static_cast<double>(d);
        const double exact = connected_moment(s, 4);
        CHECK(exact == doctest::Approx(-6.0 / ((dd + 1) * (dd + 1) * (dd + 3))).epsilon(1e-12));
        // opposite sign, ratio creeping towards -1 from below
        const double ratio = leading_order(s, 4) / exact;
        CHECK(ratio < -1.0);
        CHECK(ratio > prev);
        prev = ratio;
    }
    CHECK(prev == doctest::Approx(-1.17).epsilon(0.01));
}

TEST_CASE("Monte Carlo estimates") {
    const MomentSpec ones = repeated(DensityMatrix::basis(4, 0), {HermitianObservable::identity(4),
                                                                 HermitianObservable::identity(4)});
    const MomentEstimate e = monte_carlo_moment(ones, 500, 1);
    CHECK(e.value == 1.0);
    CHECK(e.std_error == 0.0);

    const MomentSpec zz = repeated(DensityMatrix::basis(2, 0), {pauli_string("Z"), pauli_string("Z")});
    CHECK(std::abs(z_score(monte_carlo_moment(zz, 100000, 2), 1.0 / 3.0)) < 4.0);
    CHECK(std::abs(z_score(monte_carlo_moment(zz, 100000, 3, true), 1.0 / 3.0)) < 4.0);

    std::vector<double> logn, logse;
    for (std::size_t n = 1000; n <= 32000; n *= 2) {
        const MomentEstimate m = monte_carlo_moment(zz, n, 4);
        logn.push_back(static_cast<double>(n));
        logse.push_back(m.std_error);
    }
    CHECK(loglog_fit(logn, logse).slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("Monte Carlo serial and parallel are bitwise identical") {
    auto rng = SeedStream(7).substream("par");
    std::vector<MomentSpec> specs{random_spec(2, 4, rng), random_spec(4, 4, rng, true)};
    for (bool connected : {false, true}) {
        const auto s = monte_carlo_moments(specs, 400, 5, connected, false, Execution::serial);
        const auto p = monte_carlo_moments(specs, 400, 5, connected, false, Execution::parallel);
        for (std::size_t k = 0; k < specs.size(); ++k) {
            CHECK(s[k].value == p[k].value);
            CHECK(s[k].std_error == p[k].std_error);
        }
    }
}

TEST_CASE("pseudo-inverse Weingarten values still integrate correctly for d < p") {
    auto rng = SeedStream(8).substream("pinv");
    for (int p : {3, 4}) {
        const MomentSpec s = random_spec(p, 2, rng);
        CHECK(std::abs(z_score(monte_carlo_moment(s, 100000, 9), haar_expectation(s))) < 4.0);
    }
}

} // TEST_SUITE
