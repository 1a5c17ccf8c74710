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

// Acceptance suite. One PASS/FAIL line per criterion; extra lines prefixed
// with "  diag" break a criterion down where that helps reading a failure.
//
//   acceptance            run everything
//   acceptance --only N   run criterion N

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qnngp/circuit.hpp"
#include "qnngp/gp_inference.hpp"
#include "qnngp/haar_moments.hpp"
#include "qnngp/near_gaussian.hpp"
#include "qnngp/qntk.hpp"
#include "qnngp/stats.hpp"
#include "support/quadrature.hpp"

using namespace qnngp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void diag(bool ok, const char *fmt, ...) __attribute__((format(printf, 2, 3)));
void diag(bool ok, const char *fmt, ...) {
    std::printf("  diag %s ", ok ? "PASS" : "FAIL");
    va_list ap;
    va_start(ap, fmt);
    std::vprintf(fmt, ap);
    va_end(ap);
    std::printf("\n");
}

double tr(const ComplexMatrix &a) { return trace(a).real(); }

std::string z_on_first(int n) {
    std::string z(static_cast<std::size_t>(n), 'I');
    z[0] = 'Z';
    return z;
}

HermitianObservable hs_normalized(const HermitianObservable &o) {
    return HermitianObservable(o.matrix() / std::sqrt(static_cast<double>(o.dim())), o.label() + "/sqrt(d)");
}

// ---------------------------------------------------------------- 1
bool criterion_1(std::string &detail) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int p = 1; p <= 4; ++p) {
        for (std::size_t d : {4u, 8u, 16u}) {
            worst = std::max(worst, weingarten_table(p, d).orthogonality_residual());
        }
    }
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "max orthogonality residual %.2e (< 1e-10), %.3f s (< 1 s)", worst, secs);
    detail = buf;
    return worst < 1e-10 && secs < 1.0;
}

// ---------------------------------------------------------------- 2
double two_point_closed_form(const MomentSpec &s) {
    const double d = static_cast<double>(s.dim());
    const ComplexMatrix &o1 = s[0].obs.matrix(), &o2 = s[1].obs.matrix();
    const ComplexMatrix &r1 = s[0].rho.matrix(), &r2 = s[1].rho.matrix();
    return (tr(o1) * tr(o2) * tr(r1) * tr(r2) + tr(o1 * o2) * tr(r1 * r2)) / (d * d - 1) -
           (tr(o1 * o2) * tr(r1) * tr(r2) + tr(o1) * tr(o2) * tr(r1 * r2)) / (d * d * d - d);
}

bool criterion_2(std::string &detail) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::size_t d : {2u, 4u, 8u, 16u}) {
        auto rng = SeedStream(2002).substream("c2", d);
        for (int k = 0; k < 100; ++k) {
            const std::size_t rank = 1 + static_cast<std::size_t>(k) % d;
            const MomentSpec s({{random_density_matrix(d, rank, rng), random_hermitian(d, rng)},
                                {random_density_matrix(d, 1 + rank % d, rng), random_hermitian(d, rng)}});
            worst = std::max(worst, std::abs(haar_expectation(s) - two_point_closed_form(s)));
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "max |analytic - closed form| %.2e (< 1e-12) over 400 draws, %.2f s", worst,
                  seconds_since(t0));
    detail = buf;
    return worst < 1e-12;
}

// ---------------------------------------------------------------- 3
bool criterion_3(std::string &detail) {
    const auto t0 = Clock::now();
    const std::size_t n_samples = 100000;
    double worst = 0.0;
    int failures = 0;
    int total = 0;
    for (int n = 1; n <= 3; ++n) {
        const std::size_t d = std::size_t(1) << n;
        auto rng = SeedStream(3003).substream("c3-specs", static_cast<std::uint64_t>(n));
        std::vector<MomentSpec> specs;
        for (int p = 1; p <= 4; ++p) {
            for (int k = 0; k < 10; ++k) {
                std::vector<MomentPair> pairs;
                for (int j = 0; j < p; ++j) {
                    const DensityMatrix rho = (k + j) % 3 == 0 ? random_density_matrix(d, d, rng)
                                                               : random_pure_state(d, rng);
                    pairs.push_back({rho, random_hermitian(d, rng, k % 2 == 0)});
                }
                specs.emplace_back(std::move(pairs));
            }
        }
        const auto mc = monte_carlo_moments(specs, n_samples, SeedStream(3003).derive("c3-mc", n));
        double worst_n = 0.0;
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const double z = std::abs(z_score(mc[s], haar_expectation(specs[s])));
            worst_n = std::max(worst_n, z);
            failures += z >= 4.0;
            ++total;
        }
        diag(worst_n < 4.0, "n=%d: max |z| %.2f over 40 specs", n, worst_n);
        worst = std::max(worst, worst_n);
    }
    const double secs = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof buf, "max |z| %.2f (< 4) over %d specs at N=1e5, %d outside; %.1f s (<= 600 s)", worst,
                  total, failures, secs);
    detail = buf;
    return failures == 0 && secs <= 600.0;
}

// ---------------------------------------------------------------- 4
bool criterion_4(std::string &detail) {
    std::vector<double> ds, gaps;
    bool monotone = true;
    auto rng = SeedStream(4004).substream("c4");
    for (int n = 1; n <= 6; ++n) {
        const std::size_t d = std::size_t(1) << n;
        // product of single-qubit pure states, shared by both points
        ComplexMatrix psi = ComplexMatrix::Ones(1, 1);
        for (int q = 0; q < n; ++q) {
            psi = kron(psi, random_pure_vector(2, rng));
        }
        const DensityMatrix rho = DensityMatrix::pure(psi.col(0));
        const HermitianObservable o = pauli_string(z_on_first(n));
        const MomentSpec s({{rho, o}, {rho, o}});
        const double exact = connected_moment(s, 2);
        const double lead = leading_order(s, 2);
        const double gap = std::abs(exact - lead) / std::abs(exact);
        if (!gaps.empty() && gap >= gaps.back()) {
            monotone = false;
        }
        ds.push_back(static_cast<double>(d));
        gaps.push_back(gap);
        diag(true, "d=%zu: exact %.6e leading %.6e relative gap %.4e", d, exact, lead, gap);
    }
    const LinearFit fit = loglog_fit(ds, gaps);
    char buf[160];
    std::snprintf(buf, sizeof buf, "relative gap monotone: %s, log-log slope %.3f (target -1 +- 0.3)",
                  monotone ? "yes" : "no", fit.slope);
    detail = buf;
    return monotone && std::abs(fit.slope + 1.0) <= 0.3;
}

// ---------------------------------------------------------------- 5
bool criterion_5(std::string &detail) {
    std::vector<double> ds, mags;
    for (int n = 1; n <= 5; ++n) {
        const std::size_t d = std::size_t(1) << n;
        const HermitianObservable o = hs_normalized(pauli_string(z_on_first(n)));
        const MomentSpec s(std::vector<MomentPair>(4, {DensityMatrix::basis(d, 0), o}));
        const double k4 = connected_moment(s, 4);
        ds.push_back(static_cast<double>(d));
        mags.push_back(std::abs(k4));
        diag(true, "d=%zu: connected four-point %.6e", d, k4);
    }
    const LinearFit fit = loglog_fit(ds, mags);
    char buf[160];
    std::snprintf(buf, sizeof buf, "log-log slope of |connected 4-point| %.3f (target -4 +- 0.5), Tr(O^2) = 1", fit.slope);
    detail = buf;
    return std::abs(fit.slope + 4.0) <= 0.5;
}

// ---------------------------------------------------------------- 6
bool criterion_6(std::string &detail) {
    const auto t0 = Clock::now();
    const std::size_t n_samples = 10000;
    const std::vector<int> widths{2, 4};
    const std::vector<std::size_t> depths{2, 8, 32};
    // cell -> label -> estimate
    std::map<std::pair<int, std::size_t>, std::map<std::string, KurtosisEstimate>> cells;
    for (int n : widths) {
        const std::size_t d = std::size_t(1) << n;
        const std::vector<DensityMatrix> states{DensityMatrix::basis(d, 0)};
        const ObservableSet obs = ObservableSet::z_strings(n);
        for (std::size_t l : depths) {
            const OutputTable t = sample_outputs({n, l}, states, obs, n_samples,
                                                 SeedStream(6006).derive("c6", static_cast<std::uint64_t>(n * 100) + l));
            for (std::size_t c = 0; c < t.labels.size(); ++c) {
                cells[{n, l}][t.labels[c]] = excess_kurtosis(t.values.col(static_cast<Eigen::Index>(c)));
            }
        }
    }
    auto inversions_ok = [](const std::vector<KurtosisEstimate> &seq, int &inv) {
        int count = 0;
        bool within = true;
        for (std::size_t k = 1; k < seq.size(); ++k) {
            const double a = std::abs(seq[k - 1].value), b = std::abs(seq[k].value);
            if (b > a) {
                ++count;
                within = within && (b - a) <= 2.0 * std::hypot(seq[k - 1].std_error, seq[k].std_error);
            }
        }
        inv = count;
        return count <= 1 && within;
    };
    bool order_ok = true;
    for (int n : widths) {
        for (const auto &[label, est] : cells[{n, depths.front()}]) {
            std::vector<KurtosisEstimate> seq;
            for (std::size_t l : depths) {
                seq.push_back(cells[{n, l}][label]);
            }
            int inv = 0;
            const bool ok = inversions_ok(seq, inv);
            order_ok = order_ok && ok;
            diag(ok, "n=%d %s: |k| over L=2,8,32: %.3f %.3f %.3f (SE %.3f), %d inversions", n, label.c_str(),
                 std::abs(seq[0].value), std::abs(seq[1].value), std::abs(seq[2].value), seq[2].std_error, inv);
        }
    }
    // Along n, compare the observables that exist at every width: Z on the first qubit and the full parity.
    for (std::size_t l : depths) {
        for (const bool parity : {false, true}) {
            std::vector<KurtosisEstimate> seq;
            for (int n : widths) {
                seq.push_back(cells[{n, l}][parity ? std::string(static_cast<std::size_t>(n), 'Z') : z_on_first(n)]);
            }
            int inv = 0;
            const bool ok = inversions_ok(seq, inv);
            order_ok = order_ok && ok;
            diag(ok, "L=%zu %s: |k| over n=2,4: %.3f %.3f", l, parity ? "parity" : "first-qubit Z",
                 std::abs(seq[0].value), std::abs(seq[1].value));
        }
    }
    double worst = 0.0;
    for (const auto &[label, est] : cells[{4, 32}]) {
        worst = std::max(worst, std::abs(est.value));
    }
    const double secs = seconds_since(t0);
    const bool small = worst < 0.2;
    diag(small, "n=4 L=32: max |excess kurtosis| %.3f (target < 0.2; Haar value -6/(d+3) = %.3f)", worst, -6.0 / 19.0);
    char buf[220];
    std::snprintf(buf, sizeof buf, "ordering %s, max |k| at (4,32) %.3f (< 0.2), %.0f s (<= 900 s)",
                  order_ok ? "holds" : "violated", worst, secs);
    detail = buf;
    return order_ok && small && secs <= 900.0;
}

// ---------------------------------------------------------------- 7
bool criterion_7(std::string &detail) {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto rng = SeedStream(7007).substream("c7", static_cast<std::uint64_t>(trial));
        const std::size_t n_out = 1 + static_cast<std::size_t>(trial % 2);
        const std::size_t n_obs = 1 + static_cast<std::size_t>(trial) % (8 / n_out);
        const std::size_t n_pred = 2;
        const RandomCircuit rc = random_circuit(2, 16, rng);
        std::vector<DensityMatrix> states;
        for (std::size_t a = 0; a < n_obs + n_pred; ++a) {
            states.push_back(random_pure_state(4, rng));
        }
        const ObservableSet obs = n_out == 1 ? ObservableSet({pauli_string("ZI")})
                                             : ObservableSet({pauli_string("ZI"), pauli_string("IZ")});
        const Eigen::MatrixXd q = qntk(rc.spec, rc.theta, states, obs);
        const Eigen::MatrixXd f0 = model_outputs(build_unitary(rc.spec, rc.theta).matrix(), states, obs);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        Eigen::MatrixXd y(static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(n_obs));
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            y.data()[i] = u(rng);
        }
        const LinearizedPrediction lin =
            linearized_dynamics(q, f0, y, 0.01, std::numeric_limits<double>::infinity(), n_obs);
        ObservedSet observed{std::vector<DensityMatrix>(states.begin(), states.begin() + static_cast<long>(n_obs)), y};
        PredictionSet predicted{std::vector<DensityMatrix>(states.begin() + static_cast<long>(n_obs), states.end())};
        const GPPosterior post = gp_posterior(KernelMatrix::from_dense(q, n_out, states.size()), observed, predicted, 0.0);
        worst = std::max(worst, (post.mean - lin.mean).cwiseAbs().maxCoeff());
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "max |GP mean - linearized t=inf mean| %.2e (< 1e-10) over 20 problems", worst);
    detail = buf;
    return worst < 1e-10;
}

// ---------------------------------------------------------------- 8
// Relative deviation ||f_GD(t) - f_lin(t)|| / ||f_lin(t)|| for t = 1..steps.
std::vector<double> lazy_deviation(std::size_t depth, std::uint64_t seed) {
    auto rng = SeedStream(8008).substream("c8", seed);
    const RandomCircuit rc = random_circuit(2, depth, rng);
    ObservedSet data{{random_pure_state(4, rng), random_pure_state(4, rng)}, Eigen::MatrixXd(1, 2)};
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    data.labels << u(rng), u(rng);
    const ObservableSet obs({pauli_string("ZI")});
    const double eta = 0.01;
    const std::size_t steps = 100;
    const TrainingTrajectory traj = gradient_descent_train(rc.spec, rc.theta, data, obs, eta, steps);
    const Eigen::MatrixXd q = qntk(rc.spec, rc.theta, data.states, obs);
    std::vector<double> dev;
    for (std::size_t t = 1; t < traj.f.size(); ++t) {
        const LinearizedPrediction lin =
            linearized_dynamics(q, traj.f.front(), data.labels, eta, static_cast<double>(t), 2);
        dev.push_back((traj.f[t] - lin.observed).norm() / lin.observed.norm());
    }
    return dev;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// The median runs over all (seed, step) pairs. Aggregating each seed by its
// worst step first is reported alongside; it is dominated by steps where
// ||f_lin|| passes close to zero.
bool criterion_8(std::string &detail) {
    std::vector<double> medians;
    bool decreasing = true;
    for (std::size_t depth : {8u, 16u, 32u, 48u}) {
        std::vector<double> pooled, worst, per_seed;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const std::vector<double> dev = lazy_deviation(depth, s);
            pooled.insert(pooled.end(), dev.begin(), dev.end());
            worst.push_back(*std::max_element(dev.begin(), dev.end()));
            per_seed.push_back(median(dev));
        }
        const double med = median(pooled);
        if (!medians.empty() && med >= medians.back()) {
            decreasing = false;
        }
        medians.push_back(med);
        diag(true, "L=%zu: median over 20 seeds x 100 steps %.4e; median of per-seed max %.4e; median of per-seed median %.4e",
             depth, med, median(worst), median(per_seed));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "medians decreasing in L: %s, L=48 median %.4f (< 0.05)", decreasing ? "yes" : "no",
                  medians.back());
    detail = buf;
    return decreasing && medians.back() < 0.05;
}

// ---------------------------------------------------------------- 9
// The closed form is an average over Haar-random W's, so the Monte Carlo here
// draws every W as a d x d Haar unitary (gate order as in build_unitary).
RandomCircuit haar_layered_circuit(int n, std::size_t depth, std::mt19937_64 &rng) {
    const std::size_t d = std::size_t(1) << n;
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < depth; ++l) {
        layers.emplace_back(sample_haar_unitary(d, rng), layer_generator(n, l));
    }
    CircuitSpec spec(n, std::move(layers));
    ParameterVector theta = draw_parameters(depth, rng);
    return {std::move(spec), std::move(theta)};
}

bool criterion_9(std::string &detail) {
    const std::size_t n_samples = 10000;
    const std::size_t depth = 4;
    const auto L = static_cast<Eigen::Index>(depth);
    bool all = true;
    int outside = 0;
    int entries = 0;
    for (int n = 1; n <= 3; ++n) {
        const std::size_t d = std::size_t(1) << n;
        auto rng = SeedStream(9009).substream("c9-states", static_cast<std::uint64_t>(n));
        const DensityMatrix ra = DensityMatrix::basis(d, 0);
        const DensityMatrix rb = random_pure_state(d, rng);
        const std::vector<DensityMatrix> states{ra, rb};
        const HermitianObservable o = pauli_string(z_on_first(n));
        const ObservableSet obs({o});
        // per-sample H entries for (a, b) in {(0,0), (0,1)} and every (mu, nu)
        Eigen::MatrixXd samples(static_cast<Eigen::Index>(n_samples), 2 * L * L);
        const SeedStream seeds(SeedStream(9009).derive("c9-mc", static_cast<std::uint64_t>(n)));
        for (std::size_t s = 0; s < n_samples; ++s) {
            auto r = seeds.substream("circuit-sample", s);
            const RandomCircuit rc = haar_layered_circuit(n, depth, r);
            const GradientTensor g = parameter_shift_gradient(rc.spec, rc.theta, states, obs,
                                                              GradientMethod::parameter_shift, Execution::serial);
            for (Eigen::Index mu = 0; mu < L; ++mu) {
                for (Eigen::Index nu = 0; nu < L; ++nu) {
                    const auto m = static_cast<std::size_t>(mu), v = static_cast<std::size_t>(nu);
                    samples(static_cast<Eigen::Index>(s), mu * L + nu) = g(0, 0, m) * g(0, 0, v);
                    samples(static_cast<Eigen::Index>(s), L * L + mu * L + nu) = g(0, 0, m) * g(0, 1, v);
                }
            }
        }
        for (int pair = 0; pair < 2; ++pair) {
            for (Eigen::Index mu = 0; mu < L; ++mu) {
                for (Eigen::Index nu = mu; nu < L; ++nu) {
                    const MomentEstimate e = mean_estimate(samples.col(pair * L * L + mu * L + nu));
                    const double closed = haar_averaged_qntk(o, o, ra, pair ? rb : ra,
                                                             layer_generator(n, static_cast<std::size_t>(mu)),
                                                             layer_generator(n, static_cast<std::size_t>(nu)));
                    const double gap = std::abs(e.value - closed);
                    const bool ok = gap < 4.0 * e.std_error || gap < 1e-12;
                    all = all && ok;
                    outside += !ok;
                    ++entries;
                    diag(ok, "n=%d %s mu=%ld nu=%ld%s: MC %.5e +- %.1e, closed form %.5e", n,
                         pair ? "(a,b) overlap<1" : "(a,a)", static_cast<long>(mu), static_cast<long>(nu),
                         (mu != nu && (mu - nu) % n == 0) ? " same wire" : "", e.value, e.std_error, closed);
                }
            }
        }
    }
    // Depth sum: sum_mu E[H_mu,mu] against L.
    std::vector<double> ls, sums;
    for (std::size_t depth_l : {4u, 8u, 16u, 32u}) {
        const std::vector<DensityMatrix> states{DensityMatrix::basis(4, 0)};
        const ObservableSet obs({pauli_string("ZI")});
        Eigen::VectorXd tr_h(2000);
        const SeedStream seeds(SeedStream(9009).derive("c9-depth", depth_l));
        for (Eigen::Index s = 0; s < tr_h.size(); ++s) {
            auto r = seeds.substream("circuit-sample", static_cast<std::uint64_t>(s));
            const RandomCircuit rc = haar_layered_circuit(2, depth_l, r);
            tr_h(s) = parameter_shift_gradient(rc.spec, rc.theta, states, obs).jacobian().squaredNorm();
        }
        const MomentEstimate e = mean_estimate(tr_h);
        ls.push_back(static_cast<double>(depth_l));
        sums.push_back(e.value);
        diag(true, "L=%zu: sum_mu E[H_mu,mu] = %.4f +- %.4f", depth_l, e.value, e.std_error);
    }
    const LinearFit fit = loglog_fit(ls, sums);
    const bool linear = std::abs(fit.slope - 1.0) <= 0.1;
    diag(linear, "depth-sum log-log slope %.3f (target 1 +- 0.1)", fit.slope);
    char buf[200];
    std::snprintf(buf, sizeof buf, "%d of %d entries outside 4 SE; depth-sum slope %.3f", outside, entries, fit.slope);
    detail = buf;
    return all && linear;
}

// ---------------------------------------------------------------- 10
bool criterion_10(std::string &detail) {
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        auto rng = SeedStream(1010).substream("c10", static_cast<std::uint64_t>(k));
        const int n = 1 + k % 4;
        const std::size_t depth = 1 + static_cast<std::size_t>(k) % 12;
        const RandomCircuit rc = random_circuit(n, depth, rng);
        const std::vector<DensityMatrix> states{random_pure_state(rc.spec.dim(), rng),
                                                random_density_matrix(rc.spec.dim(), 2, rng)};
        const ObservableSet obs = ObservableSet::z_strings(n);
        const GradientTensor ps = parameter_shift_gradient(rc.spec, rc.theta, states, obs);
        const GradientTensor fd =
            parameter_shift_gradient(rc.spec, rc.theta, states, obs, GradientMethod::central_difference);
        worst = std::max(worst, (ps.jacobian() - fd.jacobian()).cwiseAbs().maxCoeff());
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "max |parameter shift - 5-point difference| %.2e (< 1e-6) over 50 circuits", worst);
    detail = buf;
    return worst < 1e-6;
}

// ---------------------------------------------------------------- 11
std::vector<double> rank_two_quartic(const Eigen::Vector2d &u, const Eigen::Vector2d &w) {
    std::vector<double> raw(16);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d)
                    raw[static_cast<std::size_t>(((a * 2 + b) * 2 + c) * 2 + d)] =
                        u(a) * u(b) * u(c) * u(d) + w(a) * w(b) * w(c) * w(d);
    return raw;
}

bool criterion_11(std::string &detail) {
    const std::vector<double> lambdas{0.1, 0.05, 0.025};
    // 1-dim: covariance and recovered couplings
    std::vector<double> r_cov1, r_coup1, r_cov2, r_mean2;
    Eigen::Matrix2d k;
    k << 1.0, 0.45, 0.45, 0.8;
    const auto raw = rank_two_quartic({1.0, 0.5}, {-0.3, 0.9});
    for (double lambda : lambdas) {
        const auto m = testing::quartic_moments_1d(1.0, 1.0, lambda);
        const QuarticAction a1 = make_action(Eigen::MatrixXd::Identity(1, 1), SymmetricTensor4(1, {1.0}), lambda);
        r_cov1.push_back(std::abs(corrected_covariance(a1)(0, 0) - m.second));
        const QuarticAction rec =
            couplings_from_moments({Eigen::MatrixXd::Constant(1, 1, m.second), SymmetricTensor4(1, {m.connected_fourth()})});
        r_coup1.push_back(std::abs(rec.v(0, 0, 0, 0) - lambda) + std::abs(rec.kernel(0, 0) - 1.0));

        testing::Quartic2 q{k, {}, lambda};
        std::copy(raw.begin(), raw.end(), q.v);
        const QuarticAction a2 = make_action(k, SymmetricTensor4(2, raw), lambda);
        r_cov2.push_back((corrected_covariance(a2) - q.covariance()).cwiseAbs().maxCoeff());
        const double y = 0.7;
        r_mean2.push_back(std::abs(corrected_mean(a2, {{0}, {1}}, Eigen::VectorXd::Constant(1, y))(0) -
                                   q.conditional_mean(y)));
    }
    bool slopes = true;
    const std::pair<const char *, std::vector<double> *> series[] = {{"1-dim covariance", &r_cov1},
                                                                     {"1-dim recovered couplings", &r_coup1},
                                                                     {"2-dim covariance", &r_cov2},
                                                                     {"2-dim conditional mean", &r_mean2}};
    for (const auto &[name, res] : series) {
        const double slope = loglog_fit(lambdas, *res).slope;
        const bool ok = std::abs(slope - 2.0) <= 0.3;
        slopes = slopes && ok;
        diag(ok, "%s: residuals %.3e %.3e %.3e, slope %.3f (target 2 +- 0.3)", name, (*res)[0], (*res)[1], (*res)[2],
             slope);
    }
    // round trip V -> connected four-point -> V
    double trip = 0.0;
    std::mt19937_64 rng(1111);
    std::normal_distribution<double> g;
    for (std::size_t n = 1; n <= 4; ++n) {
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = g(rng);
        }
        const Eigen::MatrixXd kk = m * m.transpose() / static_cast<double>(n) + Eigen::MatrixXd::Identity(n, n);
        std::vector<double> v(n * n * n * n);
        for (auto &x : v) {
            x = 0.01 * g(rng);
        }
        const QuarticAction a = make_action(kk, SymmetricTensor4(n, v));
        const QuarticAction back = couplings_from_moments({corrected_covariance(a), predicted_connected_four(a)});
        for (std::size_t i = 0; i < v.size(); ++i) {
            trip = std::max(trip, std::abs(back.v.data()[i] - a.v.data()[i]));
        }
        trip = std::max(trip, (back.kernel - a.kernel).cwiseAbs().maxCoeff());
    }
    diag(trip < 1e-8, "round trip max deviation %.2e (< 1e-8)", trip);
    char buf[160];
    std::snprintf(buf, sizeof buf, "lambda^2 residual scaling %s; round trip %.2e", slopes ? "holds" : "violated", trip);
    detail = buf;
    return slopes && trip < 1e-8;
}

// ---------------------------------------------------------------- 12
bool criterion_12(std::string &detail) {
    bool analytic_ok = true;
    bool mc_ok = true;
    double worst_analytic = 0.0;
    auto check = [&](const char *name, const MomentSpec &s, std::uint64_t seed) {
        const double a = haar_expectation(s);
        const MomentEstimate e = monte_carlo_moment(s, 100000, seed);
        const double z = std::abs(z_score(e, 0.0));
        const bool ok_a = std::abs(a) < 1e-12;
        const bool ok_m = z < 4.0;
        analytic_ok = analytic_ok && ok_a;
        mc_ok = mc_ok && ok_m;
        worst_analytic = std::max(worst_analytic, std::abs(a));
        diag(ok_a && ok_m, "%s: analytic %.3e, MC %.3e +- %.1e (|z| vs 0 %.1f, vs analytic %.1f)", name, a, e.value,
             e.std_error, z, std::abs(z_score(e, a)));
    };
    for (int n = 1; n <= 3; ++n) {
        const std::size_t d = std::size_t(1) << n;
        auto rng = SeedStream(1212).substream("c12", static_cast<std::uint64_t>(n));
        for (int k = 0; k < 3; ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "d=%zu p=1 random traceless #%d", d, k);
            check(name, MomentSpec({{random_pure_state(d, rng), random_hermitian(d, rng, true)}}), rng());
        }
        for (int k = 0; k < 3; ++k) {
            std::vector<MomentPair> pairs;
            for (int j = 0; j < 3; ++j) {
                pairs.push_back({random_pure_state(d, rng), random_hermitian(d, rng, true)});
            }
            char name[64];
            std::snprintf(name, sizeof name, "d=%zu p=3 random traceless #%d", d, k);
            check(name, MomentSpec(pairs), rng());
        }
    }
    const DensityMatrix psi = DensityMatrix::basis(4, 0);
    check("d=4 p=3 Z-strings ZI,IZ,ZZ", MomentSpec({{psi, pauli_string("ZI")}, {psi, pauli_string("IZ")},
                                                     {psi, pauli_string("ZZ")}}), 12);
    check("d=4 p=3 Pauli set ZI,ZZ,ZX (XI anticommutes with all)",
          MomentSpec({{psi, pauli_string("ZI")}, {psi, pauli_string("ZZ")}, {psi, pauli_string("ZX")}}), 13);
    char buf[200];
    std::snprintf(buf, sizeof buf, "analytic odd moments zero: %s (max %.3e), MC consistent with 0: %s",
                  analytic_ok ? "yes" : "no", worst_analytic, mc_ok ? "yes" : "no");
    detail = buf;
    return analytic_ok && mc_ok;
}

struct Criterion {
    int id;
    const char *title;
    bool (*run)(std::string &);
};

const Criterion kCriteria[] = {
    {1, "Weingarten orthogonality", criterion_1},
    {2, "two-point closed form", criterion_2},
    {3, "analytic vs Monte Carlo moments", criterion_3},
    {4, "1/d convergence of the two-point kernel", criterion_4},
    {5, "four-point 1/d^4 scaling", criterion_5},
    {6, "output kurtosis vs width and depth", criterion_6},
    {7, "GP mean equals kernel regression limit", criterion_7},
    {8, "lazy training", criterion_8},
    {9, "averaged QNTK closed form", criterion_9},
    {10, "parameter shift exactness", criterion_10},
    {11, "near-Gaussian first-order accuracy", criterion_11},
    {12, "odd moments vanish", criterion_12},
};

} // namespace

int main(int argc, char **argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
            return 2;
        }
    }
    int failed = 0;
    int ran = 0;
    for (const auto &c : kCriteria) {
        if (only && c.id != only) {
            continue;
        }
        ++ran;
        const auto t0 = Clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception &e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", ok ? "PASS" : "FAIL", c.id, c.title, detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
        failed += !ok;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion %d\n", only);
        return 2;
    }
    return failed ? 1 : 0;
}
