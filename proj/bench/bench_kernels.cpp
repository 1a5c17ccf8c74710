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

// Serial vs OpenMP timings for the sampling and gradient kernels.
// Usage: bench_kernels [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "qnngp/circuit.hpp"
#include "qnngp/haar_moments.hpp"
#include "qnngp/qntk.hpp"

using namespace qnngp;

namespace {

double best_of(int repeats, const std::function<void()> &fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const std::string &name, int repeats, const std::function<void(Execution)> &fn) {
    const double s = best_of(repeats, [&] { fn(Execution::serial); });
    const double p = best_of(repeats, [&] { fn(Execution::parallel); });
    std::printf("%-34s %10.4f %10.4f %8.2fx\n", name.c_str(), s, p, s / p);
}

} // namespace

int main(int argc, char **argv) {
    const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
    std::printf("%-34s %10s %10s %9s\n", "kernel", "serial[s]", "omp[s]", "speedup");

    auto rng = SeedStream(7).substream("bench");
    std::vector<DensityMatrix> states4{random_pure_state(16, rng), random_pure_state(16, rng)};
    const ObservableSet z4 = ObservableSet::z_strings(4);
    row("sample_outputs n=4 L=32 N=2000", repeats, [&](Execution e) {
        (void)sample_outputs({4, 32}, states4, z4, 2000, 11, e);
    });

    std::vector<MomentSpec> specs;
    for (int k = 0; k < 4; ++k) {
        std::vector<MomentPair> pairs;
        for (int p = 0; p < 4; ++p) {
            pairs.push_back({random_pure_state(8, rng), random_hermitian(8, rng, true)});
        }
        specs.emplace_back(std::move(pairs));
    }
    row("monte_carlo_moments d=8 p=4 N=2e4", repeats, [&](Execution e) {
        (void)monte_carlo_moments(specs, 20000, 13, true, false, e);
    });

    const RandomCircuit rc = random_circuit(5, 48, rng);
    std::vector<DensityMatrix> states5;
    for (int a = 0; a < 8; ++a) {
        states5.push_back(random_pure_state(32, rng));
    }
    const ObservableSet z5 = ObservableSet::z_strings(5);
    row("parameter_shift n=5 L=48 8 states", repeats, [&](Execution e) {
        (void)parameter_shift_gradient(rc.spec, rc.theta, states5, z5, GradientMethod::parameter_shift, e);
    });
    return 0;
}
