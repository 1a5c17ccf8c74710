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

#include "qnngp/circuit.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "parallel.hpp"
#include "qnngp/errors.hpp"

namespace qnngp {

Layer::Layer(UnitaryOperator w, HermitianObservable x) : w_(std::move(w)), x_(std::move(x)) {
    if (w_.dim() != x_.dim()) {
        throw DimensionMismatch("layer unitary and generator differ in dimension");
    }
}

CircuitSpec::CircuitSpec(int n_qubits, std::vector<Layer> layers) : n_qubits_(n_qubits), layers_(std::move(layers)) {
    if (n_qubits < 1 || n_qubits > 6) {
        throw InvalidDimension("circuits need 1 to 6 qubits");
    }
    if (layers_.empty()) {
        throw InvalidDimension("a circuit needs at least one layer");
    }
    for (const auto &l : layers_) {
        if (l.dim() != dim()) {
            throw DimensionMismatch("layer dimension differs from 2^n");
        }
    }
}

CircuitSpec CircuitSpec::then(const CircuitSpec &next) const {
    if (next.n_qubits_ != n_qubits_) {
        throw DimensionMismatch("concatenating circuits on different registers");
    }
    std::vector<Layer> all = layers_;
    all.insert(all.end(), next.layers_.begin(), next.layers_.end());
    return CircuitSpec(n_qubits_, std::move(all));
}

ObservableSet::ObservableSet(std::vector<HermitianObservable> observables) : obs_(std::move(observables)) {
    if (obs_.empty()) {
        throw InvalidDimension("observable set is empty");
    }
    for (const auto &o : obs_) {
        if (o.dim() != obs_.front().dim()) {
            throw DimensionMismatch("observables differ in dimension");
        }
    }
}

ObservableSet ObservableSet::z_strings(int n_qubits, bool hs_normalized) {
    if (n_qubits < 1) {
        throw InvalidDimension("need at least one qubit");
    }
    const double scale = hs_normalized ? 1.0 / std::sqrt(std::ldexp(1.0, n_qubits)) : 1.0;
    std::vector<HermitianObservable> out;
    for (unsigned mask = 1; mask < (1u << n_qubits); ++mask) {
        std::string s(static_cast<std::size_t>(n_qubits), 'I');
        for (int q = 0; q < n_qubits; ++q) {
            if (mask & (1u << (n_qubits - 1 - q))) {
                s[static_cast<std::size_t>(q)] = 'Z';
            }
        }
        HermitianObservable p = pauli_string(s);
        out.emplace_back(scale * p.matrix(), s);
    }
    return ObservableSet(std::move(out));
}

namespace {

void apply_generator(ComplexMatrix &u, const HermitianObservable &x, double theta) {
    if (x.involutory()) {
        ComplexMatrix xu = x.matrix() * u;
        u = std::cos(theta) * u + cplx(0.0, std::sin(theta)) * xu;
    } else {
        u = expm_hermitian_generator(x, theta).matrix() * u;
    }
}

} // namespace

UnitaryOperator build_unitary(const CircuitSpec &spec, const ParameterVector &theta) {
    if (static_cast<std::size_t>(theta.size()) != spec.depth()) {
        throw ArityError("parameter count " + std::to_string(theta.size()) + " differs from depth " +
                         std::to_string(spec.depth()));
    }
    const auto d = static_cast<Eigen::Index>(spec.dim());
    ComplexMatrix u = ComplexMatrix::Identity(d, d);
    for (std::size_t l = 0; l < spec.depth(); ++l) {
        const Layer &layer = spec.layer(l);
        u = layer.w().matrix() * u;
        apply_generator(u, layer.x(), theta(static_cast<Eigen::Index>(l)));
    }
    return UnitaryOperator(std::move(u));
}

Eigen::MatrixXd model_outputs(const ComplexMatrix &u, std::span<const DensityMatrix> states,
                              const ObservableSet &obs) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(obs.size()), static_cast<Eigen::Index>(states.size()));
    for (std::size_t a = 0; a < states.size(); ++a) {
        if (states[a].dim() != static_cast<std::size_t>(u.rows()) || obs.dim() != states[a].dim()) {
            throw DimensionMismatch("state, circuit and observables must share a dimension");
        }
        ComplexMatrix evolved = u * states[a].matrix() * u.adjoint();
        for (std::size_t i = 0; i < obs.size(); ++i) {
            f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) =
                obs[i].is_scalar() ? obs[i].scalar_value() : trace_product(evolved, obs[i].matrix()).real();
        }
    }
    return f;
}

Eigen::VectorXd model_output(const CircuitSpec &spec, const ParameterVector &theta, const DensityMatrix &rho,
                             const ObservableSet &obs) {
    if (rho.dim() != spec.dim() || obs.dim() != spec.dim()) {
        throw DimensionMismatch("state, circuit and observables must share a dimension");
    }
    UnitaryOperator u = build_unitary(spec, theta);
    return model_outputs(u.matrix(), std::span<const DensityMatrix>(&rho, 1), obs).col(0);
}

HermitianObservable layer_generator(int n_qubits, std::size_t l) {
    std::string s(static_cast<std::size_t>(n_qubits), 'I');
    s[l % static_cast<std::size_t>(n_qubits)] = 'Y';
    return pauli_string(s);
}

UnitaryOperator random_entangling_block(int n_qubits, std::mt19937_64 &rng) {
    if (n_qubits < 1) {
        throw InvalidDimension("need at least one qubit");
    }
    if (n_qubits == 1) {
        return sample_haar_unitary(2, rng);
    }
    const auto d = Eigen::Index(1) << n_qubits;
    ComplexMatrix w = ComplexMatrix::Identity(d, d);
    for (int q = 0; q + 1 < n_qubits; ++q) {
        Eigen::Matrix4cd g = sample_haar_unitary(4, rng).matrix();
        w = embed_adjacent(g, q, n_qubits) * w;
    }
    // CZ chain: basis state b picks up (-1) for every adjacent pair of ones.
    for (Eigen::Index b = 0; b < d; ++b) {
        int parity = 0;
        for (int q = 0; q + 1 < n_qubits; ++q) {
            const int s0 = n_qubits - 1 - q;
            parity ^= static_cast<int>(((b >> s0) & 1) & ((b >> (s0 - 1)) & 1));
        }
        if (parity) {
            w.row(b) *= -1.0;
        }
    }
    return UnitaryOperator(std::move(w));
}

CircuitSpec random_circuit_spec(int n_qubits, std::size_t depth, std::mt19937_64 &rng) {
    if (depth < 1) {
        throw InvalidDimension("a circuit needs at least one layer");
    }
    std::vector<HermitianObservable> generators;
    for (int q = 0; q < n_qubits; ++q) {
        generators.push_back(layer_generator(n_qubits, static_cast<std::size_t>(q)));
    }
    std::vector<Layer> layers;
    layers.reserve(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        layers.emplace_back(random_entangling_block(n_qubits, rng), generators[l % generators.size()]);
    }
    return CircuitSpec(n_qubits, std::move(layers));
}

ParameterVector draw_parameters(std::size_t depth, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    ParameterVector theta(static_cast<Eigen::Index>(depth));
    for (Eigen::Index l = 0; l < theta.size(); ++l) {
        theta(l) = u(rng);
    }
    return theta;
}

RandomCircuit random_circuit(int n_qubits, std::size_t depth, std::mt19937_64 &rng) {
    CircuitSpec spec = random_circuit_spec(n_qubits, depth, rng);
    ParameterVector theta = draw_parameters(depth, rng);
    return {std::move(spec), std::move(theta)};
}

DensityMatrix zz_feature_map(const Eigen::VectorXd &x, int n_qubits, int reps, bool full_pairs) {
    if (n_qubits < 1 || n_qubits > 6) {
        throw InvalidDimension("feature map needs 1 to 6 qubits");
    }
    if (x.size() != n_qubits) {
        throw ArityError("feature vector length " + std::to_string(x.size()) + " differs from qubit count " +
                         std::to_string(n_qubits));
    }
    if (reps < 1) {
        throw InvalidDimension("feature map needs at least one repetition");
    }
    const auto d = Eigen::Index(1) << n_qubits;
    // Z eigenvalue of qubit q in basis state b (qubit 0 is the most significant bit).
    auto z = [n_qubits](Eigen::Index b, int q) { return ((b >> (n_qubits - 1 - q)) & 1) ? -1.0 : 1.0; };
    Eigen::VectorXd phase = Eigen::VectorXd::Zero(d);
    for (Eigen::Index b = 0; b < d; ++b) {
        double ph = 0.0;
        for (int j = 0; j < n_qubits; ++j) {
            ph += x(j) * z(b, j);
            for (int k = j + 1; k < n_qubits; ++k) {
                if (full_pairs || k == j + 1) {
                    ph += (std::numbers::pi - x(j)) * (std::numbers::pi - x(k)) * z(b, j) * z(b, k);
                }
            }
        }
        phase(b) = ph;
    }
    ComplexVector psi = ComplexVector::Zero(d);
    psi(0) = 1.0;
    const double h = 1.0 / std::sqrt(2.0);
    for (int r = 0; r < reps; ++r) {
        for (Eigen::Index stride = 1; stride < d; stride <<= 1) {
            for (Eigen::Index b = 0; b < d; ++b) {
                if (b & stride) {
                    continue;
                }
                const cplx a0 = psi(b);
                const cplx a1 = psi(b | stride);
                psi(b) = h * (a0 + a1);
                psi(b | stride) = h * (a0 - a1);
            }
        }
        for (Eigen::Index b = 0; b < d; ++b) {
            psi(b) *= std::polar(1.0, phase(b));
        }
    }
    return DensityMatrix::pure(psi);
}

void OutputTable::write_csv(std::ostream &out) const {
    out << "sample_id,obs_label,value\n";
    char buf[64];
    for (Eigen::Index s = 0; s < values.rows(); ++s) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", values(s, c));
            out << s << ',' << labels[static_cast<std::size_t>(c)] << ',' << buf << '\n';
        }
    }
}

OutputTable sample_outputs(const CircuitFamily &family, std::span<const DensityMatrix> states,
                           const ObservableSet &obs, std::size_t n_samples, std::uint64_t seed, Execution exec) {
    if (n_samples < 1) {
        throw InvalidDimension("need at least one sample");
    }
    if (states.empty()) {
        throw InvalidDimension("need at least one input state");
    }
    const std::size_t d = std::size_t(1) << family.n_qubits;
    for (const auto &s : states) {
        if (s.dim() != d) {
            throw DimensionMismatch("input state dimension differs from 2^n");
        }
    }
    if (obs.dim() != d) {
        throw DimensionMismatch("observable dimension differs from 2^n");
    }
    OutputTable table;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        for (std::size_t a = 0; a < states.size(); ++a) {
            std::string label = obs[i].label().empty() ? "O" + std::to_string(i) : obs[i].label();
            if (states.size() > 1) {
                label += "@" + std::to_string(a);
            }
            table.labels.push_back(std::move(label));
        }
    }
    table.values.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(table.labels.size()));
    const SeedStream seeds(seed);
    detail::for_each_index(n_samples, exec, [&](std::size_t s) {
        auto rng = seeds.substream("circuit-sample", s);
        RandomCircuit rc = random_circuit(family.n_qubits, family.depth, rng);
        Eigen::MatrixXd f = model_outputs(build_unitary(rc.spec, rc.theta).matrix(), states, obs);
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            for (Eigen::Index a = 0; a < f.cols(); ++a) {
                table.values(static_cast<Eigen::Index>(s), i * f.cols() + a) = f(i, a);
            }
        }
    });
    return table;
}

} // namespace qnngp
