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
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qnngp/linalg.hpp"
#include "qnngp/rng.hpp"

namespace qnngp {

/// One layer of the ansatz: a fixed unitary W followed by exp(i theta X).
class Layer {
  public:
    Layer(UnitaryOperator w, HermitianObservable x);

    [[nodiscard]] const UnitaryOperator &w() const noexcept { return w_; }
    [[nodiscard]] const HermitianObservable &x() const noexcept { return x_; }
    [[nodiscard]] std::size_t dim() const noexcept { return w_.dim(); }

  private:
    UnitaryOperator w_;
    HermitianObservable x_;
};

/// Layered ansatz U(theta). Layer 0 acts first:
/// U = G_{L-1}(theta_{L-1}) W_{L-1} ... G_0(theta_0) W_0 with G(t) = exp(i t X).
class CircuitSpec {
  public:
    CircuitSpec(int n_qubits, std::vector<Layer> layers);

    [[nodiscard]] int n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t dim() const noexcept { return std::size_t(1) << n_qubits_; }
    [[nodiscard]] std::size_t depth() const noexcept { return layers_.size(); }
    [[nodiscard]] const std::vector<Layer> &layers() const noexcept { return layers_; }
    [[nodiscard]] const Layer &layer(std::size_t l) const { return layers_.at(l); }

    /// Layers of this circuit followed by those of next.
    [[nodiscard]] CircuitSpec then(const CircuitSpec &next) const;

  private:
    int n_qubits_;
    std::vector<Layer> layers_;
};

/// One angle per layer.
using ParameterVector = Eigen::VectorXd;

class ObservableSet {
  public:
    explicit ObservableSet(std::vector<HermitianObservable> observables);

    /// Every non-identity tensor product of I and Z on n qubits. With
    /// hs_normalized each is divided by sqrt(d) so that Tr(O^2) = 1.
    static ObservableSet z_strings(int n_qubits, bool hs_normalized = false);

    [[nodiscard]] std::size_t size() const noexcept { return obs_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return obs_.front().dim(); }
    [[nodiscard]] const HermitianObservable &operator[](std::size_t i) const { return obs_.at(i); }
    [[nodiscard]] auto begin() const noexcept { return obs_.begin(); }
    [[nodiscard]] auto end() const noexcept { return obs_.end(); }

  private:
    std::vector<HermitianObservable> obs_;
};

UnitaryOperator build_unitary(const CircuitSpec &spec, const ParameterVector &theta);

/// f_i = Tr(U rho U^dagger O_i).
Eigen::VectorXd model_output(const CircuitSpec &spec, const ParameterVector &theta, const DensityMatrix &rho,
                             const ObservableSet &obs);
/// Outputs of a fixed unitary; rows are observables, columns are states.
Eigen::MatrixXd model_outputs(const ComplexMatrix &u, std::span<const DensityMatrix> states,
                              const ObservableSet &obs);

/// Generator of layer l in random circuits: Pauli Y on wire l mod n.
HermitianObservable layer_generator(int n_qubits, std::size_t l);

/// Random fixed block: Haar two-qubit gates on (0,1), (1,2), ... then a CZ chain.
/// For one qubit a Haar 2x2 unitary.
UnitaryOperator random_entangling_block(int n_qubits, std::mt19937_64 &rng);
CircuitSpec random_circuit_spec(int n_qubits, std::size_t depth, std::mt19937_64 &rng);
/// Uniform angles on [0, 2 pi).
ParameterVector draw_parameters(std::size_t depth, std::mt19937_64 &rng);

struct RandomCircuit {
    CircuitSpec spec;
    ParameterVector theta;
};
/// Spec first, then angles, from the same stream.
RandomCircuit random_circuit(int n_qubits, std::size_t depth, std::mt19937_64 &rng);

/// Encoded data state: per repetition, Hadamards, exp(i x_j Z_j), and
/// exp(i (pi - x_j)(pi - x_k) Z_j Z_k) on adjacent pairs (all pairs with full_pairs).
DensityMatrix zz_feature_map(const Eigen::VectorXd &x, int n_qubits, int reps = 2, bool full_pairs = false);

struct CircuitFamily {
    int n_qubits = 1;
    std::size_t depth = 1;
};

/// Per-sample outputs, one column per (observable, state) pair, observable-major.
struct OutputTable {
    std::vector<std::string> labels;
    Eigen::MatrixXd values; ///< samples x columns

    /// Long format: sample_id,obs_label,value
    void write_csv(std::ostream &out) const;
};

/// N independent random circuits; sample s draws from substream ("circuit-sample", s).
OutputTable sample_outputs(const CircuitFamily &family, std::span<const DensityMatrix> states,
                           const ObservableSet &obs, std::size_t n_samples, std::uint64_t seed,
                           Execution exec = Execution::parallel);

} // namespace qnngp
