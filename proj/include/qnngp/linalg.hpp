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

#include <complex>
#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/permutation.hpp"

namespace qnngp {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Validation thresholds shared by all operator types.
///
/// Set once at start-up (e.g. from a config file), before any threads run.
struct Tolerances {
    double construction = 1e-12; ///< Hermiticity and trace checks
    double unitarity = 1e-10;    ///< Frobenius norm of U U^dagger - I
    double psd = 1e-10;          ///< most negative eigenvalue allowed
    std::size_t max_dim = 64;    ///< cap on d for dense operators
};

const Tolerances &tolerances() noexcept;
void set_tolerances(const Tolerances &t) noexcept;

/// Quantum state: Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
  public:
    explicit DensityMatrix(ComplexMatrix m);

    /// |psi><psi| for a nonzero vector, normalized.
    static DensityMatrix pure(const ComplexVector &psi);
    static DensityMatrix maximally_mixed(std::size_t d);
    /// |k><k|
    static DensityMatrix basis(std::size_t d, std::size_t k);

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    [[nodiscard]] const ComplexMatrix &matrix() const noexcept { return m_; }
    [[nodiscard]] double purity() const;

  private:
    struct Trusted {};
    DensityMatrix(ComplexMatrix m, Trusted) : m_(std::move(m)) {}
    ComplexMatrix m_;
};

class HermitianObservable {
  public:
    explicit HermitianObservable(ComplexMatrix m, std::string label = {});
    static HermitianObservable identity(std::size_t d);

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    [[nodiscard]] const ComplexMatrix &matrix() const noexcept { return m_; }
    [[nodiscard]] const std::string &label() const noexcept { return label_; }
    /// True when X^2 = I, so exp(i t X) = cos t + i sin t X.
    [[nodiscard]] bool involutory() const noexcept { return involutory_; }
    /// Exactly c * I; expectation values are then c for every state.
    [[nodiscard]] bool is_scalar() const noexcept { return scalar_; }
    [[nodiscard]] double scalar_value() const noexcept { return m_(0, 0).real(); }

  private:
    ComplexMatrix m_;
    std::string label_;
    bool involutory_ = false;
    bool scalar_ = false;
};

class UnitaryOperator {
  public:
    explicit UnitaryOperator(ComplexMatrix m);
    static UnitaryOperator identity(std::size_t d);

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    [[nodiscard]] const ComplexMatrix &matrix() const noexcept { return m_; }

  private:
    ComplexMatrix m_;
};

/// Operator permuting the p tensor factors of (C^d)^{(x)p}.
///
/// Factor k is moved to slot sigma(k), so P(sigma) P(tau) = P(sigma tau).
/// Stored as a map between computational basis indices.
class PermutationOperator {
  public:
    [[nodiscard]] int p() const noexcept { return sigma_.size(); }
    [[nodiscard]] std::size_t local_dim() const noexcept { return d_; }
    [[nodiscard]] std::size_t dim() const noexcept { return target_.size(); }
    [[nodiscard]] const Permutation &permutation() const noexcept { return sigma_; }
    /// P |b> = |target(b)>
    [[nodiscard]] std::size_t target(std::size_t b) const { return target_[b]; }
    [[nodiscard]] double trace() const;
    [[nodiscard]] ComplexMatrix dense() const;

  private:
    friend PermutationOperator permutation_operator(const Permutation &, std::size_t);
    PermutationOperator(Permutation sigma, std::size_t d, std::vector<std::size_t> target)
        : sigma_(std::move(sigma)), d_(d), target_(std::move(target)) {}
    Permutation sigma_;
    std::size_t d_;
    std::vector<std::size_t> target_;
};

/// Haar-distributed unitary: Ginibre sample, QR, phases of diag(R) divided out.
UnitaryOperator sample_haar_unitary(std::size_t d, std::mt19937_64 &rng);

/// exp(i theta X) by eigendecomposition (closed form when X is involutory).
UnitaryOperator expm_hermitian_generator(const HermitianObservable &x, double theta);

/// Throws ResourceError when d^p > 4096.
PermutationOperator permutation_operator(const Permutation &sigma, std::size_t d);

ComplexMatrix kron(const ComplexMatrix &a, const ComplexMatrix &b);
ComplexMatrix dagger(const ComplexMatrix &a);
cplx trace(const ComplexMatrix &a);
/// Tr(AB) without forming the product.
cplx trace_product(const ComplexMatrix &a, const ComplexMatrix &b);
double frobenius_norm(const ComplexMatrix &a);

struct HermitianEigen {
    Eigen::VectorXd values; ///< ascending
    ComplexMatrix vectors;
};
HermitianEigen eigh(const ComplexMatrix &a);

/// Moore-Penrose pseudo-inverse of a real symmetric matrix; eigenvalues
/// below rcond * max|lambda| are dropped. Reports the retained rank.
Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd &a, double rcond = 1e-12, int *rank = nullptr);
/// Ratio of extreme absolute eigenvalues of a real symmetric matrix.
double condition_number_symmetric(const Eigen::MatrixXd &a);

/// Single-qubit Pauli ('I', 'X', 'Y', 'Z').
Eigen::Matrix2cd pauli(char c);
/// Tensor product of Paulis; character 0 acts on qubit 0, the most significant bit.
HermitianObservable pauli_string(std::string_view s);
/// Embeds a 2x2 gate on one wire of an n-qubit register.
ComplexMatrix embed_single(const Eigen::Matrix2cd &g, int wire, int n_qubits);
/// Embeds a 4x4 gate on wires (wire, wire + 1).
ComplexMatrix embed_adjacent(const Eigen::Matrix4cd &g, int wire, int n_qubits);

ComplexVector random_pure_vector(std::size_t d, std::mt19937_64 &rng);
DensityMatrix random_pure_state(std::size_t d, std::mt19937_64 &rng);
/// G G^dagger / Tr for a d x rank Ginibre G.
DensityMatrix random_density_matrix(std::size_t d, std::size_t rank, std::mt19937_64 &rng);
/// GUE sample, optionally with its trace removed.
HermitianObservable random_hermitian(std::size_t d, std::mt19937_64 &rng, bool traceless = false);

} // namespace qnngp
