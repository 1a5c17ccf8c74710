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

#include "qnngp/linalg.hpp"

#include <cmath>
#include <limits>

#include "qnngp/errors.hpp"

namespace qnngp {

namespace {

Tolerances g_tolerances;

void check_square(const ComplexMatrix &m, const char *what) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        throw InvalidDimension(std::string(what) + " must be a nonempty square matrix");
    }
    if (static_cast<std::size_t>(m.rows()) > g_tolerances.max_dim) {
        throw ResourceError(std::string(what) + " dimension exceeds the dense cap of " +
                            std::to_string(g_tolerances.max_dim));
    }
    if (!m.allFinite()) {
        throw ContractViolation(std::string(what) + " has non-finite entries");
    }
}

double hermiticity_defect(const ComplexMatrix &m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

std::normal_distribution<double> &standard_normal() {
    thread_local std::normal_distribution<double> n(0.0, 1.0);
    return n;
}

ComplexMatrix ginibre(std::size_t rows, std::size_t cols, std::mt19937_64 &rng) {
    auto &n = standard_normal();
    n.reset();
    ComplexMatrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const double s = std::sqrt(0.5);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            double re = n(rng);
            double im = n(rng);
            g(i, j) = cplx(s * re, s * im);
        }
    }
    return g;
}

} // namespace

const Tolerances &tolerances() noexcept { return g_tolerances; }
void set_tolerances(const Tolerances &t) noexcept { g_tolerances = t; }

DensityMatrix::DensityMatrix(ComplexMatrix m) {
    check_square(m, "density matrix");
    const double tol = g_tolerances.construction;
    if (hermiticity_defect(m) > tol) {
        throw ContractViolation("density matrix is not Hermitian");
    }
    m = 0.5 * (m + m.adjoint()).eval();
    if (std::abs(m.trace().real() - 1.0) > tol) {
        throw ContractViolation("density matrix trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -g_tolerances.psd) {
        throw ContractViolation("density matrix has a negative eigenvalue");
    }
    m_ = std::move(m);
}

DensityMatrix DensityMatrix::pure(const ComplexVector &psi) {
    if (psi.size() == 0) {
        throw InvalidDimension("empty state vector");
    }
    const double nrm = psi.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        throw ContractViolation("state vector must be finite and nonzero");
    }
    ComplexVector v = psi / nrm;
    ComplexMatrix m = v * v.adjoint();
    check_square(m, "density matrix");
    m = 0.5 * (m + m.adjoint()).eval();
    return DensityMatrix(std::move(m), Trusted{});
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t d) {
    if (d == 0) {
        throw InvalidDimension("dimension must be positive");
    }
    auto n = static_cast<Eigen::Index>(d);
    return DensityMatrix(ComplexMatrix::Identity(n, n) / static_cast<double>(d));
}

DensityMatrix DensityMatrix::basis(std::size_t d, std::size_t k) {
    if (k >= d) {
        throw InvalidDimension("basis index out of range");
    }
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(d));
    v(static_cast<Eigen::Index>(k)) = 1.0;
    return pure(v);
}

double DensityMatrix::purity() const { return trace_product(m_, m_).real(); }

HermitianObservable::HermitianObservable(ComplexMatrix m, std::string label) : label_(std::move(label)) {
    check_square(m, "observable");
    if (hermiticity_defect(m) > g_tolerances.construction) {
        throw ContractViolation("observable is not Hermitian");
    }
    m_ = 0.5 * (m + m.adjoint());
    const auto n = m_.rows();
    const cplx c = m_(0, 0);
    scalar_ = (m_ - c * ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0;
    involutory_ = ((m_ * m_) - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff() < g_tolerances.construction;
}

HermitianObservable HermitianObservable::identity(std::size_t d) {
    auto n = static_cast<Eigen::Index>(d);
    if (n == 0) {
        throw InvalidDimension("dimension must be positive");
    }
    return HermitianObservable(ComplexMatrix::Identity(n, n), "I");
}

UnitaryOperator::UnitaryOperator(ComplexMatrix m) {
    check_square(m, "unitary");
    const auto n = m.rows();
    if ((m * m.adjoint() - ComplexMatrix::Identity(n, n)).norm() > g_tolerances.unitarity) {
        throw ContractViolation("matrix is not unitary");
    }
    m_ = std::move(m);
}

UnitaryOperator UnitaryOperator::identity(std::size_t d) {
    auto n = static_cast<Eigen::Index>(d);
    if (n == 0) {
        throw InvalidDimension("dimension must be positive");
    }
    return UnitaryOperator(ComplexMatrix::Identity(n, n));
}

double PermutationOperator::trace() const {
    double t = 0.0;
    for (std::size_t b = 0; b < target_.size(); ++b) {
        t += target_[b] == b ? 1.0 : 0.0;
    }
    return t;
}

ComplexMatrix PermutationOperator::dense() const {
    const auto n = static_cast<Eigen::Index>(target_.size());
    if (target_.size() > 1024) {
        throw ResourceError("dense permutation operator above 1024 rows");
    }
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (Eigen::Index b = 0; b < n; ++b) {
        m(static_cast<Eigen::Index>(target_[static_cast<std::size_t>(b)]), b) = 1.0;
    }
    return m;
}

UnitaryOperator sample_haar_unitary(std::size_t d, std::mt19937_64 &rng) {
    if (d == 0) {
        throw InvalidDimension("Haar sampling needs d >= 1");
    }
    ComplexMatrix z = ginibre(d, d, rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    const auto n = static_cast<Eigen::Index>(d);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
    const ComplexMatrix &r = qr.matrixQR();
    for (Eigen::Index j = 0; j < n; ++j) {
        const cplx rjj = r(j, j);
        const double a = std::abs(rjj);
        q.col(j) *= a > 0.0 ? rjj / a : cplx(1.0);
    }
    return UnitaryOperator(std::move(q));
}

UnitaryOperator expm_hermitian_generator(const HermitianObservable &x, double theta) {
    const auto n = static_cast<Eigen::Index>(x.dim());
    if (x.involutory()) {
        ComplexMatrix u = cplx(0.0, std::sin(theta)) * x.matrix();
        u.diagonal().array() += std::cos(theta);
        return UnitaryOperator(std::move(u));
    }
    HermitianEigen e = eigh(x.matrix());
    ComplexVector phases(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        phases(k) = std::polar(1.0, theta * e.values(k));
    }
    ComplexMatrix u = e.vectors * phases.asDiagonal() * e.vectors.adjoint();
    return UnitaryOperator(std::move(u));
}

PermutationOperator permutation_operator(const Permutation &sigma, std::size_t d) {
    if (d == 0) {
        throw InvalidDimension("local dimension must be positive");
    }
    const int p = sigma.size();
    std::size_t total = 1;
    for (int k = 0; k < p; ++k) {
        total *= d;
        if (total > 4096) {
            throw ResourceError("permutation operator needs d^p <= 4096");
        }
    }
    std::vector<std::size_t> stride(static_cast<std::size_t>(p));
    std::size_t s = 1;
    for (int k = p - 1; k >= 0; --k) {
        stride[static_cast<std::size_t>(k)] = s;
        s *= d;
    }
    std::vector<std::size_t> target(total);
    for (std::size_t b = 0; b < total; ++b) {
        std::size_t out = 0;
        for (int k = 0; k < p; ++k) {
            std::size_t digit = (b / stride[static_cast<std::size_t>(k)]) % d;
            out += digit * stride[static_cast<std::size_t>(sigma(k))];
        }
        target[b] = out;
    }
    return PermutationOperator(sigma, d, std::move(target));
}

ComplexMatrix kron(const ComplexMatrix &a, const ComplexMatrix &b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

ComplexMatrix dagger(const ComplexMatrix &a) { return a.adjoint(); }

cplx trace(const ComplexMatrix &a) { return a.trace(); }

cplx trace_product(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.cols() != b.rows() || a.rows() != b.cols()) {
        throw DimensionMismatch("trace_product shape mismatch");
    }
    return (a.array() * b.transpose().array()).sum();
}

double frobenius_norm(const ComplexMatrix &a) { return a.norm(); }

HermitianEigen eigh(const ComplexMatrix &a) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
    if (es.info() != Eigen::Success) {
        throw ContractViolation("Hermitian eigensolver failed");
    }
    return {es.eigenvalues(), es.eigenvectors()};
}

Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd &a, double rcond, int *rank) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd &lam = es.eigenvalues();
    const double cut = rcond * lam.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
    int r = 0;
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        if (std::abs(lam(k)) > cut) {
            inv(k) = 1.0 / lam(k);
            ++r;
        }
    }
    if (rank) {
        *rank = r;
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double condition_number_symmetric(const Eigen::MatrixXd &a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    Eigen::VectorXd ab = es.eigenvalues().cwiseAbs();
    const double lo = ab.minCoeff();
    return lo > 0.0 ? ab.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

Eigen::Matrix2cd pauli(char c) {
    Eigen::Matrix2cd m;
    switch (c) {
    case 'I':
        m << 1, 0, 0, 1;
        break;
    case 'X':
        m << 0, 1, 1, 0;
        break;
    case 'Y':
        m << 0, cplx(0, -1), cplx(0, 1), 0;
        break;
    case 'Z':
        m << 1, 0, 0, -1;
        break;
    default:
        throw ContractViolation(std::string("unknown Pauli '") + c + "'");
    }
    return m;
}

HermitianObservable pauli_string(std::string_view s) {
    if (s.empty()) {
        throw InvalidDimension("empty Pauli string");
    }
    ComplexMatrix m = pauli(s[0]);
    for (std::size_t k = 1; k < s.size(); ++k) {
        m = kron(m, pauli(s[k]));
    }
    return HermitianObservable(std::move(m), std::string(s));
}

ComplexMatrix embed_single(const Eigen::Matrix2cd &g, int wire, int n_qubits) {
    if (wire < 0 || wire >= n_qubits) {
        throw InvalidDimension("wire out of range");
    }
    const Eigen::Index left = Eigen::Index(1) << wire;
    const Eigen::Index right = Eigen::Index(1) << (n_qubits - wire - 1);
    return kron(kron(ComplexMatrix::Identity(left, left), g), ComplexMatrix::Identity(right, right));
}

ComplexMatrix embed_adjacent(const Eigen::Matrix4cd &g, int wire, int n_qubits) {
    if (wire < 0 || wire + 1 >= n_qubits) {
        throw InvalidDimension("adjacent pair out of range");
    }
    const Eigen::Index left = Eigen::Index(1) << wire;
    const Eigen::Index right = Eigen::Index(1) << (n_qubits - wire - 2);
    return kron(kron(ComplexMatrix::Identity(left, left), g), ComplexMatrix::Identity(right, right));
}

ComplexVector random_pure_vector(std::size_t d, std::mt19937_64 &rng) {
    if (d == 0) {
        throw InvalidDimension("dimension must be positive");
    }
    ComplexVector v = ginibre(d, 1, rng).col(0);
    return v / v.norm();
}

DensityMatrix random_pure_state(std::size_t d, std::mt19937_64 &rng) {
    return DensityMatrix::pure(random_pure_vector(d, rng));
}

DensityMatrix random_density_matrix(std::size_t d, std::size_t rank, std::mt19937_64 &rng) {
    if (d == 0 || rank == 0) {
        throw InvalidDimension("dimension and rank must be positive");
    }
    ComplexMatrix g = ginibre(d, rank, rng);
    ComplexMatrix m = g * g.adjoint();
    m /= m.trace().real();
    m = 0.5 * (m + m.adjoint()).eval();
    return DensityMatrix(std::move(m));
}

HermitianObservable random_hermitian(std::size_t d, std::mt19937_64 &rng, bool traceless) {
    ComplexMatrix g = ginibre(d, d, rng);
    ComplexMatrix h = 0.5 * (g + g.adjoint());
    if (traceless) {
        h.diagonal().array() -= h.trace() / static_cast<double>(d);
    }
    return HermitianObservable(std::move(h));
}

} // namespace qnngp
