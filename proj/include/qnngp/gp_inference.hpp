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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/circuit.hpp"
#include "qnngp/linalg.hpp"

namespace qnngp {

struct ObservedSet {
    std::vector<DensityMatrix> states;
    Eigen::MatrixXd labels; ///< outputs x observed points
};

struct PredictionSet {
    std::vector<DensityMatrix> states;
};

enum class KernelMode { leading, exact };

/// Prior covariance K_{ij,ab} over (output, point) pairs.
///
/// Either separable, K = scale * M_ij * G_ab, or a dense matrix. Flattened
/// index of (output i, point a) is i * n_points + a; points are ordered
/// observed first, then predicted.
class KernelMatrix {
  public:
    static KernelMatrix from_blocks(Eigen::MatrixXd output_block, Eigen::MatrixXd state_block, double scale = 1.0);
    static KernelMatrix from_dense(Eigen::MatrixXd full, std::size_t n_outputs, std::size_t n_points);

    [[nodiscard]] bool separable() const noexcept { return separable_; }
    [[nodiscard]] std::size_t n_outputs() const noexcept { return n_outputs_; }
    [[nodiscard]] std::size_t n_points() const noexcept { return n_points_; }
    [[nodiscard]] const Eigen::MatrixXd &output_block() const noexcept { return m_; }
    [[nodiscard]] const Eigen::MatrixXd &state_block() const noexcept { return g_; }
    [[nodiscard]] double scale() const noexcept { return scale_; }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const;
    [[nodiscard]] Eigen::MatrixXd full() const;

  private:
    bool separable_ = true;
    std::size_t n_outputs_ = 0;
    std::size_t n_points_ = 0;
    Eigen::MatrixXd m_;
    Eigen::MatrixXd g_;
    Eigen::MatrixXd full_;
    double scale_ = 1.0;
};

struct GPPosterior {
    Eigen::MatrixXd mean;         ///< outputs x predicted points
    Eigen::MatrixXd covariance;   ///< flattened (i * n_pred + a)
    Eigen::VectorXd log_marginal; ///< per output channel, filled by marginal_predictive

    [[nodiscard]] double covariance_at(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const;
    /// outputs x predicted points
    [[nodiscard]] Eigen::MatrixXd variance() const;
};

/// Tr(rho rho').
double fidelity_kernel(const DensityMatrix &rho, const DensityMatrix &sigma);

/// Leading: M_ij = Tr(O_i O_j)/d, G_ab = Tr(rho_a rho_b), scale 1/d.
/// Exact: dense connected Haar 2-point function per entry.
KernelMatrix prior_kernel(const ObservableSet &obs, std::span<const DensityMatrix> states, KernelMode mode);

/// 1e-10 times the mean diagonal of the observed block.
double default_jitter(const KernelMatrix &k, std::size_t n_observed);

/// Conditions the prior on the observed labels. Jitter is added to the
/// diagonal of the observed state block (or of the dense observed block).
GPPosterior gp_posterior(const KernelMatrix &k, const ObservedSet &observed, const PredictionSet &predicted,
                         double jitter);

/// gp_posterior plus the per-channel log marginal likelihood of the labels.
GPPosterior marginal_predictive(const ObservedSet &observed, const PredictionSet &predicted, const KernelMatrix &k,
                                double jitter);

} // namespace qnngp
