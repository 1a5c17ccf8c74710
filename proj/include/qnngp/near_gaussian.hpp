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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/stats.hpp"

namespace qnngp {

/// Fully symmetric 4-index array over a flattened (output, point) axis.
class SymmetricTensor4 {
  public:
    /// Zero tensor.
    explicit SymmetricTensor4(std::size_t n = 0);
    /// Symmetrizes raw row-major data of size n^4 over all 24 index orders.
    SymmetricTensor4(std::size_t n, const std::vector<double> &raw);

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] double operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
        return data_[((a * n_ + b) * n_ + c) * n_ + d];
    }
    [[nodiscard]] const std::vector<double> &data() const noexcept { return data_; }
    [[nodiscard]] double max_abs() const;
    /// Largest deviation from full index symmetry; 0 up to roundoff by construction.
    [[nodiscard]] double asymmetry() const;

    /// Every leg contracted with m: T'_{abcd} = sum m_{aa'} m_{bb'} m_{cc'} m_{dd'} T_{a'b'c'd'}.
    [[nodiscard]] SymmetricTensor4 transformed(const Eigen::MatrixXd &m) const;
    /// W_{ab} = sum_{cd} T_{abcd} k_{cd}
    [[nodiscard]] Eigen::MatrixXd contract_pair(const Eigen::MatrixXd &k) const;
    [[nodiscard]] SymmetricTensor4 scaled(double s) const;

  private:
    std::size_t n_;
    std::vector<double> data_;
};

/// S(f) = 1/2 f^T K^-1 f + (lambda / 4!) sum V_{abcd} f_a f_b f_c f_d.
///
/// kernel holds K_{ab}, the Gaussian-part covariance; the quadratic coupling
/// of the action is its inverse.
struct QuarticAction {
    Eigen::MatrixXd kernel;
    SymmetricTensor4 v;
    double lambda = 1.0;
    bool perturbative = true; ///< false when |lambda V K^2| is not small
};

/// Validates shapes, symmetry and positive definiteness.
QuarticAction make_action(Eigen::MatrixXd kernel, SymmetricTensor4 v, double lambda = 1.0);

struct MomentSet {
    enum class Source { analytic, monte_carlo };
    Eigen::MatrixXd second;            ///< Q
    SymmetricTensor4 fourth_connected; ///< connected 4-point array
    Source source = Source::analytic;
};

double action_evaluate(const QuarticAction &action, const Eigen::VectorXd &f);

/// Connected 4-point function to first order: -lambda V contracted with K on every leg.
SymmetricTensor4 predicted_connected_four(const QuarticAction &action);

/// Exact inverse of predicted_connected_four for a given K.
SymmetricTensor4 quartic_coupling_from_connected(const SymmetricTensor4 &vbar, const Eigen::MatrixXd &kernel,
                                                 double lambda = 1.0);

/// Two rounds of V = -(1/lambda) Vbar (K^-1)^4, K = Q + (lambda/2) V.KKK, starting at K = Q.
QuarticAction couplings_from_moments(const MomentSet &moments, double lambda = 1.0);

/// Sigma' = K - (lambda/2) K W K, W_{ab} = sum_{cd} V_{abcd} K_{cd}.
Eigen::MatrixXd corrected_covariance(const QuarticAction &action);

/// Flattened indices conditioned on (observed) and predicted.
struct IndexPartition {
    std::vector<std::size_t> observed;
    std::vector<std::size_t> predicted;
};

/// First-order mean of the predicted components given f_observed = y.
///
/// With m = K_PO K_OO^-1 y, S the Schur complement on P (zero elsewhere) and
/// c = (y on O, m on P):
///   E[f_b] = m_b - (lambda/6) S_ba V_acde c_c c_d c_e - (lambda/2) S_ba S_cd V_acde c_e.
Eigen::VectorXd corrected_mean(const QuarticAction &action, const IndexPartition &part, const Eigen::VectorXd &y);

struct GaussianityReport {
    std::vector<std::string> labels;
    std::vector<KurtosisEstimate> kurtosis;
    /// kappa(i,i,j,j) / (var_i var_j); the diagonal is the excess kurtosis.
    Eigen::MatrixXd pairwise;
    std::vector<bool> flagged;           ///< |kurtosis| > 4 SE
    std::vector<std::size_t> degenerate; ///< zero-variance columns
    double max_abs_kurtosis = 0.0;
};

/// Rows are samples; needs at least 1000 of them.
GaussianityReport gaussianity_diagnostics(const Eigen::MatrixXd &samples, const std::vector<std::string> &labels);

} // namespace qnngp
