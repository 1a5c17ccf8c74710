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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/circuit.hpp"
#include "qnngp/gp_inference.hpp"
#include "qnngp/stats.hpp"

namespace qnngp {

enum class GradientMethod {
    parameter_shift,   ///< exact two-term rule, needs X^2 = I
    central_difference ///< 5-point stencil, h = 1e-4
};

/// d f_{i,a} / d theta_mu.
class GradientTensor {
  public:
    GradientTensor(std::size_t n_outputs, std::size_t n_points, std::size_t n_params);

    [[nodiscard]] std::size_t n_outputs() const noexcept { return n_outputs_; }
    [[nodiscard]] std::size_t n_points() const noexcept { return n_points_; }
    [[nodiscard]] std::size_t n_params() const noexcept { return static_cast<std::size_t>(j_.cols()); }
    [[nodiscard]] double &operator()(std::size_t i, std::size_t a, std::size_t mu) {
        return j_(static_cast<Eigen::Index>(i * n_points_ + a), static_cast<Eigen::Index>(mu));
    }
    [[nodiscard]] double operator()(std::size_t i, std::size_t a, std::size_t mu) const {
        return j_(static_cast<Eigen::Index>(i * n_points_ + a), static_cast<Eigen::Index>(mu));
    }
    /// Rows are flattened (i * n_points + a), columns parameters.
    [[nodiscard]] const Eigen::MatrixXd &jacobian() const noexcept { return j_; }

  private:
    std::size_t n_outputs_;
    std::size_t n_points_;
    Eigen::MatrixXd j_;
};

/// Gradient of every output at every state. Parameter columns run in parallel.
GradientTensor parameter_shift_gradient(const CircuitSpec &spec, const ParameterVector &theta,
                                        std::span<const DensityMatrix> states, const ObservableSet &obs,
                                        GradientMethod method = GradientMethod::parameter_shift,
                                        Execution exec = Execution::parallel);

/// Mixed derivative d^k f / d theta_{mu_1} ... d theta_{mu_k} by nested exact
/// shifts (2^k evaluations). Rows are observables, columns states.
Eigen::MatrixXd shifted_derivative(const CircuitSpec &spec, const ParameterVector &theta,
                                   std::span<const DensityMatrix> states, const ObservableSet &obs,
                                   std::span<const std::size_t> indices);

/// Gram matrix J J^T of a gradient tensor, flattened like the Jacobian rows.
Eigen::MatrixXd qntk(const GradientTensor &grad);
Eigen::MatrixXd qntk(const CircuitSpec &spec, const ParameterVector &theta, std::span<const DensityMatrix> states,
                     const ObservableSet &obs, Execution exec = Execution::parallel);

/// Closed-form Haar average of one QNTK entry:
/// 2 [Tr(O_i O_j) Tr(r_a r_b) - Tr O_i Tr O_j Tr r_a Tr r_b] Tr(X_mu X_nu) / ((d-1)(d+1)^2).
double haar_averaged_qntk(const HermitianObservable &oi, const HermitianObservable &oj, const DensityMatrix &ra,
                          const DensityMatrix &rb, const HermitianObservable &xmu, const HermitianObservable &xnu);
/// (c / d^2) Tr(O_i O_j) Tr(r_a r_b) with c = Tr(X_mu X_nu) / d.
double haar_averaged_qntk_leading(const HermitianObservable &oi, const HermitianObservable &oj,
                                  const DensityMatrix &ra, const DensityMatrix &rb, const HermitianObservable &xmu,
                                  const HermitianObservable &xnu);

struct TrainingTrajectory {
    double eta = 0.0;
    std::vector<ParameterVector> theta; ///< one per step, step 0 first
    std::vector<Eigen::MatrixXd> f;     ///< outputs x observed points
    std::vector<double> loss;
    bool diverged = false;
};

/// Full-batch gradient descent on 1/2 sum (f - y)^2 for the given number of
/// steps. Stops early, flagging divergence, if the loss exceeds 1e6 times its
/// initial value.
TrainingTrajectory gradient_descent_train(const CircuitSpec &spec, const ParameterVector &theta0,
                                          const ObservedSet &observed, const ObservableSet &obs, double eta,
                                          std::size_t steps, Execution exec = Execution::parallel);

struct LinearizedPrediction {
    Eigen::MatrixXd observed;   ///< outputs x observed points, includes the f0 transient
    Eigen::MatrixXd predicted;  ///< outputs x predicted points, includes the f0 transient
    Eigen::MatrixXd mean;       ///< outputs x predicted points, label-driven part only
    Eigen::MatrixXd covariance; ///< flattened over predicted points (i * n_pred + a)
};

/// Frozen-kernel gradient flow df/dt = -eta Q (f - y) on the observed points,
/// propagated to the predicted points. q is flattened as in KernelMatrix with
/// observed points first; f0 is outputs x all points. t may be +infinity.
LinearizedPrediction linearized_dynamics(const Eigen::MatrixXd &q, const Eigen::MatrixXd &f0,
                                         const Eigen::MatrixXd &y, double eta, double t, std::size_t n_observed,
                                         double jitter = 0.0);

/// theta0 - eta J^T Q^-1 (f - y); j has one row per flattened observed output.
ParameterVector theta_star(const ParameterVector &theta0, const Eigen::MatrixXd &j, const Eigen::MatrixXd &q,
                           const Eigen::VectorXd &f, const Eigen::VectorXd &y, double eta);

enum class MetaKernelOrder { dqntk, ddqntk };

struct MetaKernelEstimate {
    MetaKernelOrder order = MetaKernelOrder::dqntk;
    MomentEstimate estimate;
};

/// Monte Carlo over random circuits of the contracted derivative correlators
///   dQNTK:  sum_{mu nu} E[d2f_{mu nu} df_mu df_nu]
///   ddQNTK: sum_{mu nu la} E[d3f_{mu nu la} df_mu df_nu df_la]
///         + sum_{mu nu la} E[d2f_{mu nu} d2f_{nu la} df_mu df_la]
/// for one observable and one input state.
MetaKernelEstimate meta_kernel_estimate(const CircuitFamily &family, MetaKernelOrder order,
                                        const DensityMatrix &rho, const HermitianObservable &obs,
                                        std::size_t n_samples, std::uint64_t seed,
                                        Execution exec = Execution::parallel);

} // namespace qnngp
