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

#include "qnngp/gp_inference.hpp"

#include <cmath>
#include <numbers>

#include "qnngp/errors.hpp"
#include "qnngp/haar_moments.hpp"

namespace qnngp {

namespace {

void check_symmetric(const Eigen::MatrixXd &a, const char *what) {
    if (a.rows() != a.cols()) {
        throw DimensionMismatch(std::string(what) + " must be square");
    }
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ContractViolation(std::string(what) + " is not symmetric");
    }
}

void check_psd(const Eigen::MatrixXd &a, const char *what) {
    if (a.rows() == 0) {
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw ContractViolation(std::string(what) + " is not positive semidefinite");
    }
}

Eigen::VectorXi index_range(std::size_t n_outputs, std::size_t n_points, std::size_t first, std::size_t count) {
    Eigen::VectorXi idx(static_cast<Eigen::Index>(n_outputs * count));
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < n_outputs; ++i) {
        for (std::size_t a = 0; a < count; ++a) {
            idx(k++) = static_cast<int>(i * n_points + first + a);
        }
    }
    return idx;
}

Eigen::MatrixXd take(const Eigen::MatrixXd &a, const Eigen::VectorXi &rows, const Eigen::VectorXi &cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (Eigen::Index r = 0; r < rows.size(); ++r) {
        for (Eigen::Index c = 0; c < cols.size(); ++c) {
            out(r, c) = a(rows(r), cols(c));
        }
    }
    return out;
}

/// Cholesky of a (jittered) symmetric block; ConditioningError if it fails.
Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd &a) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw ConditioningError("observed kernel block is not positive definite", condition_number_symmetric(a));
    }
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    const double ratio = diag.maxCoeff() / diag.minCoeff();
    if (!std::isfinite(ratio) || ratio * ratio > 1e15) {
        throw ConditioningError("observed kernel block is numerically singular", condition_number_symmetric(a));
    }
    return llt;
}

} // namespace

KernelMatrix KernelMatrix::from_blocks(Eigen::MatrixXd output_block, Eigen::MatrixXd state_block, double scale) {
    check_symmetric(output_block, "output block");
    check_symmetric(state_block, "state block");
    check_psd(state_block, "state block");
    KernelMatrix k;
    k.separable_ = true;
    k.n_outputs_ = static_cast<std::size_t>(output_block.rows());
    k.n_points_ = static_cast<std::size_t>(state_block.rows());
    k.m_ = std::move(output_block);
    k.g_ = std::move(state_block);
    k.scale_ = scale;
    return k;
}

KernelMatrix KernelMatrix::from_dense(Eigen::MatrixXd full, std::size_t n_outputs, std::size_t n_points) {
    if (static_cast<std::size_t>(full.rows()) != n_outputs * n_points) {
        throw DimensionMismatch("dense kernel size differs from outputs x points");
    }
    check_symmetric(full, "kernel");
    check_psd(full, "kernel");
    KernelMatrix k;
    k.separable_ = false;
    k.n_outputs_ = n_outputs;
    k.n_points_ = n_points;
    k.full_ = std::move(full);
    return k;
}

double KernelMatrix::operator()(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    if (separable_) {
        return scale_ * m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
               g_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    return full_(static_cast<Eigen::Index>(i * n_points_ + a), static_cast<Eigen::Index>(j * n_points_ + b));
}

Eigen::MatrixXd KernelMatrix::full() const {
    if (!separable_) {
        return full_;
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_outputs_ * n_points_),
                        static_cast<Eigen::Index>(n_outputs_ * n_points_));
    for (std::size_t i = 0; i < n_outputs_; ++i) {
        for (std::size_t j = 0; j < n_outputs_; ++j) {
            out.block(static_cast<Eigen::Index>(i * n_points_), static_cast<Eigen::Index>(j * n_points_),
                      static_cast<Eigen::Index>(n_points_), static_cast<Eigen::Index>(n_points_)) =
                scale_ * m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * g_;
        }
    }
    return out;
}

double GPPosterior::covariance_at(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    const auto np = static_cast<std::size_t>(mean.cols());
    return covariance(static_cast<Eigen::Index>(i * np + a), static_cast<Eigen::Index>(j * np + b));
}

Eigen::MatrixXd GPPosterior::variance() const {
    Eigen::MatrixXd v(mean.rows(), mean.cols());
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
        for (Eigen::Index a = 0; a < mean.cols(); ++a) {
            v(i, a) = covariance(i * mean.cols() + a, i * mean.cols() + a);
        }
    }
    return v;
}

double fidelity_kernel(const DensityMatrix &rho, const DensityMatrix &sigma) {
    if (rho.dim() != sigma.dim()) {
        throw DimensionMismatch("fidelity kernel of states with different dimension");
    }
    return trace_product(rho.matrix(), sigma.matrix()).real();
}

KernelMatrix prior_kernel(const ObservableSet &obs, std::span<const DensityMatrix> states, KernelMode mode) {
    if (states.empty()) {
        throw InvalidDimension("prior kernel needs at least one state");
    }
    const std::size_t d = obs.dim();
    for (const auto &s : states) {
        if (s.dim() != d) {
            throw DimensionMismatch("states and observables differ in dimension");
        }
    }
    const auto n = static_cast<Eigen::Index>(obs.size());
    const auto np = static_cast<Eigen::Index>(states.size());
    if (mode == KernelMode::leading) {
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                m(i, j) = m(j, i) = trace_product(obs[static_cast<std::size_t>(i)].matrix(),
                                                  obs[static_cast<std::size_t>(j)].matrix())
                                        .real() /
                                    static_cast<double>(d);
            }
        }
        Eigen::MatrixXd g(np, np);
        for (Eigen::Index a = 0; a < np; ++a) {
            for (Eigen::Index b = 0; b <= a; ++b) {
                g(a, b) = g(b, a) =
                    fidelity_kernel(states[static_cast<std::size_t>(a)], states[static_cast<std::size_t>(b)]);
            }
        }
        return KernelMatrix::from_blocks(std::move(m), std::move(g), 1.0 / static_cast<double>(d));
    }
    Eigen::MatrixXd full(n * np, n * np);
    for (Eigen::Index r = 0; r < n * np; ++r) {
        for (Eigen::Index c = 0; c <= r; ++c) {
            MomentSpec spec({{states[static_cast<std::size_t>(r % np)], obs[static_cast<std::size_t>(r / np)]},
                             {states[static_cast<std::size_t>(c % np)], obs[static_cast<std::size_t>(c / np)]}});
            full(r, c) = full(c, r) = connected_moment(spec, 2);
        }
    }
    return KernelMatrix::from_dense(std::move(full), obs.size(), states.size());
}

double default_jitter(const KernelMatrix &k, std::size_t n_observed) {
    if (n_observed == 0) {
        return 0.0;
    }
    double tr = 0.0;
    if (k.separable()) {
        tr = k.state_block().topLeftCorner(static_cast<Eigen::Index>(n_observed), static_cast<Eigen::Index>(n_observed))
                 .trace();
        return 1e-10 * tr / static_cast<double>(n_observed);
    }
    for (std::size_t i = 0; i < k.n_outputs(); ++i) {
        for (std::size_t a = 0; a < n_observed; ++a) {
            tr += k(i, i, a, a);
        }
    }
    return 1e-10 * tr / static_cast<double>(n_observed * k.n_outputs());
}

GPPosterior gp_posterior(const KernelMatrix &k, const ObservedSet &observed, const PredictionSet &predicted,
                         double jitter) {
    const std::size_t no = observed.states.size();
    const std::size_t np = predicted.states.size();
    const std::size_t n = k.n_outputs();
    if (k.n_points() != no + np) {
        throw DimensionMismatch("kernel covers " + std::to_string(k.n_points()) + " points, expected " +
                                std::to_string(no + np));
    }
    if (static_cast<std::size_t>(observed.labels.cols()) != no ||
        (no > 0 && static_cast<std::size_t>(observed.labels.rows()) != n)) {
        throw DimensionMismatch("labels must be outputs x observed points");
    }
    if (!observed.labels.allFinite()) {
        throw ContractViolation("labels must be finite");
    }
    if (jitter < 0.0) {
        throw ContractViolation("jitter must be nonnegative");
    }
    GPPosterior post;
    post.mean = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(np));
    const auto eno = static_cast<Eigen::Index>(no);
    const auto enp = static_cast<Eigen::Index>(np);
    if (k.separable()) {
        const Eigen::MatrixXd &g = k.state_block();
        const Eigen::MatrixXd g_pp = g.bottomRightCorner(enp, enp);
        Eigen::MatrixXd cond = g_pp;
        if (no > 0) {
            Eigen::MatrixXd g_oo = g.topLeftCorner(eno, eno);
            g_oo.diagonal().array() += jitter;
            const Eigen::MatrixXd g_po = g.bottomLeftCorner(enp, eno);
            const auto llt = factorize(g_oo);
            // per output channel: m_i = G_po G_oo^-1 y_i
            post.mean = (g_po * llt.solve(observed.labels.transpose())).transpose();
            cond = g_pp - g_po * llt.solve(g_po.transpose());
        }
        cond = 0.5 * (cond + cond.transpose()).eval();
        post.covariance.resize(static_cast<Eigen::Index>(n) * enp, static_cast<Eigen::Index>(n) * enp);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
                post.covariance.block(i * enp, j * enp, enp, enp) = k.scale() * k.output_block()(i, j) * cond;
            }
        }
        return post;
    }
    const Eigen::MatrixXd full = k.full();
    const Eigen::VectorXi io = index_range(n, no + np, 0, no);
    const Eigen::VectorXi ip = index_range(n, no + np, no, np);
    Eigen::MatrixXd k_pp = take(full, ip, ip);
    if (no > 0) {
        Eigen::MatrixXd k_oo = take(full, io, io);
        k_oo.diagonal().array() += jitter;
        const Eigen::MatrixXd k_po = take(full, ip, io);
        const auto llt = factorize(k_oo);
        Eigen::VectorXd y(io.size());
        for (std::size_t i = 0; i < n; ++i) {
            y.segment(static_cast<Eigen::Index>(i) * eno, eno) = observed.labels.row(static_cast<Eigen::Index>(i)).transpose();
        }
        const Eigen::VectorXd m = k_po * llt.solve(y);
        for (std::size_t i = 0; i < n; ++i) {
            post.mean.row(static_cast<Eigen::Index>(i)) = m.segment(static_cast<Eigen::Index>(i) * enp, enp).transpose();
        }
        k_pp -= k_po * llt.solve(k_po.transpose());
    }
    post.covariance = 0.5 * (k_pp + k_pp.transpose());
    return post;
}

GPPosterior marginal_predictive(const ObservedSet &observed, const PredictionSet &predicted, const KernelMatrix &k,
                                double jitter) {
    GPPosterior post = gp_posterior(k, observed, predicted, jitter);
    const std::size_t no = observed.states.size();
    const std::size_t n = k.n_outputs();
    post.log_marginal = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (no == 0) {
        return post;
    }
    const auto eno = static_cast<Eigen::Index>(no);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::MatrixXd block(eno, eno);
        for (Eigen::Index a = 0; a < eno; ++a) {
            for (Eigen::Index b = 0; b < eno; ++b) {
                block(a, b) = k(i, i, static_cast<std::size_t>(a), static_cast<std::size_t>(b));
            }
        }
        if (k.separable()) {
            block.diagonal().array() += k.scale() * k.output_block()(static_cast<Eigen::Index>(i),
                                                                     static_cast<Eigen::Index>(i)) * jitter;
        } else {
            block.diagonal().array() += jitter;
        }
        const auto llt = factorize(block);
        const Eigen::VectorXd y = observed.labels.row(static_cast<Eigen::Index>(i)).transpose();
        const double quad = y.dot(llt.solve(y));
        const Eigen::MatrixXd l = llt.matrixL();
        const double logdet = 2.0 * l.diagonal().array().log().sum();
        post.log_marginal(static_cast<Eigen::Index>(i)) =
            -0.5 * quad - 0.5 * (logdet + static_cast<double>(no) * std::log(2.0 * std::numbers::pi));
    }
    return post;
}

} // namespace qnngp
