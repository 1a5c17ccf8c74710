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

#include "qnngp/near_gaussian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "qnngp/errors.hpp"
#include "qnngp/linalg.hpp"

namespace qnngp {

SymmetricTensor4::SymmetricTensor4(std::size_t n) : n_(n), data_(n * n * n * n, 0.0) {}

SymmetricTensor4::SymmetricTensor4(std::size_t n, const std::vector<double> &raw) : n_(n), data_(n * n * n * n) {
    if (raw.size() != data_.size()) {
        throw DimensionMismatch("raw tensor has " + std::to_string(raw.size()) + " entries, expected n^4");
    }
    auto idx = [n](std::array<std::size_t, 4> i) { return ((i[0] * n + i[1]) * n + i[2]) * n + i[3]; };
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                for (std::size_t d = 0; d < n; ++d) {
                    std::array<std::size_t, 4> i{a, b, c, d};
                    std::sort(i.begin(), i.end());
                    double s = 0.0;
                    int count = 0;
                    do {
                        s += raw[idx(i)];
                        ++count;
                    } while (std::next_permutation(i.begin(), i.end()));
                    // distinct orderings stand for 24 / count copies each, so the plain average is exact
                    data_[idx({a, b, c, d})] = s / count;
                }
            }
        }
    }
}

double SymmetricTensor4::max_abs() const {
    double m = 0.0;
    for (double v : data_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

double SymmetricTensor4::asymmetry() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < n_; ++a) {
        for (std::size_t b = 0; b < n_; ++b) {
            for (std::size_t c = 0; c < n_; ++c) {
                for (std::size_t d = 0; d < n_; ++d) {
                    std::array<std::size_t, 4> i{a, b, c, d};
                    const double ref = (*this)(a, b, c, d);
                    std::sort(i.begin(), i.end());
                    do {
                        worst = std::max(worst, std::abs((*this)(i[0], i[1], i[2], i[3]) - ref));
                    } while (std::next_permutation(i.begin(), i.end()));
                }
            }
        }
    }
    return worst;
}

SymmetricTensor4 SymmetricTensor4::transformed(const Eigen::MatrixXd &m) const {
    if (static_cast<std::size_t>(m.rows()) != n_ || static_cast<std::size_t>(m.cols()) != n_) {
        throw DimensionMismatch("leg transform must be n x n");
    }
    const std::size_t n = n_;
    std::vector<double> cur = data_;
    std::vector<double> next(cur.size());
    // Contract the last leg and rotate it to the front, four times.
    for (int leg = 0; leg < 4; ++leg) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t rest = 0; rest < n * n * n; ++rest) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    s += m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) * cur[rest * n + k];
                }
                next[a * n * n * n + rest] = s;
            }
        }
        std::swap(cur, next);
    }
    SymmetricTensor4 out(n);
    out.data_ = std::move(cur);
    return out;
}

Eigen::MatrixXd SymmetricTensor4::contract_pair(const Eigen::MatrixXd &k) const {
    if (static_cast<std::size_t>(k.rows()) != n_ || static_cast<std::size_t>(k.cols()) != n_) {
        throw DimensionMismatch("pair contraction needs an n x n matrix");
    }
    Eigen::MatrixXd w(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (std::size_t a = 0; a < n_; ++a) {
        for (std::size_t b = 0; b < n_; ++b) {
            double s = 0.0;
            for (std::size_t c = 0; c < n_; ++c) {
                for (std::size_t d = 0; d < n_; ++d) {
                    s += (*this)(a, b, c, d) * k(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
                }
            }
            w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
        }
    }
    return w;
}

SymmetricTensor4 SymmetricTensor4::scaled(double s) const {
    SymmetricTensor4 out(*this);
    for (double &v : out.data_) {
        v *= s;
    }
    return out;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd &k, const char *what) {
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
        throw ConditioningError(std::string(what) + " is not positive definite", condition_number_symmetric(k));
    }
    return llt;
}

bool is_perturbative(const Eigen::MatrixXd &k, const SymmetricTensor4 &v, double lambda) {
    if (v.n() == 0) {
        return true;
    }
    // compare the first-order shift of the covariance with the covariance itself
    const Eigen::MatrixXd shift = 0.5 * lambda * k * v.contract_pair(k) * k;
    return shift.norm() < 0.5 * k.norm();
}

} // namespace

QuarticAction make_action(Eigen::MatrixXd kernel, SymmetricTensor4 v, double lambda) {
    if (kernel.rows() == 0 || kernel.rows() != kernel.cols()) {
        throw DimensionMismatch("kernel must be a nonempty square matrix");
    }
    if (v.n() != static_cast<std::size_t>(kernel.rows())) {
        throw DimensionMismatch("quartic coupling size differs from kernel");
    }
    if ((kernel - kernel.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, kernel.cwiseAbs().maxCoeff())) {
        throw ContractViolation("kernel is not symmetric");
    }
    kernel = 0.5 * (kernel + kernel.transpose()).eval();
    spd_factor(kernel, "kernel");
    QuarticAction a;
    a.perturbative = is_perturbative(kernel, v, lambda);
    a.kernel = std::move(kernel);
    a.v = std::move(v);
    a.lambda = lambda;
    return a;
}

double action_evaluate(const QuarticAction &action, const Eigen::VectorXd &f) {
    const auto n = static_cast<std::size_t>(action.kernel.rows());
    if (static_cast<std::size_t>(f.size()) != n || action.v.n() != n) {
        throw DimensionMismatch("field size differs from the action");
    }
    const auto llt = spd_factor(action.kernel, "kernel");
    double quartic = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                for (std::size_t d = 0; d < n; ++d) {
                    quartic += action.v(a, b, c, d) * f(static_cast<Eigen::Index>(a)) *
                               f(static_cast<Eigen::Index>(b)) * f(static_cast<Eigen::Index>(c)) *
                               f(static_cast<Eigen::Index>(d));
                }
            }
        }
    }
    return 0.5 * f.dot(llt.solve(f)) + action.lambda / 24.0 * quartic;
}

SymmetricTensor4 predicted_connected_four(const QuarticAction &action) {
    return action.v.transformed(action.kernel).scaled(-action.lambda);
}

SymmetricTensor4 quartic_coupling_from_connected(const SymmetricTensor4 &vbar, const Eigen::MatrixXd &kernel,
                                                 double lambda) {
    if (lambda == 0.0) {
        throw ContractViolation("lambda must be nonzero");
    }
    const auto llt = spd_factor(kernel, "kernel");
    const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(kernel.rows(), kernel.cols()));
    return vbar.transformed(0.5 * (kinv + kinv.transpose())).scaled(-1.0 / lambda);
}

QuarticAction couplings_from_moments(const MomentSet &moments, double lambda) {
    const Eigen::MatrixXd &q = moments.second;
    if (moments.fourth_connected.n() != static_cast<std::size_t>(q.rows())) {
        throw DimensionMismatch("moment set sizes disagree");
    }
    Eigen::MatrixXd k = q;
    SymmetricTensor4 v = quartic_coupling_from_connected(moments.fourth_connected, k, lambda);
    // Fixed point of q = K - (lambda/2) K W(K) K with V tied to K.
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    for (int round = 0; round < 200; ++round) {
        Eigen::MatrixXd next = q + 0.5 * lambda * k * v.contract_pair(k) * k;
        next = 0.5 * (next + next.transpose()).eval();
        const double change = (next - k).cwiseAbs().maxCoeff();
        k = std::move(next);
        v = quartic_coupling_from_connected(moments.fourth_connected, k, lambda);
        if (!std::isfinite(change) || change <= 1e-15 * scale) {
            break;
        }
    }
    return make_action(std::move(k), std::move(v), lambda);
}

Eigen::MatrixXd corrected_covariance(const QuarticAction &action) {
    const Eigen::MatrixXd &k = action.kernel;
    Eigen::MatrixXd s = k - 0.5 * action.lambda * k * action.v.contract_pair(k) * k;
    return 0.5 * (s + s.transpose());
}

Eigen::VectorXd corrected_mean(const QuarticAction &action, const IndexPartition &part, const Eigen::VectorXd &y) {
    const auto n = static_cast<std::size_t>(action.kernel.rows());
    std::vector<bool> used(n, false);
    for (const auto *list : {&part.observed, &part.predicted}) {
        for (std::size_t i : *list) {
            if (i >= n || used[i]) {
                throw ContractViolation("partition indices must be distinct and in range");
            }
            used[i] = true;
        }
    }
    if (static_cast<std::size_t>(y.size()) != part.observed.size()) {
        throw DimensionMismatch("label count differs from observed indices");
    }
    std::vector<int> io(part.observed.begin(), part.observed.end());
    std::vector<int> ip(part.predicted.begin(), part.predicted.end());
    const Eigen::MatrixXd &k = action.kernel;
    const auto np = static_cast<Eigen::Index>(ip.size());
    Eigen::VectorXd m = Eigen::VectorXd::Zero(np);
    Eigen::MatrixXd schur = k(ip, ip);
    if (!io.empty()) {
        const Eigen::MatrixXd k_oo = k(io, io);
        const Eigen::MatrixXd k_po = k(ip, io);
        const auto llt = spd_factor(k_oo, "observed kernel block");
        m = k_po * llt.solve(y);
        schur -= k_po * llt.solve(k_po.transpose());
    }
    // Full-index forms: S_tilde nonzero only on P x P, c = (y, m).
    Eigen::MatrixXd st = Eigen::MatrixXd::Zero(k.rows(), k.cols());
    st(ip, ip) = schur;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(k.rows());
    c(io) = y;
    c(ip) = m;
    const std::size_t nn = n;
    Eigen::VectorXd cubic = Eigen::VectorXd::Zero(k.rows()); // sum V_acde c_c c_d c_e
    for (std::size_t a = 0; a < nn; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < nn; ++b) {
            for (std::size_t cc = 0; cc < nn; ++cc) {
                const double cbc = c(static_cast<Eigen::Index>(b)) * c(static_cast<Eigen::Index>(cc));
                if (cbc == 0.0) {
                    continue;
                }
                for (std::size_t d = 0; d < nn; ++d) {
                    s += action.v(a, b, cc, d) * cbc * c(static_cast<Eigen::Index>(d));
                }
            }
        }
        cubic(static_cast<Eigen::Index>(a)) = s;
    }
    const Eigen::VectorXd linear = action.v.contract_pair(st) * c; // sum V_acde S_cd c_e
    const Eigen::VectorXd full =
        c - action.lambda / 6.0 * (st * cubic) - action.lambda / 2.0 * (st * linear);
    return full(ip);
}

GaussianityReport gaussianity_diagnostics(const Eigen::MatrixXd &samples, const std::vector<std::string> &labels) {
    if (samples.rows() < 1000) {
        throw InvalidDimension("Gaussianity diagnostics need at least 1000 samples");
    }
    if (labels.size() != static_cast<std::size_t>(samples.cols())) {
        throw DimensionMismatch("one label per column required");
    }
    GaussianityReport r;
    r.labels = labels;
    const Eigen::Index m = samples.cols();
    const Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
    const Eigen::VectorXd var = centered.array().square().colwise().mean().transpose();
    r.pairwise = Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < m; ++i) {
        KurtosisEstimate k = excess_kurtosis(samples.col(i));
        r.flagged.push_back(!k.degenerate && std::abs(k.value) > 4.0 * k.std_error);
        if (k.degenerate) {
            r.degenerate.push_back(static_cast<std::size_t>(i));
        } else {
            r.max_abs_kurtosis = std::max(r.max_abs_kurtosis, std::abs(k.value));
        }
        r.kurtosis.push_back(k);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            if (r.kurtosis[static_cast<std::size_t>(i)].degenerate || r.kurtosis[static_cast<std::size_t>(j)].degenerate) {
                continue;
            }
            const Eigen::ArrayXd xi = centered.col(i).array();
            const Eigen::ArrayXd xj = centered.col(j).array();
            const double cij = (xi * xj).mean();
            const double k4 = (xi.square() * xj.square()).mean() - var(i) * var(j) - 2.0 * cij * cij;
            r.pairwise(i, j) = r.pairwise(j, i) = k4 / (var(i) * var(j));
        }
    }
    return r;
}

} // namespace qnngp
