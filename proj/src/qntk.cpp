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

#include "qnngp/qntk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "parallel.hpp"
#include "qnngp/errors.hpp"

namespace qnngp {

GradientTensor::GradientTensor(std::size_t n_outputs, std::size_t n_points, std::size_t n_params)
    : n_outputs_(n_outputs), n_points_(n_points),
      j_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_outputs * n_points), static_cast<Eigen::Index>(n_params))) {}

namespace {

ComplexMatrix gate(const HermitianObservable &x, double theta) {
    if (x.involutory()) {
        ComplexMatrix g = cplx(0.0, std::sin(theta)) * x.matrix();
        g.diagonal().array() += std::cos(theta);
        return g;
    }
    return expm_hermitian_generator(x, theta).matrix();
}

void check_inputs(const CircuitSpec &spec, const ParameterVector &theta, std::span<const DensityMatrix> states,
                  const ObservableSet &obs) {
    if (static_cast<std::size_t>(theta.size()) != spec.depth()) {
        throw ArityError("parameter count differs from circuit depth");
    }
    if (obs.dim() != spec.dim()) {
        throw DimensionMismatch("observable dimension differs from circuit");
    }
    for (const auto &s : states) {
        if (s.dim() != spec.dim()) {
            throw DimensionMismatch("state dimension differs from circuit");
        }
    }
}

/// f for one layer angle with everything else fixed: Tr(G s G^dagger o).
double layer_output(const HermitianObservable &x, double theta, const ComplexMatrix &s, const ComplexMatrix &o) {
    const ComplexMatrix g = gate(x, theta);
    return trace_product(g * s * g.adjoint(), o).real();
}

} // namespace

GradientTensor parameter_shift_gradient(const CircuitSpec &spec, const ParameterVector &theta,
                                        std::span<const DensityMatrix> states, const ObservableSet &obs,
                                        GradientMethod method, Execution exec) {
    check_inputs(spec, theta, states, obs);
    const std::size_t depth = spec.depth();
    if (method == GradientMethod::parameter_shift) {
        for (const auto &l : spec.layers()) {
            if (!l.x().involutory()) {
                throw ContractViolation("parameter-shift rule needs generators with X^2 = I; use central differences");
            }
        }
    }
    const auto d = static_cast<Eigen::Index>(spec.dim());
    // prefix[mu] = W_mu U_{<mu}; suffix[mu] = everything after gate mu.
    std::vector<ComplexMatrix> prefix(depth);
    std::vector<ComplexMatrix> suffix(depth);
    ComplexMatrix acc = ComplexMatrix::Identity(d, d);
    for (std::size_t mu = 0; mu < depth; ++mu) {
        prefix[mu] = spec.layer(mu).w().matrix() * acc;
        acc = gate(spec.layer(mu).x(), theta(static_cast<Eigen::Index>(mu))) * prefix[mu];
    }
    acc = ComplexMatrix::Identity(d, d);
    for (std::size_t k = depth; k-- > 0;) {
        suffix[k] = acc;
        acc = acc * gate(spec.layer(k).x(), theta(static_cast<Eigen::Index>(k))) * spec.layer(k).w().matrix();
    }
    GradientTensor grad(obs.size(), states.size(), depth);
    detail::for_each_index(depth, exec, [&](std::size_t mu) {
        const HermitianObservable &x = spec.layer(mu).x();
        const double t = theta(static_cast<Eigen::Index>(mu));
        std::vector<ComplexMatrix> o_back;
        for (const auto &o : obs) {
            o_back.push_back(suffix[mu].adjoint() * o.matrix() * suffix[mu]);
        }
        for (std::size_t a = 0; a < states.size(); ++a) {
            const ComplexMatrix s = prefix[mu] * states[a].matrix() * prefix[mu].adjoint();
            for (std::size_t i = 0; i < obs.size(); ++i) {
                if (obs[i].is_scalar()) {
                    grad(i, a, mu) = 0.0;
                    continue;
                }
                auto f = [&](double shift) { return layer_output(x, t + shift, s, o_back[i]); };
                double g;
                if (method == GradientMethod::parameter_shift) {
                    constexpr double q = std::numbers::pi / 4.0;
                    g = f(q) - f(-q);
                } else {
                    constexpr double h = 1e-4;
                    g = (-f(2 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2 * h)) / (12.0 * h);
                }
                grad(i, a, mu) = g;
            }
        }
    });
    return grad;
}

Eigen::MatrixXd shifted_derivative(const CircuitSpec &spec, const ParameterVector &theta,
                                   std::span<const DensityMatrix> states, const ObservableSet &obs,
                                   std::span<const std::size_t> indices) {
    check_inputs(spec, theta, states, obs);
    for (std::size_t mu : indices) {
        if (mu >= spec.depth()) {
            throw ArityError("derivative index out of range");
        }
        if (!spec.layer(mu).x().involutory()) {
            throw ContractViolation("nested shifts need generators with X^2 = I");
        }
    }
    const std::size_t k = indices.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(obs.size()),
                                                static_cast<Eigen::Index>(states.size()));
    for (unsigned signs = 0; signs < (1u << k); ++signs) {
        ParameterVector shifted = theta;
        double sign = 1.0;
        for (std::size_t b = 0; b < k; ++b) {
            const bool minus = signs & (1u << b);
            shifted(static_cast<Eigen::Index>(indices[b])) += (minus ? -1.0 : 1.0) * std::numbers::pi / 4.0;
            sign *= minus ? -1.0 : 1.0;
        }
        out += sign * model_outputs(build_unitary(spec, shifted).matrix(), states, obs);
    }
    return out;
}

Eigen::MatrixXd qntk(const GradientTensor &grad) {
    const Eigen::MatrixXd &j = grad.jacobian();
    Eigen::MatrixXd q = j * j.transpose();
    return 0.5 * (q + q.transpose());
}

Eigen::MatrixXd qntk(const CircuitSpec &spec, const ParameterVector &theta, std::span<const DensityMatrix> states,
                     const ObservableSet &obs, Execution exec) {
    return qntk(parameter_shift_gradient(spec, theta, states, obs, GradientMethod::parameter_shift, exec));
}

double haar_averaged_qntk(const HermitianObservable &oi, const HermitianObservable &oj, const DensityMatrix &ra,
                          const DensityMatrix &rb, const HermitianObservable &xmu, const HermitianObservable &xnu) {
    const std::size_t dim = oi.dim();
    if (dim < 2) {
        throw InvalidDimension("averaged QNTK needs d >= 2");
    }
    if (oj.dim() != dim || ra.dim() != dim || rb.dim() != dim || xmu.dim() != dim || xnu.dim() != dim) {
        throw DimensionMismatch("averaged QNTK operands differ in dimension");
    }
    const double d = static_cast<double>(dim);
    const double bracket = trace_product(oi.matrix(), oj.matrix()).real() * fidelity_kernel(ra, rb) -
                           oi.matrix().trace().real() * oj.matrix().trace().real() *
                               ra.matrix().trace().real() * rb.matrix().trace().real();
    const double txx = trace_product(xmu.matrix(), xnu.matrix()).real();
    return 2.0 * d / ((d - 1.0) * (d + 1.0) * (d * d + d)) * bracket * txx;
}

double haar_averaged_qntk_leading(const HermitianObservable &oi, const HermitianObservable &oj,
                                  const DensityMatrix &ra, const DensityMatrix &rb, const HermitianObservable &xmu,
                                  const HermitianObservable &xnu) {
    const double d = static_cast<double>(oi.dim());
    const double c = trace_product(xmu.matrix(), xnu.matrix()).real() / d;
    return c / (d * d) * trace_product(oi.matrix(), oj.matrix()).real() * fidelity_kernel(ra, rb);
}

TrainingTrajectory gradient_descent_train(const CircuitSpec &spec, const ParameterVector &theta0,
                                          const ObservedSet &observed, const ObservableSet &obs, double eta,
                                          std::size_t steps, Execution exec) {
    if (!(eta >= 0.0)) {
        throw ContractViolation("learning rate must be nonnegative");
    }
    if (static_cast<std::size_t>(observed.labels.rows()) != obs.size() ||
        static_cast<std::size_t>(observed.labels.cols()) != observed.states.size()) {
        throw DimensionMismatch("labels must be outputs x observed points");
    }
    TrainingTrajectory traj;
    traj.eta = eta;
    ParameterVector theta = theta0;
    const std::span<const DensityMatrix> states(observed.states);
    for (std::size_t step = 0;; ++step) {
        Eigen::MatrixXd f = model_outputs(build_unitary(spec, theta).matrix(), states, obs);
        const Eigen::MatrixXd r = f - observed.labels;
        const double loss = 0.5 * r.squaredNorm();
        traj.theta.push_back(theta);
        traj.f.push_back(f);
        traj.loss.push_back(loss);
        if (traj.loss.front() > 0.0 && loss > 1e6 * traj.loss.front()) {
            traj.diverged = true;
            break;
        }
        if (step == steps) {
            break;
        }
        const GradientTensor g =
            parameter_shift_gradient(spec, theta, states, obs, GradientMethod::parameter_shift, exec);
        // residual flattened like the Jacobian rows: i * n_points + a
        Eigen::VectorXd rf(r.size());
        for (Eigen::Index i = 0; i < r.rows(); ++i) {
            rf.segment(i * r.cols(), r.cols()) = r.row(i).transpose();
        }
        theta -= eta * (g.jacobian().transpose() * rf);
    }
    return traj;
}

namespace {

Eigen::VectorXd flatten_rows(const Eigen::MatrixXd &m) {
    Eigen::VectorXd v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        v.segment(i * m.cols(), m.cols()) = m.row(i).transpose();
    }
    return v;
}

Eigen::MatrixXd unflatten_rows(const Eigen::VectorXd &v, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        m.row(i) = v.segment(i * cols, cols).transpose();
    }
    return m;
}

} // namespace

LinearizedPrediction linearized_dynamics(const Eigen::MatrixXd &q, const Eigen::MatrixXd &f0,
                                         const Eigen::MatrixXd &y, double eta, double t, std::size_t n_observed,
                                         double jitter) {
    const Eigen::Index n = f0.rows();
    const Eigen::Index npts = f0.cols();
    const auto no = static_cast<Eigen::Index>(n_observed);
    const Eigen::Index np = npts - no;
    if (no < 1 || np < 0) {
        throw DimensionMismatch("need at least one observed point");
    }
    if (q.rows() != n * npts || q.cols() != n * npts) {
        throw DimensionMismatch("kernel size differs from outputs x points");
    }
    if (y.rows() != n || y.cols() != no) {
        throw DimensionMismatch("labels must be outputs x observed points");
    }
    if (!(t >= 0.0) || !(eta >= 0.0)) {
        throw ContractViolation("time and learning rate must be nonnegative");
    }
    std::vector<int> io;
    std::vector<int> ip;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index a = 0; a < npts; ++a) {
            (a < no ? io : ip).push_back(static_cast<int>(i * npts + a));
        }
    }
    Eigen::MatrixXd q_oo = q(io, io);
    q_oo.diagonal().array() += jitter;
    const Eigen::MatrixXd q_po = q(ip, io);
    const Eigen::MatrixXd q_pp = q(ip, ip);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (q_oo + q_oo.transpose()));
    const Eigen::VectorXd &lam = es.eigenvalues();
    const double cond = lam.maxCoeff() / lam.minCoeff();
    if (!(lam.minCoeff() > 0.0) || cond > 1e15) {
        throw ConditioningError("frozen kernel on the observed points is singular",
                                lam.minCoeff() > 0.0 ? cond : std::numeric_limits<double>::infinity());
    }
    const Eigen::MatrixXd &v = es.eigenvectors();
    Eigen::VectorXd decay(lam.size());
    Eigen::VectorXd gain(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        // exp(-eta lambda t) with inf * 0 read as no decay
        const double x = eta * lam(k) * t;
        decay(k) = (eta == 0.0 || t == 0.0) ? 1.0 : std::exp(-x);
        gain(k) = (1.0 - decay(k)) / lam(k);
    }
    const Eigen::MatrixXd e = v * decay.asDiagonal() * v.transpose();
    const Eigen::MatrixXd a = v * gain.asDiagonal() * v.transpose();

    const Eigen::VectorXd y_flat = flatten_rows(y);
    const Eigen::VectorXd f0_o = flatten_rows(f0.leftCols(no));
    const Eigen::VectorXd f0_p = flatten_rows(f0.rightCols(np));
    const Eigen::VectorXd resid = f0_o - y_flat;

    LinearizedPrediction out;
    out.observed = unflatten_rows(y_flat + e * resid, n, no);
    out.predicted = unflatten_rows(f0_p - q_po * (a * resid), n, np);
    out.mean = unflatten_rows(q_po * (a * y_flat), n, np);
    const Eigen::MatrixXd pa = q_po * a;
    Eigen::MatrixXd cov = q_pp - pa * q_po.transpose() - q_po * pa.transpose() + pa * q_oo * pa.transpose();
    out.covariance = 0.5 * (cov + cov.transpose());
    return out;
}

ParameterVector theta_star(const ParameterVector &theta0, const Eigen::MatrixXd &j, const Eigen::MatrixXd &q,
                           const Eigen::VectorXd &f, const Eigen::VectorXd &y, double eta) {
    if (j.cols() != theta0.size() || j.rows() != f.size() || f.size() != y.size() || q.rows() != f.size() ||
        q.cols() != f.size()) {
        throw DimensionMismatch("theta_star operand shapes disagree");
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(q);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
        throw ConditioningError("kernel is not invertible", condition_number_symmetric(q));
    }
    return theta0 - eta * j.transpose() * ldlt.solve(f - y);
}

MetaKernelEstimate meta_kernel_estimate(const CircuitFamily &family, MetaKernelOrder order,
                                        const DensityMatrix &rho, const HermitianObservable &obs,
                                        std::size_t n_samples, std::uint64_t seed, Execution exec) {
    if (n_samples < 2) {
        throw InvalidDimension("meta-kernel estimates need at least two samples");
    }
    const std::size_t depth = family.depth;
    const ObservableSet oset({obs});
    const std::span<const DensityMatrix> states(&rho, 1);
    Eigen::VectorXd values(static_cast<Eigen::Index>(n_samples));
    const SeedStream seeds(seed);
    detail::for_each_index(n_samples, exec, [&](std::size_t s) {
        auto rng = seeds.substream("meta-sample", s);
        const RandomCircuit rc = random_circuit(family.n_qubits, depth, rng);
        auto deriv = [&](std::vector<std::size_t> idx) {
            return shifted_derivative(rc.spec, rc.theta, states, oset, idx)(0, 0);
        };
        const auto L = static_cast<Eigen::Index>(depth);
        Eigen::VectorXd g(L);
        for (Eigen::Index mu = 0; mu < L; ++mu) {
            g(mu) = deriv({static_cast<std::size_t>(mu)});
        }
        Eigen::MatrixXd h(L, L);
        for (Eigen::Index mu = 0; mu < L; ++mu) {
            for (Eigen::Index nu = 0; nu <= mu; ++nu) {
                h(mu, nu) = h(nu, mu) = deriv({static_cast<std::size_t>(nu), static_cast<std::size_t>(mu)});
            }
        }
        double v = 0.0;
        if (order == MetaKernelOrder::dqntk) {
            v = g.dot(h * g);
        } else {
            const Eigen::VectorXd hg = h * g;
            v = hg.dot(hg);
            for (Eigen::Index a = 0; a < L; ++a) {
                for (Eigen::Index b = a; b < L; ++b) {
                    for (Eigen::Index c = b; c < L; ++c) {
                        const double t3 = deriv({static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                                                 static_cast<std::size_t>(c)});
                        // number of distinct orderings of (a, b, c)
                        const double mult = (a == b && b == c) ? 1.0 : (a == b || b == c) ? 3.0 : 6.0;
                        v += mult * t3 * g(a) * g(b) * g(c);
                    }
                }
            }
        }
        values(static_cast<Eigen::Index>(s)) = v;
    });
    return {order, mean_estimate(values)};
}

} // namespace qnngp
