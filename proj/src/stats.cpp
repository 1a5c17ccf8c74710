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

#include "qnngp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qnngp/errors.hpp"

namespace qnngp {

MomentEstimate mean_estimate(const Eigen::Ref<const Eigen::VectorXd> &x) {
    const auto n = x.size();
    if (n == 0) {
        throw InvalidDimension("mean of an empty sample");
    }
    const double mu = x.mean();
    double se = 0.0;
    if (n > 1) {
        const double var = (x.array() - mu).square().sum() / static_cast<double>(n - 1);
        se = std::sqrt(var / static_cast<double>(n));
    }
    return {mu, se, static_cast<std::size_t>(n)};
}

MomentEstimate jackknife(const Eigen::MatrixXd &samples,
                         const std::function<double(const Eigen::VectorXd &)> &f, std::size_t blocks) {
    const auto n = static_cast<std::size_t>(samples.rows());
    if (n == 0) {
        throw InvalidDimension("jackknife of an empty sample");
    }
    const Eigen::VectorXd total = samples.colwise().sum().transpose();
    const double value = f(total / static_cast<double>(n));
    const std::size_t b = std::min(blocks, n);
    if (b < 2) {
        return {value, 0.0, n};
    }
    std::vector<double> theta(b);
    for (std::size_t k = 0; k < b; ++k) {
        const std::size_t lo = k * n / b;
        const std::size_t hi = (k + 1) * n / b;
        Eigen::VectorXd block = samples
                                    .middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo))
                                    .colwise()
                                    .sum()
                                    .transpose();
        theta[k] = f((total - block) / static_cast<double>(n - (hi - lo)));
    }
    double mean = 0.0;
    for (double t : theta) {
        mean += t;
    }
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (double t : theta) {
        ss += (t - mean) * (t - mean);
    }
    const double se = std::sqrt(static_cast<double>(b - 1) / static_cast<double>(b) * ss);
    return {value, se, n};
}

namespace {

double kurtosis_from_sums(double n, double s1, double s2, double s3, double s4) {
    const double mu = s1 / n;
    const double r2 = s2 / n;
    const double r3 = s3 / n;
    const double r4 = s4 / n;
    const double m2 = r2 - mu * mu;
    const double m4 = r4 - 4.0 * mu * r3 + 6.0 * mu * mu * r2 - 3.0 * mu * mu * mu * mu;
    return m4 / (m2 * m2) - 3.0;
}

} // namespace

KurtosisEstimate excess_kurtosis(const Eigen::Ref<const Eigen::VectorXd> &x) {
    const auto n = static_cast<std::size_t>(x.size());
    KurtosisEstimate out;
    out.n_samples = n;
    if (n < 4) {
        throw InvalidDimension("kurtosis needs at least 4 samples");
    }
    // Center first so the power sums do not cancel catastrophically.
    const Eigen::ArrayXd c = x.array() - x.mean();
    const double scale = c.abs().maxCoeff();
    if (!(scale > 0.0) || c.square().mean() <= 1e-28 * (x.array().abs().maxCoeff() + 1.0)) {
        out.degenerate = true;
        out.value = std::numeric_limits<double>::quiet_NaN();
        out.std_error = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const Eigen::ArrayXd z = c / scale;
    const Eigen::ArrayXd z2 = z.square();
    const double s1 = z.sum();
    const double s2 = z2.sum();
    const double s3 = (z2 * z).sum();
    const double s4 = z2.square().sum();
    const double dn = static_cast<double>(n);
    out.value = kurtosis_from_sums(dn, s1, s2, s3, s4);
    double mean = 0.0;
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double zi = z(static_cast<Eigen::Index>(i));
        const double zi2 = zi * zi;
        loo[i] = kurtosis_from_sums(dn - 1.0, s1 - zi, s2 - zi2, s3 - zi2 * zi, s4 - zi2 * zi2);
        mean += loo[i];
    }
    mean /= dn;
    double ss = 0.0;
    for (double v : loo) {
        ss += (v - mean) * (v - mean);
    }
    out.std_error = std::sqrt((dn - 1.0) / dn * ss);
    return out;
}

LinearFit linear_fit(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw DimensionMismatch("linear fit needs matching vectors with at least 2 points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

LinearFit loglog_fit(const std::vector<double> &x, const std::vector<double> &y) {
    std::vector<double> lx(x.size());
    std::vector<double> ly(y.size());
    std::transform(x.begin(), x.end(), lx.begin(), [](double v) { return std::log(v); });
    std::transform(y.begin(), y.end(), ly.begin(), [](double v) { return std::log(std::abs(v)); });
    return linear_fit(lx, ly);
}

double z_score(const MomentEstimate &a, const MomentEstimate &b) {
    const double se = std::hypot(a.std_error, b.std_error);
    const double diff = a.value - b.value;
    if (se == 0.0) {
        return std::abs(diff) < 1e-12 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    return diff / se;
}

double z_score(const MomentEstimate &a, double exact) { return z_score(a, MomentEstimate{exact, 0.0, 0}); }

} // namespace qnngp
