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
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qnngp {

/// Monte Carlo value with its standard error.
struct MomentEstimate {
    double value = 0.0;
    double std_error = 0.0; ///< sample standard deviation / sqrt(n)
    std::size_t n_samples = 0;
};

MomentEstimate mean_estimate(const Eigen::Ref<const Eigen::VectorXd> &x);

/// Delete-one-block jackknife for a smooth function of the column means of
/// samples (rows are samples).
MomentEstimate jackknife(const Eigen::MatrixXd &samples,
                         const std::function<double(const Eigen::VectorXd &)> &f,
                         std::size_t blocks = 200);

struct KurtosisEstimate {
    double value = 0.0; ///< m4 / m2^2 - 3
    double std_error = 0.0;
    std::size_t n_samples = 0;
    bool degenerate = false; ///< zero variance; value and error are NaN
};

/// Excess kurtosis with a delete-1 jackknife error computed from power sums.
KurtosisEstimate excess_kurtosis(const Eigen::Ref<const Eigen::VectorXd> &x);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

LinearFit linear_fit(const std::vector<double> &x, const std::vector<double> &y);
/// Fit of log|y| against log x.
LinearFit loglog_fit(const std::vector<double> &x, const std::vector<double> &y);

/// (a - b) / sqrt(se_a^2 + se_b^2); 0 when both errors vanish and values agree.
double z_score(const MomentEstimate &a, const MomentEstimate &b);
/// |estimate - exact| / se, with the same convention.
double z_score(const MomentEstimate &a, double exact);

} // namespace qnngp
