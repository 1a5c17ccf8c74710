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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qnngp/circuit.hpp"
#include "qnngp/haar_moments.hpp"
#include "qnngp/linalg.hpp"

namespace qnngp {

inline constexpr const char *kVersion = "0.3.0";

struct FeatureTable {
    Eigen::MatrixXd features; ///< rows are samples
    std::vector<std::string> columns;
    Eigen::VectorXd labels; ///< empty when the source had no label column
    std::string provenance;
};

struct CsvSchema {
    std::vector<std::string> required; ///< columns that must be present
    std::string label_column;          ///< optional; excluded from features
};

/// Header-validated CSV with locale-independent number parsing. Errors carry
/// the 1-based row (data rows start at 2) and column.
FeatureTable ingest_csv(const std::filesystem::path &path, const CsvSchema &schema = {});

/// Two Gaussian blobs at +/- mu along every axis, labels 0 and 1.
FeatureTable synthetic_two_class(std::size_t n_rows, std::size_t dim, std::uint64_t seed);

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components; ///< features x k, columns by descending variance
    Eigen::VectorXd variances;
    Eigen::VectorXd score_min; ///< per axis, from the fitting data
    Eigen::VectorXd score_max;
};

PcaModel pca_fit(const FeatureTable &table, std::size_t k);
/// Raw projections, rows are samples.
Eigen::MatrixXd pca_scores(const PcaModel &model, const Eigen::MatrixXd &x);
Eigen::MatrixXd pca_reconstruct(const PcaModel &model, const Eigen::MatrixXd &scores);
/// Scores rescaled per axis onto [0, 2 pi] using the fitted range; constant axes map to 0.
Eigen::MatrixXd pca_angles(const PcaModel &model, const Eigen::MatrixXd &x);

/// Fit and project in one step; the result holds angles in [0, 2 pi].
FeatureTable pca_reduce(const FeatureTable &table, std::size_t k);

/// Feature-map states for the first count rows of an angle table.
std::vector<DensityMatrix> encode_states(const Eigen::MatrixXd &angles, int n_qubits, int reps,
                                         std::size_t count);

struct ExperimentConfig {
    std::string kind; ///< gaussianity | moments | dynamics
    int n_qubits = 2;
    std::size_t depth = 8;
    std::size_t n_samples = 10000;
    std::uint64_t seed = 0;
    std::string data_path;
    std::string output_dir;
    std::size_t n_points = 2;   ///< input states per experiment
    int feature_reps = 2;
    std::size_t pca_dim = 0;    ///< 0 means n_qubits
    double eta = 0.01;
    std::size_t steps = 100;
    Tolerances tolerances;
    double z_threshold = 4.0;
};

/// Requires "kind", "n_qubits" and "seed"; other fields take defaults.
ExperimentConfig config_from_json(const nlohmann::json &j);
nlohmann::json to_json(const ExperimentConfig &c);

struct ResultBundle {
    nlohmann::json config;
    nlohmann::json metrics;
    std::optional<OutputTable> samples;
    double wall_clock_seconds = 0.0;
    std::string version = kVersion;
    bool passed = true; ///< every checked tolerance held
};

/// Runs one experiment. With a non-empty output_dir writes metrics.json
/// (deterministic), bundle.json and samples.csv atomically; on failure writes
/// error.json instead and rethrows.
ResultBundle run_experiment(const ExperimentConfig &config);

/// Stable hex digest of a moment spec's matrices.
std::string spec_hash(const MomentSpec &spec);

/// Matrices as rows of [re, im] pairs.
nlohmann::json matrix_to_json(const ComplexMatrix &m);
ComplexMatrix matrix_from_json(const nlohmann::json &j);
nlohmann::json to_json(const CircuitSpec &spec);
CircuitSpec circuit_from_json(const nlohmann::json &j);

/// Writes through a temporary file and renames it into place.
void write_atomic(const std::filesystem::path &path, const std::string &content);

} // namespace qnngp
