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

#include "qnngp/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qnngp/errors.hpp"
#include "qnngp/gp_inference.hpp"
#include "qnngp/near_gaussian.hpp"
#include "qnngp/qntk.hpp"

namespace qnngp {

namespace {

std::string trim(std::string s) {
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

std::vector<std::string> split_fields(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) {
        out.push_back(trim(cur));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

} // namespace

FeatureTable ingest_csv(const std::filesystem::path &path, const CsvSchema &schema) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open " + path.string());
    }
    std::string line;
    std::string header_line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header_line = line;
            break;
        }
    }
    if (header_line.empty()) {
        std::string expect;
        for (const auto &c : schema.required) {
            expect += (expect.empty() ? "" : ",") + c;
        }
        throw SchemaError("missing header" + (expect.empty() ? std::string() : " (expected " + expect + ")") +
                          " in " + path.string());
    }
    std::vector<std::string> header = split_fields(trim(header_line));
    for (const auto &req : schema.required) {
        if (std::find(header.begin(), header.end(), req) == header.end()) {
            throw SchemaError("missing header column '" + req + "' in " + path.string());
        }
    }
    std::ptrdiff_t label_col = -1;
    if (!schema.label_column.empty()) {
        auto it = std::find(header.begin(), header.end(), schema.label_column);
        if (it == header.end()) {
            throw SchemaError("missing label column '" + schema.label_column + "' in " + path.string());
        }
        label_col = it - header.begin();
    }
    FeatureTable t;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (static_cast<std::ptrdiff_t>(c) != label_col) {
            t.columns.push_back(header[c]);
        }
    }
    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        const std::string s = trim(line);
        if (s.empty()) {
            continue;
        }
        std::vector<std::string> fields = split_fields(s);
        if (fields.size() != header.size()) {
            throw SchemaError("expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(fields.size()),
                              row, std::min(fields.size(), header.size()) + 1);
        }
        std::vector<double> values;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string &f = fields[c];
            double v = 0.0;
            const char *first = f.data();
            const char *last = f.data() + f.size();
            if (!f.empty() && *first == '+') {
                ++first;
            }
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (f.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
                throw SchemaError("malformed number '" + f + "'", row, c + 1);
            }
            if (static_cast<std::ptrdiff_t>(c) == label_col) {
                labels.push_back(v);
            } else {
                values.push_back(v);
            }
        }
        rows.push_back(std::move(values));
    }
    t.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            t.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    if (label_col >= 0) {
        t.labels = Eigen::Map<Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    }
    t.provenance = "csv:" + path.string();
    return t;
}

FeatureTable synthetic_two_class(std::size_t n_rows, std::size_t dim, std::uint64_t seed) {
    if (n_rows == 0 || dim == 0) {
        throw InvalidDimension("synthetic data needs rows and columns");
    }
    auto rng = SeedStream(seed).substream("synthetic-two-class");
    std::normal_distribution<double> noise(0.0, 1.0);
    FeatureTable t;
    t.features.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(dim));
    t.labels.resize(static_cast<Eigen::Index>(n_rows));
    for (std::size_t c = 0; c < dim; ++c) {
        t.columns.push_back("x" + std::to_string(c));
    }
    for (Eigen::Index r = 0; r < t.features.rows(); ++r) {
        const double cls = static_cast<double>(r % 2);
        t.labels(r) = cls;
        for (Eigen::Index c = 0; c < t.features.cols(); ++c) {
            // axis c has spread 1 + c so principal directions are well separated
            t.features(r, c) = (cls ? 1.5 : -1.5) + (1.0 + static_cast<double>(c)) * noise(rng);
        }
    }
    t.provenance = "synthetic-two-class seed=" + std::to_string(seed);
    return t;
}

PcaModel pca_fit(const FeatureTable &table, std::size_t k) {
    const Eigen::MatrixXd &x = table.features;
    if (x.rows() < 2) {
        throw InvalidDimension("PCA needs at least two rows");
    }
    if (k == 0 || k > static_cast<std::size_t>(x.cols())) {
        throw InvalidDimension("PCA target dimension " + std::to_string(k) + " exceeds feature count " +
                               std::to_string(x.cols()));
    }
    PcaModel m;
    m.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd c = x.rowwise() - m.mean.transpose();
    const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const auto f = x.cols();
    const auto ek = static_cast<Eigen::Index>(k);
    m.components.resize(f, ek);
    m.variances.resize(ek);
    for (Eigen::Index j = 0; j < ek; ++j) {
        const Eigen::Index src = f - 1 - j;
        Eigen::VectorXd v = es.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        m.components.col(j) = v;
        m.variances(j) = std::max(0.0, es.eigenvalues()(src));
    }
    const Eigen::MatrixXd s = pca_scores(m, x);
    m.score_min = s.colwise().minCoeff().transpose();
    m.score_max = s.colwise().maxCoeff().transpose();
    return m;
}

Eigen::MatrixXd pca_scores(const PcaModel &model, const Eigen::MatrixXd &x) {
    if (x.cols() != model.mean.size()) {
        throw DimensionMismatch("feature count differs from the fitted PCA");
    }
    return (x.rowwise() - model.mean.transpose()) * model.components;
}

Eigen::MatrixXd pca_reconstruct(const PcaModel &model, const Eigen::MatrixXd &scores) {
    return (scores * model.components.transpose()).rowwise() + model.mean.transpose();
}

Eigen::MatrixXd pca_angles(const PcaModel &model, const Eigen::MatrixXd &x) {
    Eigen::MatrixXd s = pca_scores(model, x);
    // components whose spread is rounding noise against the widest one are constant
    const double widest = (model.score_max - model.score_min).maxCoeff();
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        const double lo = model.score_min(j);
        const double range = model.score_max(j) - lo;
        if (range > 1e-12 * widest) {
            s.col(j) = ((s.col(j).array() - lo) / range * 2.0 * std::numbers::pi).matrix();
        } else {
            s.col(j).setZero();
        }
    }
    return s;
}

FeatureTable pca_reduce(const FeatureTable &table, std::size_t k) {
    const PcaModel m = pca_fit(table, k);
    FeatureTable out;
    out.features = pca_angles(m, table.features);
    for (std::size_t j = 0; j < k; ++j) {
        out.columns.push_back("pc" + std::to_string(j));
    }
    out.labels = table.labels;
    out.provenance = table.provenance + " | pca k=" + std::to_string(k) + " rescaled to [0, 2pi]";
    return out;
}

std::vector<DensityMatrix> encode_states(const Eigen::MatrixXd &angles, int n_qubits, int reps, std::size_t count) {
    if (count > static_cast<std::size_t>(angles.rows())) {
        throw InvalidDimension("requested more states than data rows");
    }
    std::vector<DensityMatrix> out;
    for (std::size_t r = 0; r < count; ++r) {
        out.push_back(zz_feature_map(angles.row(static_cast<Eigen::Index>(r)).transpose(), n_qubits, reps));
    }
    return out;
}

ExperimentConfig config_from_json(const nlohmann::json &j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    for (const char *key : {"kind", "n_qubits", "seed"}) {
        if (!j.contains(key)) {
            throw ConfigError(std::string("config is missing required field '") + key + "'");
        }
    }
    ExperimentConfig c;
    try {
        c.kind = j.at("kind").get<std::string>();
        c.n_qubits = j.at("n_qubits").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.depth = j.value("depth", c.depth);
        c.n_samples = j.value("n_samples", c.n_samples);
        c.data_path = j.value("data_path", c.data_path);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.n_points = j.value("n_points", c.n_points);
        c.feature_reps = j.value("feature_reps", c.feature_reps);
        c.pca_dim = j.value("pca_dim", c.pca_dim);
        c.eta = j.value("eta", c.eta);
        c.steps = j.value("steps", c.steps);
        c.z_threshold = j.value("z_threshold", c.z_threshold);
        if (j.contains("tolerances")) {
            const auto &t = j.at("tolerances");
            c.tolerances.construction = t.value("construction", c.tolerances.construction);
            c.tolerances.unitarity = t.value("unitarity", c.tolerances.unitarity);
            c.tolerances.psd = t.value("psd", c.tolerances.psd);
            c.tolerances.max_dim = t.value("max_dim", c.tolerances.max_dim);
        }
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    }
    if (c.kind != "gaussianity" && c.kind != "moments" && c.kind != "dynamics") {
        throw ConfigError("unknown experiment kind '" + c.kind + "'");
    }
    if (c.n_qubits < 1 || c.n_qubits > 6) {
        throw ConfigError("n_qubits must be between 1 and 6");
    }
    if (c.depth < 1 || c.n_samples < 1 || c.n_points < 1 || c.feature_reps < 1) {
        throw ConfigError("depth, n_samples, n_points and feature_reps must be positive");
    }
    return c;
}

nlohmann::json to_json(const ExperimentConfig &c) {
    return {{"kind", c.kind},
            {"n_qubits", c.n_qubits},
            {"depth", c.depth},
            {"n_samples", c.n_samples},
            {"seed", c.seed},
            {"data_path", c.data_path},
            {"output_dir", c.output_dir},
            {"n_points", c.n_points},
            {"feature_reps", c.feature_reps},
            {"pca_dim", c.pca_dim},
            {"eta", c.eta},
            {"steps", c.steps},
            {"z_threshold", c.z_threshold},
            {"tolerances",
             {{"construction", c.tolerances.construction},
              {"unitarity", c.tolerances.unitarity},
              {"psd", c.tolerances.psd},
              {"max_dim", c.tolerances.max_dim}}}};
}

std::string spec_hash(const MomentSpec &spec) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const void *data, std::size_t n) {
        const auto *p = static_cast<const unsigned char *>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const int p = spec.order();
    feed(&p, sizeof p);
    for (const auto &pr : spec.pairs()) {
        for (const ComplexMatrix *m : {&pr.rho.matrix(), &pr.obs.matrix()}) {
            feed(m->data(), sizeof(cplx) * static_cast<std::size_t>(m->size()));
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json matrix_to_json(const ComplexMatrix &m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back({m(i, j).real(), m(i, j).imag()});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

ComplexMatrix matrix_from_json(const nlohmann::json &j) {
    try {
        const auto r = static_cast<Eigen::Index>(j.size());
        const auto c = r ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
        ComplexMatrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            if (static_cast<Eigen::Index>(j.at(static_cast<std::size_t>(i)).size()) != c) {
                throw ConfigError("ragged matrix rows");
            }
            for (Eigen::Index k = 0; k < c; ++k) {
                const auto &e = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k));
                m(i, k) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
            }
        }
        return m;
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("bad matrix encoding: ") + e.what());
    }
}

nlohmann::json to_json(const CircuitSpec &spec) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto &l : spec.layers()) {
        layers.push_back({{"W", matrix_to_json(l.w().matrix())},
                          {"X", matrix_to_json(l.x().matrix())},
                          {"X_label", l.x().label()}});
    }
    return {{"n_qubits", spec.n_qubits()}, {"layers", std::move(layers)}};
}

CircuitSpec circuit_from_json(const nlohmann::json &j) {
    try {
        std::vector<Layer> layers;
        for (const auto &l : j.at("layers")) {
            layers.emplace_back(UnitaryOperator(matrix_from_json(l.at("W"))),
                                HermitianObservable(matrix_from_json(l.at("X")), l.value("X_label", "")));
        }
        return CircuitSpec(j.at("n_qubits").get<int>(), std::move(layers));
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("bad circuit encoding: ") + e.what());
    }
}

void write_atomic(const std::filesystem::path &path, const std::string &content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ResourceError("cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw ResourceError("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

namespace {

struct DataStates {
    std::vector<DensityMatrix> states;
    Eigen::VectorXd labels;
};

DataStates load_states(const ExperimentConfig &c, std::size_t count) {
    const std::size_t k = c.pca_dim ? c.pca_dim : static_cast<std::size_t>(c.n_qubits);
    if (k != static_cast<std::size_t>(c.n_qubits)) {
        throw ConfigError("pca_dim must equal n_qubits for the feature map");
    }
    FeatureTable raw = c.data_path.empty()
                           ? synthetic_two_class(std::max<std::size_t>(count, 32), k + 2, SeedStream(c.seed).derive("data"))
                           : ingest_csv(c.data_path, {{}, "label"});
    if (static_cast<std::size_t>(raw.features.rows()) < count) {
        throw ConfigError("data has fewer rows than the experiment needs");
    }
    if (static_cast<std::size_t>(raw.features.cols()) < k) {
        throw ConfigError("data has fewer feature columns than pca_dim");
    }
    const FeatureTable angles = pca_reduce(raw, k);
    DataStates out;
    out.states = encode_states(angles.features, c.n_qubits, c.feature_reps, count);
    out.labels = raw.labels.size() ? Eigen::VectorXd(raw.labels.head(static_cast<Eigen::Index>(count)))
                                   : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
    return out;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

void run_gaussianity(const ExperimentConfig &c, ResultBundle &b) {
    const DataStates data = load_states(c, c.n_points);
    const ObservableSet obs = ObservableSet::z_strings(c.n_qubits);
    OutputTable table = sample_outputs({c.n_qubits, c.depth}, data.states, obs, c.n_samples,
                                       SeedStream(c.seed).derive("gaussianity"));
    const GaussianityReport r = gaussianity_diagnostics(table.values, table.labels);
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
        per[r.labels[i]] = {{"excess_kurtosis", finite_or_null(r.kurtosis[i].value)},
                            {"std_error", finite_or_null(r.kurtosis[i].std_error)},
                            {"flagged", static_cast<bool>(r.flagged[i])},
                            {"degenerate", r.kurtosis[i].degenerate}};
    }
    b.metrics = {{"kurtosis", per}, {"max_abs_kurtosis", r.max_abs_kurtosis}, {"n_samples", c.n_samples}};
    b.samples = std::move(table);
}

void run_moments(const ExperimentConfig &c, ResultBundle &b) {
    const std::size_t d = std::size_t(1) << c.n_qubits;
    auto rng = SeedStream(c.seed).substream("moment-specs");
    std::vector<MomentSpec> specs;
    for (int p = 1; p <= 4; ++p) {
        for (int rep = 0; rep < 3; ++rep) {
            std::vector<MomentPair> pairs;
            for (int k = 0; k < p; ++k) {
                DensityMatrix rho = random_pure_state(d, rng);
                HermitianObservable o = random_hermitian(d, rng, rep % 2 == 0);
                pairs.push_back({std::move(rho), std::move(o)});
            }
            specs.emplace_back(std::move(pairs));
        }
    }
    const auto mc = monte_carlo_moments(specs, c.n_samples, SeedStream(c.seed).derive("moments-mc"));
    nlohmann::json records = nlohmann::json::array();
    double worst = 0.0;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const double exact = haar_expectation(specs[s]);
        const double z = z_score(mc[s], exact);
        worst = std::max(worst, std::abs(z));
        records.push_back({{"spec_hash", spec_hash(specs[s])},
                           {"p", specs[s].order()},
                           {"analytic", exact},
                           {"mc_value", mc[s].value},
                           {"mc_se", mc[s].std_error},
                           {"n", mc[s].n_samples},
                           {"z", z}});
    }
    b.passed = worst < c.z_threshold;
    b.metrics = {{"records", records}, {"max_abs_z", worst}, {"z_threshold", c.z_threshold}};
}

void run_dynamics(const ExperimentConfig &c, ResultBundle &b) {
    const std::size_t no = c.n_points;
    const DataStates data = load_states(c, 2 * no);
    auto rng = SeedStream(c.seed).substream("dynamics-circuit");
    const RandomCircuit rc = random_circuit(c.n_qubits, c.depth, rng);
    std::string z0(static_cast<std::size_t>(c.n_qubits), 'I');
    z0[0] = 'Z';
    const ObservableSet obs({pauli_string(z0)});
    ObservedSet observed;
    observed.states.assign(data.states.begin(), data.states.begin() + static_cast<std::ptrdiff_t>(no));
    observed.labels = (data.labels.head(static_cast<Eigen::Index>(no)).array() - 0.5).matrix().transpose();
    PredictionSet predicted;
    predicted.states.assign(data.states.begin() + static_cast<std::ptrdiff_t>(no), data.states.end());

    const TrainingTrajectory traj = gradient_descent_train(rc.spec, rc.theta, observed, obs, c.eta, c.steps);
    const Eigen::MatrixXd q = qntk(rc.spec, rc.theta, data.states, obs);
    const Eigen::MatrixXd f0 = model_outputs(build_unitary(rc.spec, rc.theta).matrix(), data.states, obs);
    const KernelMatrix kq = KernelMatrix::from_dense(q, obs.size(), data.states.size());
    const double jitter = default_jitter(kq, no);
    double worst = 0.0;
    for (std::size_t t = 0; t < traj.f.size(); ++t) {
        const LinearizedPrediction lin =
            linearized_dynamics(q, f0, observed.labels, c.eta, static_cast<double>(t), no, jitter);
        worst = std::max(worst, (traj.f[t] - lin.observed).norm() / lin.observed.norm());
    }
    const LinearizedPrediction inf = linearized_dynamics(q, f0, observed.labels, c.eta,
                                                         std::numeric_limits<double>::infinity(), no, jitter);
    const GPPosterior post = gp_posterior(kq, observed, predicted, jitter);
    b.metrics = {{"initial_loss", traj.loss.front()},
                 {"final_loss", traj.loss.back()},
                 {"diverged", traj.diverged},
                 {"max_relative_deviation", worst},
                 {"bridge_max_abs_diff", (post.mean - inf.mean).cwiseAbs().maxCoeff()}};
}

} // namespace

ResultBundle run_experiment(const ExperimentConfig &config) {
    const auto start = std::chrono::steady_clock::now();
    ResultBundle b;
    b.config = to_json(config);
    const std::filesystem::path dir = config.output_dir;
    try {
        set_tolerances(config.tolerances);
        if (config.kind == "gaussianity") {
            run_gaussianity(config, b);
        } else if (config.kind == "moments") {
            run_moments(config, b);
        } else if (config.kind == "dynamics") {
            run_dynamics(config, b);
        } else {
            throw ConfigError("unknown experiment kind '" + config.kind + "'");
        }
        b.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!dir.empty()) {
            nlohmann::json metrics = {{"config", b.config}, {"metrics", b.metrics}, {"passed", b.passed}};
            nlohmann::json bundle = metrics;
            bundle["wall_clock_seconds"] = b.wall_clock_seconds;
            bundle["version"] = b.version;
            if (b.samples) {
                std::ostringstream csv;
                b.samples->write_csv(csv);
                write_atomic(dir / "samples.csv", csv.str());
                bundle["samples"] = "samples.csv";
            }
            write_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
            write_atomic(dir / "bundle.json", bundle.dump(2) + "\n");
        }
    } catch (const std::exception &e) {
        if (!dir.empty()) {
            nlohmann::json manifest = {{"config", b.config}, {"error", e.what()}, {"version", b.version}};
            try {
                write_atomic(dir / "error.json", manifest.dump(2) + "\n");
            } catch (...) {
            }
        }
        throw;
    }
    return b;
}

} // namespace qnngp
