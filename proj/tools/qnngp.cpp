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

// Command line front end.

#include <omp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qnngp/errors.hpp"
#include "qnngp/experiments.hpp"
#include "qnngp/gp_inference.hpp"
#include "qnngp/haar_moments.hpp"
#include "qnngp/near_gaussian.hpp"
#include "qnngp/qntk.hpp"

using nlohmann::json;
using namespace qnngp;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitConditioning = 3;
constexpr int kExitCheck = 4;

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    int threads = 0;
    bool check = false;
};

json read_json(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Config file first, then flags on top.
ExperimentConfig load_config(const Globals &g, const std::string &kind) {
    json j = g.config_path.empty() ? json::object() : read_json(g.config_path);
    if (!j.contains("kind")) {
        j["kind"] = kind;
    }
    if (!j.contains("n_qubits")) {
        j["n_qubits"] = 2;
    }
    if (!j.contains("seed") || g.seed_set) {
        j["seed"] = g.seed;
    }
    if (!g.out.empty()) {
        j["output_dir"] = g.out;
    }
    return config_from_json(j);
}

void emit(const Globals &g, const std::string &name, const json &doc) {
    const std::string text = doc.dump(2) + "\n";
    if (!g.out.empty()) {
        write_atomic(std::filesystem::path(g.out) / name, text);
    }
    std::cout << text;
}

int bundle_exit(const Globals &g, const ResultBundle &b) {
    std::cout << json{{"config", b.config}, {"metrics", b.metrics}, {"passed", b.passed}}.dump(2) << "\n";
    return g.check && !b.passed ? kExitCheck : 0;
}

// Long format sample_id,obs_label,value back into a samples x columns table.
OutputTable read_sample_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("sample_id,obs_label,value", 0) != 0) {
        throw SchemaError("missing header sample_id,obs_label,value in " + path);
    }
    std::map<std::string, std::size_t> col;
    OutputTable t;
    std::vector<std::vector<double>> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = line.rfind(',');
        if (c1 == std::string::npos || c1 == c2) {
            throw SchemaError("expected 3 fields", row, 1);
        }
        std::size_t id = 0;
        double v = 0.0;
        const std::string sid = line.substr(0, c1);
        std::string sval = line.substr(c2 + 1);
        if (!sval.empty() && sval.back() == '\r') {
            sval.pop_back();
        }
        auto r1 = std::from_chars(sid.data(), sid.data() + sid.size(), id);
        if (r1.ec != std::errc() || r1.ptr != sid.data() + sid.size()) {
            throw SchemaError("malformed sample_id '" + sid + "'", row, 1);
        }
        auto r2 = std::from_chars(sval.data(), sval.data() + sval.size(), v);
        if (r2.ec != std::errc() || r2.ptr != sval.data() + sval.size()) {
            throw SchemaError("malformed value '" + sval + "'", row, 3);
        }
        const std::string label = line.substr(c1 + 1, c2 - c1 - 1);
        auto [it, fresh] = col.emplace(label, t.labels.size());
        if (fresh) {
            t.labels.push_back(label);
        }
        if (rows.size() <= id) {
            rows.resize(id + 1);
        }
        auto &r = rows[id];
        if (r.size() <= it->second) {
            r.resize(it->second + 1, std::numeric_limits<double>::quiet_NaN());
        }
        r[it->second] = v;
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.labels.size()));
    for (std::size_t s = 0; s < rows.size(); ++s) {
        for (std::size_t c = 0; c < t.labels.size(); ++c) {
            const double v = c < rows[s].size() ? rows[s][c] : std::numeric_limits<double>::quiet_NaN();
            if (!std::isfinite(v)) {
                throw SchemaError("sample " + std::to_string(s) + " lacks column " + t.labels[c]);
            }
            t.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return t;
}

json to_json(const Eigen::MatrixXd &m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r.push_back(m(i, j));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

Eigen::MatrixXd real_matrix(const json &j, const char *what) {
    try {
        const auto r = static_cast<Eigen::Index>(j.size());
        const auto c = r ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index k = 0; k < c; ++k) {
                m(i, k) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
            }
        }
        return m;
    } catch (const json::exception &e) {
        throw ConfigError(std::string("bad ") + what + ": " + e.what());
    }
}

std::vector<DensityMatrix> states_from_table(const FeatureTable &t, int n_qubits, int reps) {
    if (static_cast<int>(t.features.cols()) != n_qubits) {
        throw SchemaError("expected " + std::to_string(n_qubits) + " feature columns, found " +
                          std::to_string(t.features.cols()));
    }
    return encode_states(t.features, n_qubits, reps, static_cast<std::size_t>(t.features.rows()));
}

int cmd_weingarten(const Globals &g, int p, std::size_t d) {
    const WeingartenTable t = weingarten_table(p, d);
    json out = json::object();
    for (const auto &[type, v] : t.values()) {
        out[to_string(type)] = v;
    }
    emit(g, "weingarten.json", out);
    return g.check && t.orthogonality_residual() >= 1e-10 ? kExitCheck : 0;
}

int cmd_gaussianity(const Globals &g, const std::string &samples) {
    if (samples.empty()) {
        return bundle_exit(g, run_experiment(load_config(g, "gaussianity")));
    }
    const OutputTable t = read_sample_csv(samples);
    const GaussianityReport r = gaussianity_diagnostics(t.values, t.labels);
    json per = json::object();
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
        const auto &k = r.kurtosis[i];
        per[r.labels[i]] = {{"excess_kurtosis", std::isfinite(k.value) ? json(k.value) : json()},
                            {"std_error", std::isfinite(k.std_error) ? json(k.std_error) : json()},
                            {"flagged", static_cast<bool>(r.flagged[i])},
                            {"degenerate", k.degenerate}};
    }
    json pairwise = json::array();
    for (Eigen::Index i = 0; i < r.pairwise.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < r.pairwise.cols(); ++j) {
            row.push_back(std::isfinite(r.pairwise(i, j)) ? json(r.pairwise(i, j)) : json());
        }
        pairwise.push_back(std::move(row));
    }
    emit(g, "gaussianity.json",
         {{"source", samples},
          {"n_samples", t.values.rows()},
          {"kurtosis", per},
          {"pairwise", pairwise},
          {"degenerate", r.degenerate},
          {"max_abs_kurtosis", r.max_abs_kurtosis}});
    return 0;
}

int cmd_gp_predict(const Globals &g, const std::string &train, const std::string &test, const std::string &mode,
                   int reps) {
    const FeatureTable tr = ingest_csv(train, {{"label"}, "label"});
    const FeatureTable te = ingest_csv(test);
    const int n = static_cast<int>(tr.features.cols());
    if (n < 1 || n > 6) {
        throw SchemaError("feature count must be between 1 and 6 (one angle per qubit)");
    }
    ObservedSet observed{states_from_table(tr, n, reps), tr.labels.transpose()};
    PredictionSet predicted{states_from_table(te, n, reps)};
    std::string z(static_cast<std::size_t>(n), 'I');
    z[0] = 'Z';
    const ObservableSet obs({pauli_string(z)});
    std::vector<DensityMatrix> all = observed.states;
    all.insert(all.end(), predicted.states.begin(), predicted.states.end());
    const KernelMatrix k = prior_kernel(obs, all, mode == "exact" ? KernelMode::exact : KernelMode::leading);
    const GPPosterior post = marginal_predictive(observed, predicted, k, default_jitter(k, observed.states.size()));
    emit(g, "gp_predict.json",
         {{"mode", mode},
          {"observable", z},
          {"mean", to_json(post.mean)},
          {"variance", to_json(post.variance())},
          {"log_marginal", std::vector<double>(post.log_marginal.data(),
                                               post.log_marginal.data() + post.log_marginal.size())}});
    return 0;
}

int cmd_qntk_train(const Globals &g, int n, std::size_t layers, double eta, std::size_t steps,
                   std::size_t points) {
    const SeedStream seeds(g.seed);
    auto rng = seeds.substream("qntk-train-circuit");
    const RandomCircuit rc = random_circuit(n, layers, rng);
    const FeatureTable raw = synthetic_two_class(std::max<std::size_t>(points, 8), static_cast<std::size_t>(n) + 2,
                                                 seeds.derive("qntk-train-data"));
    const FeatureTable angles = pca_reduce(raw, static_cast<std::size_t>(n));
    ObservedSet observed;
    observed.states = encode_states(angles.features, n, 2, points);
    observed.labels = (raw.labels.head(static_cast<Eigen::Index>(points)).array() - 0.5).matrix().transpose();
    std::string z(static_cast<std::size_t>(n), 'I');
    z[0] = 'Z';
    const ObservableSet obs({pauli_string(z)});

    const TrainingTrajectory traj = gradient_descent_train(rc.spec, rc.theta, observed, obs, eta, steps);
    const Eigen::MatrixXd q = qntk(rc.spec, rc.theta, observed.states, obs);
    const Eigen::MatrixXd f0 = traj.f.front();
    std::ostringstream csv;
    csv << "step,loss";
    for (std::size_t a = 0; a < points; ++a) {
        csv << ",f" << a;
    }
    for (std::size_t a = 0; a < points; ++a) {
        csv << ",linearized_f" << a;
    }
    csv << "\n";
    char buf[64];
    double worst = 0.0;
    for (std::size_t t = 0; t < traj.f.size(); ++t) {
        const LinearizedPrediction lin =
            linearized_dynamics(q, f0, observed.labels, eta, static_cast<double>(t), points);
        worst = std::max(worst, (traj.f[t] - lin.observed).norm() / lin.observed.norm());
        csv << t;
        std::snprintf(buf, sizeof buf, ",%.17g", traj.loss[t]);
        csv << buf;
        for (const Eigen::MatrixXd *m : {&traj.f[t], &lin.observed}) {
            for (Eigen::Index a = 0; a < m->cols(); ++a) {
                std::snprintf(buf, sizeof buf, ",%.17g", (*m)(0, a));
                csv << buf;
            }
        }
        csv << "\n";
    }
    if (!g.out.empty()) {
        write_atomic(std::filesystem::path(g.out) / "trajectory.csv", csv.str());
    }
    emit(g, "qntk_train.json",
         {{"seed", g.seed},
          {"n_qubits", n},
          {"layers", layers},
          {"eta", eta},
          {"steps", steps},
          {"points", points},
          {"initial_loss", traj.loss.front()},
          {"final_loss", traj.loss.back()},
          {"diverged", traj.diverged},
          {"max_relative_deviation", worst},
          {"version", kVersion}});
    if (g.out.empty()) {
        std::cout << csv.str();
    }
    return 0;
}

int cmd_sweep(const Globals &g, const std::vector<int> &ns, const std::vector<std::size_t> &ls) {
    ExperimentConfig base = load_config(g, "gaussianity");
    base.output_dir.clear();
    json cells = json::array();
    for (int n : ns) {
        for (std::size_t l : ls) {
            ExperimentConfig c = base;
            c.n_qubits = n;
            c.depth = l;
            c.seed = SeedStream(base.seed).derive("sweep-cell", static_cast<std::uint64_t>(n) * 1000 + l);
            const ResultBundle b = run_experiment(c);
            cells.push_back({{"n_qubits", n},
                             {"depth", l},
                             {"seed", c.seed},
                             {"max_abs_kurtosis", b.metrics["max_abs_kurtosis"]},
                             {"kurtosis", b.metrics["kurtosis"]}});
        }
    }
    emit(g, "sweep.json", {{"config", to_json(base)}, {"cells", cells}, {"version", kVersion}});
    return 0;
}

int cmd_ng_correct(const Globals &g, const std::string &path) {
    const json j = read_json(path);
    MomentSet m;
    try {
        m.second = real_matrix(j.at("kernel"), "kernel");
        const auto n = static_cast<std::size_t>(m.second.rows());
        const auto raw = j.at("fourth_connected").get<std::vector<double>>();
        if (raw.size() != n * n * n * n) {
            throw ConfigError("fourth_connected must hold n^4 row-major entries");
        }
        m.fourth_connected = SymmetricTensor4(n, raw);
        const double lambda = j.value("lambda", 1.0);
        const QuarticAction a = couplings_from_moments(m, lambda);
        json out = {{"corrected_covariance", to_json(corrected_covariance(a))},
                    {"kernel", to_json(a.kernel)},
                    {"coupling", a.v.data()},
                    {"lambda", lambda},
                    {"perturbative", a.perturbative}};
        if (j.contains("observed")) {
            IndexPartition part{j.at("observed").get<std::vector<std::size_t>>(),
                                j.at("predicted").get<std::vector<std::size_t>>()};
            const auto y = j.at("y").get<std::vector<double>>();
            const Eigen::VectorXd mean =
                corrected_mean(a, part, Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
            out["corrected_mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
        }
        emit(g, "ng_correct.json", out);
    } catch (const json::exception &e) {
        throw ConfigError(std::string("bad moments file: ") + e.what());
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Haar-random quantum network moments, kernels and near-Gaussian corrections"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    auto *seed_opt = app.add_option("--seed", g.seed, "64-bit master seed");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--threads", g.threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
    app.add_flag("--check", g.check, "exit 4 when a tolerance check fails");

    int wg_p = 2;
    std::size_t wg_d = 4;
    auto *wg = app.add_subcommand("weingarten-table", "Weingarten values by cycle type");
    wg->add_option("--p", wg_p)->required();
    wg->add_option("--d", wg_d)->required();

    auto *mom = app.add_subcommand("moments", "analytic vs Monte Carlo moment cross-check");

    std::string samples_csv;
    auto *gau = app.add_subcommand("gaussianity", "kurtosis diagnostics of output samples");
    gau->add_option("--samples", samples_csv, "long-format sample CSV; without it a fresh ensemble is drawn")
        ->check(CLI::ExistingFile);

    std::string train, test, mode = "leading";
    int reps = 2;
    auto *gp = app.add_subcommand("gp-predict", "GP posterior with the Haar prior kernel");
    gp->add_option("--train", train)->required()->check(CLI::ExistingFile);
    gp->add_option("--test", test)->required()->check(CLI::ExistingFile);
    gp->add_option("--mode", mode)->check(CLI::IsMember({"leading", "exact"}));
    gp->add_option("--reps", reps, "feature map repetitions");

    int tn = 2;
    std::size_t tl = 16, steps = 100, points = 2;
    double eta = 0.01;
    auto *tr = app.add_subcommand("qntk-train", "gradient descent vs frozen-kernel dynamics");
    tr->add_option("--n", tn)->check(CLI::Range(1, 6));
    tr->add_option("--layers", tl);
    tr->add_option("--eta", eta);
    tr->add_option("--steps", steps);
    tr->add_option("--points", points);

    std::vector<int> sweep_n{2, 4};
    std::vector<std::size_t> sweep_l{2, 8, 32};
    auto *sw = app.add_subcommand("sweep", "kurtosis over a grid of widths and depths");
    sw->add_option("--n", sweep_n)->delimiter(',');
    sw->add_option("--layers", sweep_l)->delimiter(',');

    std::string moments_json;
    auto *ng = app.add_subcommand("ng-correct", "quartic couplings and corrected posterior from moments");
    ng->add_option("--moments", moments_json)->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    g.seed_set = seed_opt->count() > 0;
    if (g.threads > 0) {
        omp_set_num_threads(g.threads);
    }

    try {
        if (*wg) {
            return cmd_weingarten(g, wg_p, wg_d);
        }
        if (*mom) {
            return bundle_exit(g, run_experiment(load_config(g, "moments")));
        }
        if (*gau) {
            return cmd_gaussianity(g, samples_csv);
        }
        if (*gp) {
            return cmd_gp_predict(g, train, test, mode, reps);
        }
        if (*tr) {
            return cmd_qntk_train(g, tn, tl, eta, steps, points);
        }
        if (*sw) {
            return cmd_sweep(g, sweep_n, sweep_l);
        }
        if (*ng) {
            return cmd_ng_correct(g, moments_json);
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SchemaError &e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConditioningError &e) {
        std::cerr << "conditioning error: " << e.what() << "\n";
        return kExitConditioning;
    } catch (const SingularGram &e) {
        std::cerr << "singular Gram matrix: " << e.what() << "\n";
        return kExitConditioning;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOther;
    }
    return kExitOther;
}
