#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbcdc/charts.hpp"
#include "gbcdc/compose.hpp"
#include "gbcdc/config.hpp"
#include "gbcdc/errors.hpp"
#include "gbcdc/estimators.hpp"
#include "gbcdc/kernel.hpp"
#include "gbcdc/rng.hpp"
#include "gbcdc/serialize.hpp"
#include "gbcdc/simulate.hpp"
#include "gbcdc/stream.hpp"
#include "gbcdc/zestim.hpp"

namespace fs = std::filesystem;
using namespace gbcdc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int classify_error(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const DomainError*>(&e)) {
        return kExitConfig;
    }
    return kExitNumeric;
}

void print_error(const char* code, const std::string& message) {
    std::cerr << "error: " << code << ": " << message << std::endl;
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("GBCDC_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0;  // all logical cores
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ConfigError(path.string() + ": cannot open for writing");
    out << content;
}

void write_run_manifest(const fs::path& out_dir, const std::string& command, const nlohmann::json& details) {
    nlohmann::json manifest = details;
    manifest["command"] = command;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    manifest["timestamp"] = stamp;
    write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    int threads = 0;
    std::int64_t seed = -1;
    bool charts = false;
    bool strict = false;
};

int run_simulate(const SimulateArgs& args) {
    ConfigMap map = load_config_file(args.config_path);
    apply_overrides(map, args.overrides);
    ExperimentConfig cfg = experiment_config_from_map(map);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.threads = resolve_threads(args.threads > 0 ? args.threads : cfg.threads);

    const MetricsTable table = run_experiment(cfg);

    fs::create_directories(args.out_dir);
    const fs::path out_dir(args.out_dir);
    write_text_file(out_dir / "metrics.csv", table.to_csv());
    write_run_manifest(out_dir, "simulate",
                       {{"config", args.config_path}, {"seed", cfg.seed}, {"overrides", args.overrides}});

    if (args.charts) {
        std::map<std::string, ChartSeries> bias_series, mse_series;
        for (const auto& row : table.rows) {
            if (row.component != 0 || !std::isfinite(row.bias)) continue;
            auto& b = bias_series[row.method];
            b.label = row.method;
            b.xs.push_back(row.N);
            b.ys.push_back(row.bias);
            auto& m = mse_series[row.method];
            m.label = row.method;
            m.xs.push_back(row.N);
            m.ys.push_back(row.mse);
        }
        std::vector<ChartSeries> bias_list, mse_list;
        for (auto& [name, s] : bias_series) bias_list.push_back(std::move(s));
        for (auto& [name, s] : mse_series) mse_list.push_back(std::move(s));
        write_text_file(out_dir / "bias_vs_N.svg",
                        line_chart_svg(cfg.experiment + ": mean |bias| over significant components", "N",
                                       "mean |bias|", bias_list));
        write_text_file(out_dir / "mse_vs_N.svg",
                        line_chart_svg(cfg.experiment + ": mean MSE over significant components", "N", "mean MSE",
                                       mse_list));
    }

    int failed_cells = 0;
    for (const auto& row : table.rows) {
        if (!row.note.empty()) ++failed_cells;
    }
    if (failed_cells > 0) {
        std::cerr << "note: " << failed_cells << " metric rows carry failure notes (see metrics.csv)" << std::endl;
        if (args.strict) {
            print_error("numeric", "strict mode: failed cells present");
            return kExitNumeric;
        }
    }
    std::cout << "wrote " << (out_dir / "metrics.csv").string() << " (" << table.rows.size() << " rows)" << std::endl;
    return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string dataset_path;
    std::string out_dir = ".";
    std::string method = "bc_ge";
    std::string estimator = "ridge";
    int n_batches = 0;
    double lambda = 0.0;
    bool cv = false;
    int cv_folds = 5;
    int cv_grid_size = 50;
    double vote_threshold = 0.5;
    bool lenient = false;
    std::string partition = "contiguous";
    std::int64_t seed = 1;
    std::string psi = "linear-score";
    std::string kernel = "gaussian";
    double bandwidth_c = 1.0;
    double bandwidth_exponent = 1.0 / 3.0;
    int grid_points = 101;
};

BatchPartition make_partition(const std::string& kind, int n, int n_batches, bool lenient, std::uint64_t seed) {
    if (kind == "shuffled") return partition_shuffled(n, n_batches, seed);
    return partition_contiguous(n, n_batches, !lenient);
}

double shared_lambda(const EstimateArgs& args, const RegressionDataset& data, const BatchPartition& partition) {
    if (!args.cv) return args.lambda;
    const PenaltyKind kind = args.estimator == "lasso" ? PenaltyKind::lasso : PenaltyKind::ridge;
    std::vector<double> choices;
    for (int j = 0; j < partition.n_batches(); ++j) {
        const RegressionDataset batch = data.rows(partition.block(j));
        const auto grid = default_lambda_grid(batch.x(), batch.y(), args.cv_grid_size);
        choices.push_back(select_lambda_cv(batch.x(), batch.y(), kind, args.cv_folds, grid,
                                           derive_seed(static_cast<std::uint64_t>(args.seed),
                                                       {0xCF, static_cast<std::uint64_t>(j)})));
    }
    std::sort(choices.begin(), choices.end());
    const std::size_t mid = choices.size() / 2;
    return choices.size() % 2 == 1 ? choices[mid] : 0.5 * (choices[mid - 1] + choices[mid]);
}

void emit_result(const CompositionResult& result, const fs::path& out_dir) {
    write_composition_csv(result, (out_dir / "result.csv").string());
    write_text_file(out_dir / "result.json", to_json(result) + "\n");
    std::cout << "method: " << to_string(result.method) << "  batches: " << result.n_batches << "\n";
    std::cout << "k,theta_tilde,var_hat\n";
    for (Eigen::Index k = 0; k < result.theta_tilde.size(); ++k) {
        std::cout << (k + 1) << "," << format_double(result.theta_tilde(k)) << "," << format_double(result.var_hat(k))
                  << "\n";
    }
}

int run_estimate(const EstimateArgs& args) {
    const RegressionDataset data = RegressionDataset::from_csv(args.dataset_path);
    if (args.n_batches < 1) throw ConfigError("estimate: --N must be >= 1");
    fs::create_directories(args.out_dir);
    const fs::path out_dir(args.out_dir);

    if (args.estimator == "kernel") {
        if (data.p() != 1) throw ConfigError("estimate: the kernel estimator needs a single covariate column");
        const BatchPartition partition = make_partition(args.partition, data.n(), args.n_batches, args.lenient,
                                                        static_cast<std::uint64_t>(args.seed));
        KernelSpec spec;
        spec.kernel = kernel_type_from_string(args.kernel);
        spec.c = args.bandwidth_c;
        spec.varsigma = args.bandwidth_exponent;
        spec.grid = default_grid(args.grid_points);
        validate(spec);
        const int N = partition.n_batches();
        const int g = args.grid_points;
        Matrix curves(N, g);
        std::vector<RegressionDataset> batches;
        for (int j = 0; j < N; ++j) batches.push_back(data.rows(partition.block(j)));
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < g; ++i) curves(j, i) = nw_estimate(batches[static_cast<std::size_t>(j)], spec.grid(i), spec);
        const Vector pilot = pilot_curve(batches, spec);
        Matrix phi(N, g);
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < g; ++i)
                phi(j, i) = phi_covariate(batches[static_cast<std::size_t>(j)], spec.grid(i), spec, pilot(i));
        const auto curve = bc_ge_curve(curves, phi, spec.grid);
        write_curve_csv(curve, (out_dir / "curve.csv").string());
        int flagged = 0;
        for (const auto& pt : curve) {
            if (!pt.ok) ++flagged;
        }
        std::cout << "wrote " << (out_dir / "curve.csv").string() << " (" << g << " grid points, " << flagged
                  << " rank-deficient)" << std::endl;
        write_run_manifest(out_dir, "estimate", {{"dataset", args.dataset_path}, {"estimator", "kernel"}});
        return kExitOk;
    }

    if (args.estimator == "mz") {
        const BatchPartition partition = make_partition(args.partition, data.n(), args.n_batches, args.lenient,
                                                        static_cast<std::uint64_t>(args.seed));
        const EstimatingFunction fn = make_estimating_function(args.psi, data.p());
        std::vector<LocalFit> fits;
        std::vector<std::vector<Observation>> obs_batches;
        for (int j = 0; j < partition.n_batches(); ++j) {
            const RegressionDataset batch = data.rows(partition.block(j));
            obs_batches.push_back(observations_from_dataset(batch.x(), batch.y()));
            fits.push_back(solve_z_estimator(obs_batches.back(), fn, Vector::Zero(fn.dim)));
        }
        CompositionResult result;
        if (args.method == "naive") {
            result = naive_average(fits);
        } else if (args.method == "bc_ge") {
            Vector pilot = Vector::Zero(fn.dim);
            for (const auto& f : fits) pilot += f.theta_hat;
            pilot /= static_cast<double>(fits.size());
            std::vector<Vector> covariates;
            for (const auto& ob : obs_batches) covariates.push_back(psi_covariate(ob, fn, pilot));
            result.theta_tilde = Vector::Zero(fn.dim);
            result.var_hat = Vector::Zero(fn.dim);
            result.method = CompositionMethod::bc_ge;
            result.n_batches = static_cast<int>(fits.size());
            double sigma2 = 0.0;
            for (int k = 0; k < fn.dim; ++k) {
                const ComponentEstimate est = bc_ge_mz(fits, covariates, k);
                result.theta_tilde(k) = est.theta;
                result.var_hat(k) = est.var_hat;
                result.xi_tilde.push_back(est.xi);
                result.components.push_back(k);
                sigma2 += est.sigma2_hat;
            }
            result.sigma2_hat = sigma2 / fn.dim;
        } else {
            throw ConfigError("estimate: method '" + args.method + "' is not available for mz (use naive or bc_ge)");
        }
        emit_result(result, out_dir);
        write_run_manifest(out_dir, "estimate", {{"dataset", args.dataset_path}, {"estimator", "mz"}, {"psi", args.psi}});
        return kExitOk;
    }

    if (args.estimator != "ols" && args.estimator != "ridge" && args.estimator != "lasso") {
        throw ConfigError("estimate: unknown estimator '" + args.estimator + "'");
    }
    const BatchPartition partition = make_partition(args.partition, data.n(), args.n_batches, args.lenient,
                                                    static_cast<std::uint64_t>(args.seed));
    const double lambda = args.estimator == "ols" ? 0.0 : shared_lambda(args, data, partition);
    std::vector<LocalFit> fits;
    for (int j = 0; j < partition.n_batches(); ++j) {
        const RegressionDataset batch = data.rows(partition.block(j));
        if (args.estimator == "ols") fits.push_back(fit_ols(batch.x(), batch.y()));
        else if (args.estimator == "ridge") fits.push_back(fit_ridge(batch.x(), batch.y(), lambda));
        else fits.push_back(fit_lasso(batch.x(), batch.y(), lambda));
    }

    CompositionResult result;
    if (args.method == "naive") {
        result = naive_average(fits);
    } else if (args.method == "dc") {
        if (args.estimator == "lasso") {
            const auto support = majority_vote_support(fits, args.vote_threshold);
            result = dc_expression(restrict_to_support(fits, support), EstimatorKind::lasso);
        } else {
            result = dc_expression(fits, fits.front().kind);
        }
    } else if (args.method == "bc_ge") {
        result = bc_ge(fits, args.vote_threshold);
    } else {
        throw ConfigError("estimate: unknown method '" + args.method + "' (expected naive, dc or bc_ge)");
    }
    emit_result(result, out_dir);
    write_run_manifest(out_dir, "estimate",
                       {{"dataset", args.dataset_path},
                        {"estimator", args.estimator},
                        {"method", args.method},
                        {"lambda", lambda},
                        {"N", args.n_batches}});
    return kExitOk;
}

// ------------------------------------------------------------------ stream

struct StreamArgs {
    std::string dataset_path;
    std::string out_dir = ".";
    std::string estimator = "ridge";
    int n_batches = 0;
    double lambda = 0.0;
    std::vector<int> support;  // 1-based, for lasso streams
    int snapshot_every = 0;
    std::string restore_path;
};

int run_stream(const StreamArgs& args) {
    const RegressionDataset data = RegressionDataset::from_csv(args.dataset_path);
    if (args.n_batches < 1) throw ConfigError("stream: --N must be >= 1");
    if (args.estimator != "ridge" && args.estimator != "lasso") {
        throw ConfigError("stream: estimator must be ridge or lasso (lasso needs --support)");
    }
    std::vector<int> support0;  // 0-based
    if (args.estimator == "lasso") {
        if (args.support.empty()) throw ConfigError("stream: lasso streaming needs a fixed --support list");
        for (int k : args.support) {
            if (k < 1 || k > data.p()) throw ConfigError("stream: support coordinate out of range");
            support0.push_back(k - 1);
        }
        std::sort(support0.begin(), support0.end());
    }
    const BatchPartition partition = partition_contiguous(data.n(), args.n_batches, true);
    fs::create_directories(args.out_dir);
    const fs::path out_dir(args.out_dir);

    const int dim = args.estimator == "ridge" ? data.p() : static_cast<int>(support0.size());
    StreamState state = args.restore_path.empty() ? StreamState(dim, dim) : [&] {
        std::ifstream in(args.restore_path);
        if (!in) throw ConfigError(args.restore_path + ": cannot open snapshot");
        std::stringstream buffer;
        buffer << in.rdbuf();
        return StreamState::from_json(buffer.str());
    }();
    if (state.p() != dim || state.q() != dim) throw ConfigError("stream: snapshot dimensions do not match the dataset");

    for (int j = state.n_batches(); j < partition.n_batches(); ++j) {
        const RegressionDataset batch = data.rows(partition.block(j));
        LocalFit fit;
        if (args.estimator == "ridge") {
            fit = fit_ridge(batch.x(), batch.y(), args.lambda);
        } else {
            fit = fit_lasso(batch.x(), batch.y(), args.lambda);
            fit = restrict_to_support({fit}, support0).front();
        }
        state.update(fit);
        if (args.snapshot_every > 0 && state.n_batches() % args.snapshot_every == 0) {
            write_text_file(out_dir / ("snapshot_" + std::to_string(state.n_batches()) + ".json"),
                            state.to_json() + "\n");
        }
    }

    CompositionResult result = state.finalize();
    if (args.estimator == "lasso") {
        // map back to ambient coordinates
        CompositionResult mapped;
        mapped.theta_tilde = Vector::Zero(data.p());
        mapped.var_hat = Vector::Zero(data.p());
        mapped.method = result.method;
        mapped.n_batches = result.n_batches;
        mapped.sigma2_hat = result.sigma2_hat;
        for (std::size_t i = 0; i < support0.size(); ++i) {
            mapped.theta_tilde(support0[i]) = result.theta_tilde(static_cast<Eigen::Index>(i));
            mapped.var_hat(support0[i]) = result.var_hat(static_cast<Eigen::Index>(i));
            mapped.components.push_back(support0[i]);
            mapped.xi_tilde.push_back(result.xi_tilde[i]);
        }
        result = std::move(mapped);
    }
    write_text_file(out_dir / "stream_state.json", state.to_json() + "\n");
    emit_result(result, out_dir);
    write_run_manifest(out_dir, "stream",
                       {{"dataset", args.dataset_path}, {"estimator", args.estimator}, {"N", args.n_batches}});
    return kExitOk;
}

// ------------------------------------------------------------------- check

int run_check() {
    const bool inject = std::getenv("GBCDC_CHECK_INJECT_FAULT") != nullptr;
    int failures = 0;
    const auto report = [&](const char* name, bool ok) {
        std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << std::endl;
        if (!ok) ++failures;
    };

    {  // ridge closed representation
        Rng rng(7);
        const int m = 200, p = 5;
        Matrix x(m, p);
        Vector beta(p), eps(m);
        for (int k = 0; k < p; ++k) beta(k) = rng.normal();
        for (int i = 0; i < m; ++i) {
            for (int k = 0; k < p; ++k) x(i, k) = rng.normal();
            eps(i) = rng.normal();
        }
        const Vector y = x * beta + eps;
        const double lambda = 0.3;
        const LocalFit fit = fit_ridge(x, y, lambda);
        const Matrix a = fit.gram + lambda * Matrix::Identity(p, p);
        const Eigen::LDLT<Matrix> ldlt(a);
        Vector rhs = beta - lambda * ldlt.solve(beta) + ldlt.solve(x.transpose() * eps / m);
        if (inject) rhs(0) += 1e-6;
        report("ridge representation identity", (fit.theta_hat - rhs).cwiseAbs().maxCoeff() <= 1e-10);
    }

    {  // streaming equivalence
        Rng rng(11);
        const int n_fits = 30, p = 3;
        std::vector<LocalFit> fits;
        StreamState state(p, p);
        for (int j = 0; j < n_fits; ++j) {
            Matrix x(40, p);
            Vector y(40);
            for (int i = 0; i < 40; ++i) {
                for (int k = 0; k < p; ++k) x(i, k) = rng.normal(0.0, 1.0 + 0.3 * j);
                y(i) = x.row(i).sum() + rng.normal();
            }
            fits.push_back(fit_ridge(x, y, 0.5));
            state.update(fits.back());
        }
        const CompositionResult batch = bc_ge(fits);
        const CompositionResult streamed = state.finalize();
        report("streaming equivalence",
               (batch.theta_tilde - streamed.theta_tilde).cwiseAbs().maxCoeff() <= 1e-10);
    }

    {  // lasso stationarity spot check
        Rng rng(13);
        const int m = 100, p = 8;
        Matrix x(m, p);
        Vector y(m);
        for (int i = 0; i < m; ++i) {
            for (int k = 0; k < p; ++k) x(i, k) = rng.normal();
            y(i) = 2.0 * x(i, 0) - 1.0 * x(i, 1) + rng.normal();
        }
        const double lambda = 0.2, tol = 1e-8;
        const LocalFit fit = fit_lasso(x, y, lambda, tol);
        const Vector grad = x.transpose() * (y - x * fit.theta_hat) / m;
        bool ok = true;
        for (int k = 0; k < p; ++k) {
            if (std::abs(fit.theta_hat(k)) > 1e-10) {
                ok = ok && std::abs(grad(k) - lambda * (fit.theta_hat(k) > 0 ? 1.0 : -1.0)) <= 10.0 * tol;
            } else {
                ok = ok && std::abs(grad(k)) <= lambda + 10.0 * tol;
            }
        }
        report("lasso stationarity", ok);
    }

    {  // composite intercept vs generic least squares
        Rng rng(17);
        const int n = 60, q = 3;
        ComponentRegression reg;
        reg.responses.resize(n);
        reg.covariates.resize(n, q);
        for (int j = 0; j < n; ++j) {
            for (int a = 0; a < q; ++a) reg.covariates(j, a) = rng.normal();
            reg.responses(j) = 1.5 + reg.covariates.row(j).sum() * 0.2 + rng.normal();
        }
        const ComponentEstimate est = bc_ge_component(reg);
        Matrix z(n, q + 1);
        z.col(0).setOnes();
        z.rightCols(q) = reg.covariates;
        const Vector coef = z.colPivHouseholderQr().solve(reg.responses);
        report("composite intercept vs generic least squares", std::abs(est.theta - coef(0)) <= 1e-10);
    }

    return failures == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bias-corrected divide-and-conquer estimation toolkit"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo experiment from a config file");
    simulate->add_option("--config", sim.config_path, "TOML or JSON experiment config")->required();
    simulate->add_option("--out", sim.out_dir, "Output directory");
    simulate->add_option("--seed", sim.seed, "Override the config seed");
    simulate->add_option("--threads", sim.threads, "Worker threads (default: GBCDC_THREADS or all cores)");
    simulate->add_flag("--charts", sim.charts, "Emit SVG bias/MSE charts next to metrics.csv");
    simulate->add_flag("--strict", sim.strict, "Exit 3 when any cell failed");
    simulate->add_option("--override", sim.overrides, "key=value config override (repeatable)");

    EstimateArgs est;
    CLI::App* estimate = app.add_subcommand("estimate", "Composite estimate from a CSV dataset");
    estimate->add_option("dataset", est.dataset_path, "CSV file: covariate columns then response")->required();
    estimate->add_option("--N", est.n_batches, "Number of batches")->required();
    estimate->add_option("--method", est.method, "naive | dc | bc_ge");
    estimate->add_option("--estimator", est.estimator, "ols | ridge | lasso | mz | kernel");
    estimate->add_option("--lambda", est.lambda, "Penalty (ridge/lasso)");
    estimate->add_flag("--cv", est.cv, "Select a shared penalty by per-batch CV (median)");
    estimate->add_option("--cv-folds", est.cv_folds, "CV folds");
    estimate->add_option("--cv-grid-size", est.cv_grid_size, "CV grid size");
    estimate->add_option("--vote-threshold", est.vote_threshold, "Majority-vote threshold for lasso");
    estimate->add_flag("--lenient", est.lenient, "Allow N not dividing n (remainder joins the last batch)");
    estimate->add_option("--partition", est.partition, "contiguous | shuffled");
    estimate->add_option("--seed", est.seed, "Seed for shuffled partitions and CV folds");
    estimate->add_option("--psi", est.psi, "Estimating function for mz: location | linear-score | huber(c) | exp-regression");
    estimate->add_option("--kernel", est.kernel, "gaussian | epanechnikov");
    estimate->add_option("--bandwidth-c", est.bandwidth_c, "Bandwidth constant c in h = c m^-exponent");
    estimate->add_option("--bandwidth-exponent", est.bandwidth_exponent, "Bandwidth exponent");
    estimate->add_option("--grid-points", est.grid_points, "Evaluation grid size on [0,1]");
    estimate->add_option("--out", est.out_dir, "Output directory");

    StreamArgs str;
    CLI::App* stream = app.add_subcommand("stream", "Feed batches sequentially and finalize the composite estimate");
    stream->add_option("dataset", str.dataset_path, "CSV file")->required();
    stream->add_option("--N", str.n_batches, "Number of batches")->required();
    stream->add_option("--estimator", str.estimator, "ridge | lasso");
    stream->add_option("--lambda", str.lambda, "Penalty");
    stream->add_option("--support", str.support, "Fixed 1-based support for lasso streams");
    stream->add_option("--snapshot-every", str.snapshot_every, "Write a state snapshot every k batches");
    stream->add_option("--restore", str.restore_path, "Resume from a snapshot file");
    stream->add_option("--out", str.out_dir, "Output directory");

    CLI::App* check = app.add_subcommand("check", "Run the fast identity suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (estimate->parsed()) return run_estimate(est);
        if (stream->parsed()) return run_stream(str);
        if (check->parsed()) return run_check();
    } catch (const Error& e) {
        const int rc = classify_error(e);
        print_error(rc == kExitConfig ? "config" : "numeric", e.what());
        return rc;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return kExitCheckFailed;
    }
    return kExitOk;
}
