#include "gbcdc/simulate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "gbcdc/compose.hpp"
#include "gbcdc/errors.hpp"
#include "gbcdc/estimators.hpp"
#include "gbcdc/homogenize.hpp"
#include "gbcdc/rng.hpp"
#include "gbcdc/serialize.hpp"

namespace gbcdc {

namespace {

Matrix decay_cholesky(int p, double decay) {
    Matrix sigma(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(decay, std::abs(i - j));
    return Eigen::LLT<Matrix>(sigma).matrixL();
}

}  // namespace

HeterogeneousDraw gen_correlated_gaussian(int n, const Vector& beta, double decay, std::uint64_t seed, int mu_block) {
    const int p = static_cast<int>(beta.size());
    if (n < 1 || p < 1) throw DomainError("generator: need n >= 1 and p >= 1");
    const Matrix chol = decay_cholesky(p, decay);
    Rng rng(seed);
    Matrix mu(n, p), x(n, p);
    Vector y(n);
    Vector mu_row = Vector::Zero(p), z(p);
    for (int i = 0; i < n; ++i) {
        if (mu_block <= 0 || i % mu_block == 0) {
            for (int k = 0; k < p; ++k) mu_row(k) = rng.normal();
        }
        mu.row(i) = mu_row;
        for (int k = 0; k < p; ++k) z(k) = rng.normal();
        x.row(i) = mu_row + chol * z;
        y(i) = x.row(i).dot(beta) + rng.normal();
    }
    return HeterogeneousDraw{RegressionDataset(std::move(x), std::move(y)), beta, std::move(mu)};
}

std::pair<RegressionDataset, Vector> gen_experiment1(int n, std::uint64_t seed) {
    Vector beta = Vector::Zero(20);
    beta(0) = 3.0;
    beta(1) = 1.0;
    beta(2) = -1.0;
    beta(3) = -2.0;
    auto draw = gen_correlated_gaussian(n, beta, 0.5, seed);
    return {std::move(draw.data), std::move(draw.beta)};
}

std::pair<RegressionDataset, Vector> gen_experiment2(int n, std::uint64_t seed) {
    Vector beta(4);
    beta << 2.0, 0.5, -1.0, -2.0;
    auto draw = gen_correlated_gaussian(n, beta, 0.95, seed);
    return {std::move(draw.data), std::move(draw.beta)};
}

std::pair<RegressionDataset, Vector> gen_homogeneous(int n, int p, const Vector& beta, std::uint64_t seed) {
    if (beta.size() != p) throw DimensionMismatchError("gen_homogeneous: beta length differs from p");
    Rng rng(seed);
    Matrix x(n, p);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < p; ++k) x(i, k) = rng.normal();
        y(i) = x.row(i).dot(beta) + rng.normal();
    }
    return {RegressionDataset(std::move(x), std::move(y)), beta};
}

std::pair<RegressionDataset, Vector> gen_homogeneous_shared_design(int m, int n_batches, const Vector& beta,
                                                                   double decay, std::uint64_t seed) {
    const int p = static_cast<int>(beta.size());
    if (m < 1 || n_batches < 1) throw DomainError("generator: need m >= 1 and N >= 1");
    Rng rng(seed);
    Matrix design(m, p);
    const Matrix chol = decay_cholesky(p, decay);
    Vector z(p);
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < p; ++k) z(k) = rng.normal();
        design.row(i) = chol * z;
    }
    const int n = m * n_batches;
    Matrix x(n, p);
    Vector y(n);
    for (int j = 0; j < n_batches; ++j) {
        for (int i = 0; i < m; ++i) {
            x.row(j * m + i) = design.row(i);
            y(j * m + i) = design.row(i).dot(beta) + rng.normal();
        }
    }
    return {RegressionDataset(std::move(x), std::move(y)), beta};
}

double nonparam_truth(double x) { return std::sin(2.0 * M_PI * x); }

std::vector<RegressionDataset> gen_nonparam(int n_batches, int m, std::uint64_t seed, double tilt) {
    if (n_batches < 1 || m < 1) throw DomainError("generator: need N >= 1 and m >= 1");
    if (tilt < 0.0 || tilt > 1.0) throw DomainError("generator: tilt must lie in [0, 1]");
    std::vector<RegressionDataset> batches;
    batches.reserve(static_cast<std::size_t>(n_batches));
    for (int j = 0; j < n_batches; ++j) {
        // Drifting design: tilt grows along the batch sequence, so batch
        // distributions differ and the mean tilt does not cancel.
        const double kappa = tilt * (j + 0.5) / n_batches;
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(j) + 1}));
        Matrix x(m, 1);
        Vector y(m);
        for (int i = 0; i < m; ++i) {
            const double u = rng.u01();
            double xi;
            if (std::abs(kappa) < 1e-12) {
                xi = u;
            } else {
                const double a = 1.0 - kappa / 2.0;
                xi = (-a + std::sqrt(a * a + 2.0 * kappa * u)) / kappa;
            }
            xi = std::clamp(xi, 0.0, 1.0);
            x(i, 0) = xi;
            y(i) = nonparam_truth(xi) + 0.5 * rng.normal();
        }
        batches.emplace_back(std::move(x), std::move(y));
    }
    return batches;
}

void validate(ExperimentConfig& config) {
    static const std::vector<std::string> kExperiments = {"exp1_lasso", "exp2_ridge", "homogeneous", "nonparam"};
    if (std::find(kExperiments.begin(), kExperiments.end(), config.experiment) == kExperiments.end()) {
        throw ConfigError("config: unknown experiment '" + config.experiment + "'");
    }
    if (config.n < 1) throw ConfigError("config: n must be >= 1");
    if (config.N_grid.empty()) throw ConfigError("config: N_grid must be nonempty");
    for (int N : config.N_grid) {
        if (N < 1) throw ConfigError("config: N values must be >= 1");
        if (config.n % N != 0) {
            throw ConfigError("config: N = " + std::to_string(N) + " does not divide n = " + std::to_string(config.n));
        }
    }
    if (config.replicates < 1) throw ConfigError("config: replicates must be >= 1");
    if (config.partition != "contiguous" && config.partition != "shuffled") {
        throw ConfigError("config: partition must be contiguous or shuffled");
    }
    if (config.estimator.empty()) {
        if (config.experiment == "exp1_lasso") config.estimator = "lasso";
        else if (config.experiment == "exp2_ridge" || config.experiment == "homogeneous") config.estimator = "ridge";
        else config.estimator = "nw";
    }
    if (config.experiment == "nonparam") {
        if (config.estimator != "nw") throw ConfigError("config: the nonparam experiment uses the nw estimator");
        kernel_type_from_string(config.kernel);
        if (config.grid_points < 2) throw ConfigError("config: grid_points must be >= 2");
        if (!(config.bandwidth_c > 0.0)) throw ConfigError("config: bandwidth_c must be positive");
        if (!(config.bandwidth_exponent > 0.0) || !(config.bandwidth_exponent < 1.0)) {
            throw ConfigError("config: bandwidth_exponent must lie in (0, 1)");
        }
        if (config.tilt < 0.0 || config.tilt > 1.0) throw ConfigError("config: tilt must lie in [0, 1]");
    } else {
        if (config.estimator != "ols" && config.estimator != "ridge" && config.estimator != "lasso") {
            throw ConfigError("config: estimator must be ols, ridge or lasso");
        }
        if (config.cv_folds < 2) throw ConfigError("config: cv_folds must be >= 2");
        if (config.cv_grid_size < 1) throw ConfigError("config: cv_grid_size must be >= 1");
        if (config.lambda_fixed < 0.0) throw ConfigError("config: lambda must be nonnegative");
        if (!(config.rate_exponent > 0.0) || config.rate_exponent > 1.0) {
            throw ConfigError("config: rate_exponent must lie in (0, 1]");
        }
        if (config.selection_lambda_scale < 1.0) {
            throw ConfigError("config: selection_lambda_scale must be >= 1");
        }
        if (!(config.vote_threshold > 0.0) || config.vote_threshold > 1.0) {
            throw ConfigError("config: vote_threshold must lie in (0, 1]");
        }
    }
    if (config.experiment == "homogeneous") {
        if (config.p < 1) throw ConfigError("config: p must be >= 1");
        if (config.beta.empty()) {
            static const double kDefault[4] = {2.0, 0.5, -1.0, -2.0};
            config.beta.assign(static_cast<std::size_t>(config.p), 0.0);
            for (int k = 0; k < std::min(config.p, 4); ++k) config.beta[static_cast<std::size_t>(k)] = kDefault[k];
        }
        if (static_cast<int>(config.beta.size()) != config.p) {
            throw ConfigError("config: beta length must equal p");
        }
        if (config.null_threshold < 0.0) throw ConfigError("config: null_threshold must be nonnegative");
    }
    if (config.mu_block < -1) throw ConfigError("config: mu_block must be -1 (per batch), 0 (per row) or positive");
    if (config.threads < 0) throw ConfigError("config: threads must be nonnegative");
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (count <= 0) return;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

constexpr std::array<const char*, 4> kMethods = {"naive", "dc_expression", "bc_ge", "full_data"};

struct MethodOutcome {
    bool ok = false;
    Vector theta;
    Vector var_hat;
    std::string error;
};

struct ReplicateOutcome {
    std::array<MethodOutcome, 4> methods;
};

struct Batches {
    std::vector<Matrix> x;
    std::vector<Vector> y;
};

Batches materialize(const RegressionDataset& data, const BatchPartition& partition) {
    Batches batches;
    for (int j = 0; j < partition.n_batches(); ++j) {
        const RegressionDataset b = data.rows(partition.block(j));
        batches.x.push_back(b.x());
        batches.y.push_back(b.y());
    }
    return batches;
}

double resolve_lambda(const ExperimentConfig& cfg, const Batches& batches, std::uint64_t rep_seed) {
    if (cfg.estimator == "ols") return 0.0;
    if (cfg.lambda_mode == LambdaMode::fixed) return cfg.lambda_fixed;
    if (cfg.lambda_mode == LambdaMode::rate) {
        return cfg.lambda_fixed * std::pow(static_cast<double>(batches.x[0].rows()), -cfg.rate_exponent);
    }
    const PenaltyKind kind = cfg.estimator == "lasso" ? PenaltyKind::lasso : PenaltyKind::ridge;
    if (cfg.lambda_mode == LambdaMode::cv_first) {
        const auto grid = default_lambda_grid(batches.x[0], batches.y[0], cfg.cv_grid_size);
        return select_lambda_cv(batches.x[0], batches.y[0], kind, cfg.cv_folds, grid, derive_seed(rep_seed, {0xCF}));
    }
    std::vector<double> choices(batches.x.size());
    for (std::size_t j = 0; j < batches.x.size(); ++j) {
        const auto grid = default_lambda_grid(batches.x[j], batches.y[j], cfg.cv_grid_size);
        choices[j] = select_lambda_cv(batches.x[j], batches.y[j], kind, cfg.cv_folds, grid,
                                      derive_seed(rep_seed, {0xCF, static_cast<std::uint64_t>(j)}));
    }
    std::sort(choices.begin(), choices.end());
    const std::size_t mid = choices.size() / 2;
    return choices.size() % 2 == 1 ? choices[mid] : 0.5 * (choices[mid - 1] + choices[mid]);
}

LocalFit fit_one(const std::string& estimator, const Matrix& x, const Vector& y, double lambda) {
    if (estimator == "ols") return fit_ols(x, y);
    if (estimator == "ridge") return fit_ridge(x, y, lambda);
    return fit_lasso(x, y, lambda);
}

ReplicateOutcome run_parametric_replicate(const ExperimentConfig& cfg, int N, std::uint64_t rep_seed,
                                          const Vector& beta) {
    ReplicateOutcome out;
    try {
        const int mu_block = cfg.mu_block == -1 ? cfg.n / N : cfg.mu_block;
        RegressionDataset data = [&] {
            if (cfg.experiment == "exp1_lasso") return gen_correlated_gaussian(cfg.n, beta, 0.5, rep_seed, mu_block).data;
            if (cfg.experiment == "exp2_ridge") return gen_correlated_gaussian(cfg.n, beta, 0.95, rep_seed, mu_block).data;
            if (cfg.shared_design) return gen_homogeneous_shared_design(cfg.n / N, N, beta, 0.0, rep_seed).first;
            return gen_homogeneous(cfg.n, cfg.p, beta, rep_seed).first;
        }();
        const BatchPartition partition = cfg.partition == "shuffled"
                                             ? partition_shuffled(cfg.n, N, derive_seed(rep_seed, {0x5F}))
                                             : partition_contiguous(cfg.n, N);
        Batches batches = materialize(data, partition);
        const double lambda = resolve_lambda(cfg, batches, rep_seed);

        if (cfg.experiment == "homogeneous" && cfg.homogenize) {
            const int m = partition.batch_size(0);
            const double threshold = cfg.null_threshold > 0.0 ? cfg.null_threshold : 3.0 / std::sqrt(static_cast<double>(m));
            const RegressionDataset first(batches.x[0], batches.y[0]);
            const auto null_set = estimate_null_set(first, threshold);
            const HomogenizationPlan plan =
                build_plan(null_set, data.p(), N, ALawSpec{}, derive_seed(rep_seed, {0xA0}), /*with_shift=*/false);
            for (int j = 0; j < N; ++j) {
                const RegressionDataset u = apply_transform(RegressionDataset(batches.x[static_cast<std::size_t>(j)],
                                                                              batches.y[static_cast<std::size_t>(j)]),
                                                            plan, j);
                batches.x[static_cast<std::size_t>(j)] = u.x();
            }
        }

        std::vector<LocalFit> fits;
        fits.reserve(static_cast<std::size_t>(N));
        const double selection_lambda =
            cfg.estimator == "lasso" ? lambda * cfg.selection_lambda_scale : lambda;
        for (int j = 0; j < N; ++j) {
            fits.push_back(fit_one(cfg.estimator, batches.x[static_cast<std::size_t>(j)],
                                   batches.y[static_cast<std::size_t>(j)], selection_lambda));
        }

        if (cfg.estimator == "lasso") {
            // Two-round protocol in the stability-selection spirit: vote the
            // significant subset from fits under a harsher penalty, then
            // refit every batch on that subset at the estimation penalty, so
            // the closed representation holds on the determined support and
            // soft-threshold corners stay rare.
            const auto support = majority_vote_support(fits, cfg.vote_threshold);
            const int s = static_cast<int>(support.size());
            const int p = static_cast<int>(beta.size());
            for (int j = 0; j < N; ++j) {
                LocalFit restricted;
                restricted.theta_hat = Vector::Zero(p);
                restricted.gram = fits[static_cast<std::size_t>(j)].gram;
                restricted.support = support;
                restricted.lambda = lambda;
                restricted.m = fits[static_cast<std::size_t>(j)].m;
                restricted.kind = EstimatorKind::lasso;
                if (s > 0) {
                    Matrix x_s(batches.x[static_cast<std::size_t>(j)].rows(), s);
                    for (int a = 0; a < s; ++a)
                        x_s.col(a) = batches.x[static_cast<std::size_t>(j)].col(support[static_cast<std::size_t>(a)]);
                    const LocalFit refit = fit_lasso(x_s, batches.y[static_cast<std::size_t>(j)], lambda);
                    for (int a = 0; a < s; ++a)
                        restricted.theta_hat(support[static_cast<std::size_t>(a)]) = refit.theta_hat(a);
                    restricted.v_matrix = -invert_sym_checked(refit.gram, "restricted gram");
                } else {
                    restricted.v_matrix = Matrix(0, 0);
                }
                fits[static_cast<std::size_t>(j)] = std::move(restricted);
            }
        }

        const auto record = [&](int mi, const CompositionResult& result) {
            out.methods[static_cast<std::size_t>(mi)] = {true, result.theta_tilde, result.var_hat, ""};
        };
        try {
            record(0, naive_average(fits));
        } catch (const Error& e) {
            out.methods[0].error = e.what();
        }
        try {
            record(1, dc_expression(fits, fits.front().kind));
        } catch (const Error& e) {
            out.methods[1].error = e.what();
        }
        try {
            record(2, bc_ge(fits, cfg.vote_threshold));
        } catch (const Error& e) {
            out.methods[2].error = e.what();
        }
        try {
            double full_lambda = lambda;
            if (cfg.estimator != "ols" && cfg.lambda_mode == LambdaMode::rate) {
                full_lambda = cfg.lambda_fixed * std::pow(static_cast<double>(cfg.n), -cfg.rate_exponent);
            } else if (cfg.estimator != "ols" && cfg.lambda_mode != LambdaMode::fixed) {
                const PenaltyKind kind = cfg.estimator == "lasso" ? PenaltyKind::lasso : PenaltyKind::ridge;
                const auto grid = default_lambda_grid(data.x(), data.y(), cfg.cv_grid_size);
                full_lambda =
                    select_lambda_cv(data.x(), data.y(), kind, cfg.cv_folds, grid, derive_seed(rep_seed, {0xFD}));
            }
            const LocalFit full = fit_one(cfg.estimator, data.x(), data.y(), full_lambda);
            out.methods[3] = {true, full.theta_hat, Vector::Constant(data.p(), std::nan("")), ""};
        } catch (const Error& e) {
            out.methods[3].error = e.what();
        }
    } catch (const Error& e) {
        for (auto& m : out.methods) {
            if (!m.ok && m.error.empty()) m.error = e.what();
        }
    }
    return out;
}

ReplicateOutcome run_nonparam_replicate(const ExperimentConfig& cfg, int N, std::uint64_t rep_seed, Vector& ise_out,
                                        Matrix& curve_out) {
    // ise_out: per-method integrated squared error; curve_out: per-method estimated curve (methods x grid).
    ReplicateOutcome out;
    const int m = cfg.n / N;
    KernelSpec spec;
    spec.kernel = kernel_type_from_string(cfg.kernel);
    spec.c = cfg.bandwidth_c;
    spec.varsigma = cfg.bandwidth_exponent;
    spec.grid = default_grid(cfg.grid_points);
    const int g = cfg.grid_points;
    ise_out = Vector::Constant(4, std::nan(""));
    curve_out = Matrix::Constant(4, g, std::nan(""));

    try {
        const auto batches = gen_nonparam(N, m, rep_seed, cfg.tilt);
        Matrix curves(N, g);
        for (int j = 0; j < N; ++j) {
            for (int i = 0; i < g; ++i) curves(j, i) = nw_estimate(batches[static_cast<std::size_t>(j)], spec.grid(i), spec);
        }
        const Vector naive = curves.colwise().mean().transpose();
        const Vector pilot = pilot_curve(batches, spec);

        const auto ise = [&](const Vector& est) {
            double total = 0.0;
            for (int i = 0; i + 1 < g; ++i) {
                const double e0 = est(i) - nonparam_truth(spec.grid(i));
                const double e1 = est(i + 1) - nonparam_truth(spec.grid(i + 1));
                total += 0.5 * (e0 * e0 + e1 * e1) * (spec.grid(i + 1) - spec.grid(i));
            }
            return total;
        };

        out.methods[0].ok = true;
        curve_out.row(0) = naive.transpose();
        ise_out(0) = ise(naive);
        out.methods[1].error = "dc_expression is not defined for curve estimates";

        try {
            Matrix phi(N, g);
            for (int j = 0; j < N; ++j) {
                for (int i = 0; i < g; ++i) {
                    phi(j, i) = phi_covariate(batches[static_cast<std::size_t>(j)], spec.grid(i), spec, pilot(i));
                }
            }
            const auto curve = bc_ge_curve(curves, phi, spec.grid);
            Vector composite(g);
            for (int i = 0; i < g; ++i) {
                if (!curve[static_cast<std::size_t>(i)].ok) {
                    throw RankDeficientError("grid point " + std::to_string(i) + " rank deficient");
                }
                composite(i) = curve[static_cast<std::size_t>(i)].r_tilde;
            }
            out.methods[2].ok = true;
            curve_out.row(2) = composite.transpose();
            ise_out(2) = ise(composite);
        } catch (const Error& e) {
            out.methods[2].error = e.what();
        }

        try {
            Matrix pooled_x(cfg.n, 1);
            Vector pooled_y(cfg.n);
            int row = 0;
            for (const auto& b : batches) {
                pooled_x.block(row, 0, b.n(), 1) = b.x();
                pooled_y.segment(row, b.n()) = b.y();
                row += b.n();
            }
            const RegressionDataset pooled(std::move(pooled_x), std::move(pooled_y));
            Vector full(g);
            for (int i = 0; i < g; ++i) full(i) = nw_estimate(pooled, spec.grid(i), spec);
            out.methods[3].ok = true;
            curve_out.row(3) = full.transpose();
            ise_out(3) = ise(full);
        } catch (const Error& e) {
            out.methods[3].error = e.what();
        }
    } catch (const Error& e) {
        for (auto& mo : out.methods) {
            if (!mo.ok && mo.error.empty()) mo.error = e.what();
        }
    }
    return out;
}

std::string failure_note(const std::vector<const std::string*>& errors, int replicates) {
    int failed = 0;
    const std::string* first = nullptr;
    for (const auto* e : errors) {
        if (e && !e->empty()) {
            ++failed;
            if (!first) first = e;
        }
    }
    if (failed == 0) return "";
    return std::to_string(failed) + "/" + std::to_string(replicates) + " replicates failed: " + *first;
}

}  // namespace

std::string MetricsTable::to_csv() const {
    std::ostringstream out;
    out << "experiment,N,method,component,bias,mse,var_hat,replicates,seed,note\n";
    for (const auto& r : rows) {
        out << r.experiment << "," << r.N << "," << r.method << "," << r.component << "," << format_double(r.bias)
            << "," << format_double(r.mse) << "," << format_double(r.var_hat) << "," << r.replicates << "," << r.seed
            << "," << r.note << "\n";
    }
    return out.str();
}

MetricsTable run_experiment(const ExperimentConfig& config_in) {
    ExperimentConfig cfg = config_in;
    validate(cfg);
    MetricsTable table;

    Vector beta;
    if (cfg.experiment == "exp1_lasso") {
        beta = gen_experiment1(1, cfg.seed).second;
    } else if (cfg.experiment == "exp2_ridge") {
        beta = gen_experiment2(1, cfg.seed).second;
    } else if (cfg.experiment == "homogeneous") {
        beta = Eigen::Map<const Vector>(cfg.beta.data(), static_cast<Eigen::Index>(cfg.beta.size()));
    }

    for (std::size_t ni = 0; ni < cfg.N_grid.size(); ++ni) {
        const int N = cfg.N_grid[ni];

        if (cfg.experiment == "nonparam") {
            std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(cfg.replicates));
            std::vector<Vector> ises(static_cast<std::size_t>(cfg.replicates));
            std::vector<Matrix> curves(static_cast<std::size_t>(cfg.replicates));
            parallel_for(cfg.replicates, cfg.threads, [&](int r) {
                const std::uint64_t rep_seed = derive_seed(cfg.seed, {ni, static_cast<std::uint64_t>(r)});
                outcomes[static_cast<std::size_t>(r)] =
                    run_nonparam_replicate(cfg, N, rep_seed, ises[static_cast<std::size_t>(r)],
                                           curves[static_cast<std::size_t>(r)]);
            });
            const Vector grid = default_grid(cfg.grid_points);
            for (std::size_t mi = 0; mi < kMethods.size(); ++mi) {
                if (mi == 1) continue;  // no dc_expression for curves
                MetricsRow row;
                row.experiment = cfg.experiment;
                row.N = N;
                row.method = kMethods[mi];
                row.component = 0;
                row.replicates = cfg.replicates;
                row.seed = cfg.seed;
                double mise = 0.0;
                Vector mean_curve = Vector::Zero(cfg.grid_points);
                int ok = 0;
                std::vector<const std::string*> errors;
                for (int r = 0; r < cfg.replicates; ++r) {
                    const auto& outcome = outcomes[static_cast<std::size_t>(r)].methods[mi];
                    errors.push_back(&outcome.error);
                    if (!outcome.ok) continue;
                    ++ok;
                    mise += ises[static_cast<std::size_t>(r)](static_cast<Eigen::Index>(mi));
                    mean_curve += curves[static_cast<std::size_t>(r)].row(static_cast<Eigen::Index>(mi)).transpose();
                }
                row.note = failure_note(errors, cfg.replicates);
                if (ok == 0) {
                    row.bias = row.mse = row.var_hat = std::nan("");
                } else {
                    mean_curve /= ok;
                    double bias2 = 0.0;
                    for (int i = 0; i + 1 < cfg.grid_points; ++i) {
                        const double e0 = mean_curve(i) - nonparam_truth(grid(i));
                        const double e1 = mean_curve(i + 1) - nonparam_truth(grid(i + 1));
                        bias2 += 0.5 * (e0 * e0 + e1 * e1) * (grid(i + 1) - grid(i));
                    }
                    row.bias = bias2;  // integrated squared bias
                    row.mse = mise / ok;
                    row.var_hat = std::nan("");
                }
                table.rows.push_back(std::move(row));
            }
            continue;
        }

        std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(cfg.replicates));
        parallel_for(cfg.replicates, cfg.threads, [&](int r) {
            const std::uint64_t rep_seed = derive_seed(cfg.seed, {ni, static_cast<std::uint64_t>(r)});
            outcomes[static_cast<std::size_t>(r)] = run_parametric_replicate(cfg, N, rep_seed, beta);
        });

        const int p = static_cast<int>(beta.size());
        std::vector<int> significant;
        for (int k = 0; k < p; ++k) {
            if (beta(k) != 0.0) significant.push_back(k);
        }

        for (std::size_t mi = 0; mi < kMethods.size(); ++mi) {
            std::vector<const std::string*> errors;
            for (int r = 0; r < cfg.replicates; ++r) {
                errors.push_back(&outcomes[static_cast<std::size_t>(r)].methods[mi].error);
            }
            const std::string note = failure_note(errors, cfg.replicates);

            Vector bias = Vector::Zero(p), mse = Vector::Zero(p), var = Vector::Zero(p);
            int ok = 0;
            bool var_defined = kMethods[mi] != std::string("full_data");
            for (int r = 0; r < cfg.replicates; ++r) {
                const auto& outcome = outcomes[static_cast<std::size_t>(r)].methods[mi];
                if (!outcome.ok) continue;
                ++ok;
                bias += outcome.theta - beta;
                mse += (outcome.theta - beta).cwiseAbs2();
                if (var_defined) var += outcome.var_hat;
            }
            if (ok > 0) {
                bias /= ok;
                mse /= ok;
                var /= ok;
            }
            for (int k = 0; k < p; ++k) {
                MetricsRow row;
                row.experiment = cfg.experiment;
                row.N = N;
                row.method = kMethods[mi];
                row.component = k + 1;
                row.replicates = cfg.replicates;
                row.seed = cfg.seed;
                row.note = note;
                if (ok == 0) {
                    row.bias = row.mse = row.var_hat = std::nan("");
                } else {
                    row.bias = bias(k);
                    row.mse = mse(k);
                    row.var_hat = var_defined ? var(k) : std::nan("");
                }
                table.rows.push_back(std::move(row));
            }
            // Aggregate over the significant components.
            MetricsRow agg;
            agg.experiment = cfg.experiment;
            agg.N = N;
            agg.method = kMethods[mi];
            agg.component = 0;
            agg.replicates = cfg.replicates;
            agg.seed = cfg.seed;
            agg.note = note;
            if (ok == 0 || significant.empty()) {
                agg.bias = agg.mse = agg.var_hat = std::nan("");
            } else {
                double b = 0.0, m2 = 0.0, v = 0.0;
                for (int k : significant) {
                    b += std::abs(bias(k));
                    m2 += mse(k);
                    v += var(k);
                }
                agg.bias = b / static_cast<double>(significant.size());
                agg.mse = m2 / static_cast<double>(significant.size());
                agg.var_hat = var_defined ? v / static_cast<double>(significant.size()) : std::nan("");
            }
            table.rows.push_back(std::move(agg));
        }
    }
    return table;
}

}  // namespace gbcdc
