#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gbcdc/dataset.hpp"
#include "gbcdc/kernel.hpp"
#include "gbcdc/local_fit.hpp"

namespace gbcdc {

/// Heterogeneous-rows generator: X_i ~ N(mu_i, Sigma) with
/// Sigma_ab = decay^|a-b|, mu_i ~ N(0, I) drawn per observation (or once
/// per `mu_block` consecutive rows when mu_block > 0), y = X beta + eps,
/// eps ~ N(0, 1). Deterministic given the seed.
struct HeterogeneousDraw {
    RegressionDataset data;
    Vector beta;
    Matrix mu;  ///< the row means actually used (n x p)
};
HeterogeneousDraw gen_correlated_gaussian(int n, const Vector& beta, double decay, std::uint64_t seed,
                                          int mu_block = 0);

/// p = 20, beta = (3, 1, -1, -2, 0, ..., 0), decay 0.5.
std::pair<RegressionDataset, Vector> gen_experiment1(int n, std::uint64_t seed);

/// p = 4, beta = (2, 0.5, -1, -2), decay 0.95.
std::pair<RegressionDataset, Vector> gen_experiment2(int n, std::uint64_t seed);

/// i.i.d. standardized Gaussian design (independent coordinates),
/// y = X beta + eps.
std::pair<RegressionDataset, Vector> gen_homogeneous(int n, int p, const Vector& beta, std::uint64_t seed);

/// The fixed-design degenerate case: one m-row design drawn once (optionally
/// with decay-correlated columns) and reused by every batch, with fresh
/// noise per row. Batches are then identically distributed in the strongest
/// sense, so composite rank deficiency is exact.
std::pair<RegressionDataset, Vector> gen_homogeneous_shared_design(int m, int n_batches, const Vector& beta,
                                                                   double decay, std::uint64_t seed);

/// True curve of the nonparametric testbed.
double nonparam_truth(double x);

/// N batches of m observations each with single covariate on [0, 1] and
/// y = sin(2 pi x) + N(0, 0.25). Batch j draws x from the tilted density
/// 1 + kappa_j (x - 1/2) with kappa_j laddered over [-tilt, tilt], which
/// keeps the batch designs heterogeneous.
std::vector<RegressionDataset> gen_nonparam(int n_batches, int m, std::uint64_t seed, double tilt = 1.0);

/// How the shrinkage penalty shared by all batches of a cell is chosen.
enum class LambdaMode {
    fixed,      ///< use lambda_fixed as is
    rate,       ///< lambda_fixed * m^(-rate_exponent), per cell
    cv_first,   ///< cross-validate on the first batch
    cv_median,  ///< cross-validate per batch, share the median
};

struct ExperimentConfig {
    std::string experiment = "exp1_lasso";  // exp1_lasso | exp2_ridge | homogeneous | nonparam
    int n = 2000;
    std::vector<int> N_grid = {10, 20, 50, 100};
    int replicates = 100;
    std::uint64_t seed = 1;
    std::string partition = "contiguous";  // contiguous | shuffled
    int threads = 0;                       // 0 = all logical cores

    // shrinkage estimators
    std::string estimator = "";  // defaulted from the experiment tag
    LambdaMode lambda_mode = LambdaMode::rate;
    double lambda_fixed = 0.3;
    double rate_exponent = 0.5;
    double selection_lambda_scale = 5.0;  ///< harsher penalty for the lasso voting round
    int cv_folds = 5;
    int cv_grid_size = 50;
    double vote_threshold = 0.5;
    int mu_block = -1;  // row-mean sharing: -1 = one draw per batch, 0 = per observation, k > 0 = blocks of k rows

    // homogeneous experiment
    int p = 4;
    std::vector<double> beta;  // empty = (2, 0.5, -1, -2) truncated/padded to p
    bool shared_design = true;
    bool homogenize = true;
    double null_threshold = 0.0;  // 0 = 3 / sqrt(m)

    // nonparametric experiment
    std::string kernel = "gaussian";
    double bandwidth_c = 1.0;
    double bandwidth_exponent = 1.0 / 3.0;
    int grid_points = 101;
    double tilt = 1.0;
};

/// Fills experiment-dependent defaults and checks divisibility and ranges;
/// ConfigError on violation.
void validate(ExperimentConfig& config);

struct MetricsRow {
    std::string experiment;
    int N = 0;
    std::string method;
    int component = 0;  ///< 1-based coordinate; 0 = aggregate over the significant set
    double bias = 0.0;
    double mse = 0.0;
    double var_hat = 0.0;
    int replicates = 0;
    std::uint64_t seed = 0;
    std::string note;
};

struct MetricsTable {
    std::vector<MetricsRow> rows;
    std::string to_csv() const;
};

/// Full Monte-Carlo sweep over N_grid: per N and method (naive,
/// dc_expression, bc_ge, full_data) the per-component bias, MSE and mean
/// plug-in variance over the replicates, plus an aggregate row over the
/// significant components. A method failure in a replicate is recorded in
/// the row note and never aborts the sweep. Deterministic given
/// config + seed, independent of the thread count.
MetricsTable run_experiment(const ExperimentConfig& config);

/// Runs `body(i)` for i in [0, count) over `threads` workers (0 = logical
/// cores). The body must be safe to run concurrently for distinct i.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace gbcdc
