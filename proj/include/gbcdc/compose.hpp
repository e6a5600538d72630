#pragma once

#include <vector>

#include "gbcdc/local_fit.hpp"

namespace gbcdc {

/// The composite regression of one coordinate: batch estimates of component
/// k as responses, the k-th rows of the batch covariate matrices as
/// covariates. The intercept of this regression is the bias-corrected
/// global estimate of the coordinate.
struct ComponentRegression {
    Vector responses;   ///< length N
    Matrix covariates;  ///< N x q
    int component_index = 0;
};

struct ComponentEstimate {
    double theta = 0.0;
    Vector xi;
    double var_hat = 0.0;
    double sigma2_hat = 0.0;
};

/// Sufficient statistics of an intercept-plus-slopes least squares problem.
/// Shared by the batch, streaming, estimating-equation and kernel paths so
/// they all solve (and fail) identically.
struct LsSummary {
    long long n = 0;      ///< number of responses
    Vector sum_v;         ///< length q
    Matrix sum_vv;        ///< q x q
    double sum_y = 0.0;
    Vector sum_vy;        ///< length q
    double sum_y2 = 0.0;
};

LsSummary summarize_regression(const ComponentRegression& reg);

/// Intercept/slope least squares from sufficient statistics. The centered
/// covariate scatter is eigen-decomposed; a reciprocal condition below
/// 1e-12 raises RankDeficientError (the usual cause is identically
/// distributed batches; the homogenization transform restores spread).
/// InsufficientBatchesError when n <= q + 1.
ComponentEstimate solve_intercept_ls(const LsSummary& sums);

/// Bias-corrected global estimate of one component: the intercept of the
/// component regression, with variance sigma2_hat * e1' ((1,V)'(1,V))^-1 e1.
ComponentEstimate bc_ge_component(const ComponentRegression& reg);

/// Residual variance RSS / (N - q - 1) of a fitted component regression.
double estimate_sigma2(const ComponentRegression& reg, double theta, const Vector& xi);

/// Mean of the batch estimates; var_hat is the between-batch empirical
/// variance divided by N.
CompositionResult naive_average(const std::vector<LocalFit>& fits);

/// Gram-weighted aggregation. Ridge/ols: pooled-Gram weights with the mean
/// batch penalty; lasso: support-restricted Gram weights, all fits must
/// already share one support (apply majority_vote_support +
/// restrict_to_support first; SupportMismatchError otherwise).
CompositionResult dc_expression(const std::vector<LocalFit>& fits, EstimatorKind kind);

/// Coordinates appearing in at least ceil(threshold * N) batch supports.
std::vector<int> majority_vote_support(const std::vector<LocalFit>& fits, double threshold = 0.5);

/// Re-expresses each fit on the given common support: coefficients outside
/// it are zeroed and the covariate matrix is rebuilt from the stored batch
/// Gram restricted to the support.
std::vector<LocalFit> restrict_to_support(const std::vector<LocalFit>& fits, const std::vector<int>& support);

/// Bias-corrected global estimator: one component regression per
/// coordinate. Lasso fits are first restricted to the majority-vote
/// support. Component failures propagate annotated with the coordinate.
CompositionResult bc_ge(const std::vector<LocalFit>& fits, double vote_threshold = 0.5);

/// Plug-in mean squared error of the full-data lasso coordinate:
/// lambda^2 sgn' E[v v'] sgn + sigma^2 / n. DomainError unless e_vvT is
/// symmetric positive semidefinite.
double lasso_full_mse(double lambda, const Eigen::VectorXi& sign_beta, const Matrix& e_vvT, double sigma2, long long n);

}  // namespace gbcdc
