#pragma once

#include <cstdint>
#include <vector>

#include "gbcdc/local_fit.hpp"

namespace gbcdc {

/// Ordinary least squares on one batch. The covariate matrix of the
/// representation is zero (no shrinkage term). SingularGramError when the
/// batch Gram is numerically singular.
LocalFit fit_ols(const Matrix& batch_x, const Vector& batch_y);

/// Ridge fit theta = ((1/m) X^T X + lambda I)^{-1} (1/m) X^T y with
/// covariate matrix -((1/m) X^T X + lambda I)^{-1}.
LocalFit fit_ridge(const Matrix& batch_x, const Vector& batch_y, double lambda);

/// Lasso on the (1/2m)-scaled objective by cyclic coordinate descent with
/// covariance updates. Converged when the largest coordinate change in a
/// sweep falls below `tol` and the subgradient stationarity conditions hold
/// to 10*tol; ConvergenceError after `max_iter` sweeps otherwise.
/// The covariate matrix is -((1/m) X_S^T X_S)^{-1} on the detected support
/// (coordinates with |theta_k| > 1e-10).
LocalFit fit_lasso(const Matrix& batch_x, const Vector& batch_y, double lambda, double tol = 1e-8,
                   int max_iter = 10000);

/// Log-spaced grid of `size` values from lambda_max down to
/// 1e-3 * lambda_max, descending, where lambda_max = max_k |(1/m) x_k^T y|
/// (the smallest penalty that zeroes every lasso coordinate).
std::vector<double> default_lambda_grid(const Matrix& batch_x, const Vector& batch_y, int size = 50);

/// K-fold cross-validation over a descending positive grid; returns the
/// grid value minimizing mean held-out squared prediction error, ties
/// broken toward the larger penalty. Fold assignment is a seeded shuffle,
/// deterministic given the seed.
double select_lambda_cv(const Matrix& batch_x, const Vector& batch_y, PenaltyKind kind, int folds,
                        const std::vector<double>& grid, std::uint64_t seed);

}  // namespace gbcdc
