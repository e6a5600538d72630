#pragma once

#include <string>
#include <vector>

#include "gbcdc/linalg.hpp"

namespace gbcdc {

enum class EstimatorKind { ols, ridge, lasso, mz };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& s);

/// One batch's summary: the local estimate, the batch Gram matrix
/// (1/m) X^T X, the covariate matrix of the estimator's closed
/// representation, and the detected support. This is everything a worker
/// ships; raw rows never leave the batch.
struct LocalFit {
    Vector theta_hat;           ///< length p; zero off support for lasso
    Matrix gram;                ///< p x p (zero matrix for mz fits)
    Matrix v_matrix;            ///< p x p for ols/ridge/mz, |support| x |support| for lasso
    std::vector<int> support;   ///< ascending 0-based coordinate indices
    double lambda = 0.0;
    int m = 0;
    EstimatorKind kind = EstimatorKind::ols;
};

/// Throws when a LocalFit violates its structural invariants
/// (asymmetric gram, support out of range, nonzero off-support lasso
/// coefficients, covariate matrix of the wrong dimension).
void validate(const LocalFit& fit);

enum class CompositionMethod { naive, dc_expression, bc_ge };

std::string to_string(CompositionMethod method);

/// A composite (global) estimate assembled from batch summaries.
/// theta_tilde and var_hat always have the ambient length p; coordinates
/// outside `components` are zero. xi_tilde holds one fitted nuisance
/// vector per entry of `components` (empty for naive / dc_expression).
struct CompositionResult {
    Vector theta_tilde;
    std::vector<Vector> xi_tilde;
    Vector var_hat;
    double sigma2_hat = 0.0;
    CompositionMethod method = CompositionMethod::naive;
    int n_batches = 0;
    std::vector<int> components;
};

void validate(const CompositionResult& result);

enum class PenaltyKind { ridge, lasso };

/// Shrinkage penalty description. `rate_exponent` is the documented decay
/// rate of lambda in the batch size; it is configuration metadata only and
/// never enters a fit.
struct PenaltySpec {
    double lambda = 0.0;
    PenaltyKind kind = PenaltyKind::ridge;
    double rate_exponent = 0.5;
};

void validate(const PenaltySpec& spec);

}  // namespace gbcdc
