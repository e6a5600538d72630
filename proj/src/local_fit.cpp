#include "gbcdc/local_fit.hpp"

#include <algorithm>

#include "gbcdc/errors.hpp"

namespace gbcdc {

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::ols: return "ols";
        case EstimatorKind::ridge: return "ridge";
        case EstimatorKind::lasso: return "lasso";
        case EstimatorKind::mz: return "mz";
    }
    return "unknown";
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
    if (s == "ols") return EstimatorKind::ols;
    if (s == "ridge") return EstimatorKind::ridge;
    if (s == "lasso") return EstimatorKind::lasso;
    if (s == "mz") return EstimatorKind::mz;
    throw DomainError("unknown estimator kind '" + s + "'");
}

std::string to_string(CompositionMethod method) {
    switch (method) {
        case CompositionMethod::naive: return "naive";
        case CompositionMethod::dc_expression: return "dc_expression";
        case CompositionMethod::bc_ge: return "bc_ge";
    }
    return "unknown";
}

void validate(const LocalFit& fit) {
    const int p = static_cast<int>(fit.theta_hat.size());
    if (p < 1) throw DomainError("local fit: empty coefficient vector");
    if (fit.m < 1) throw DomainError("local fit: batch size m must be >= 1");
    if (fit.lambda < 0.0) throw DomainError("local fit: lambda must be nonnegative");
    if (fit.gram.rows() != p || fit.gram.cols() != p) {
        throw DimensionMismatchError("local fit: gram must be p x p");
    }
    if (!is_symmetric(fit.gram, 1e-12)) {
        throw DomainError("local fit: gram not symmetric within 1e-12 relative tolerance");
    }
    if (!std::is_sorted(fit.support.begin(), fit.support.end())) {
        throw DomainError("local fit: support must be ascending");
    }
    for (int k : fit.support) {
        if (k < 0 || k >= p) throw DomainError("local fit: support index out of range");
    }
    const int expected_v = fit.kind == EstimatorKind::lasso ? static_cast<int>(fit.support.size()) : p;
    if (fit.v_matrix.rows() != expected_v || fit.v_matrix.cols() != expected_v) {
        throw DimensionMismatchError("local fit: covariate matrix must be " + std::to_string(expected_v) + " x " +
                                     std::to_string(expected_v));
    }
    if (fit.kind == EstimatorKind::lasso) {
        std::vector<char> on(static_cast<std::size_t>(p), 0);
        for (int k : fit.support) on[static_cast<std::size_t>(k)] = 1;
        for (int k = 0; k < p; ++k) {
            if (!on[static_cast<std::size_t>(k)] && fit.theta_hat(k) != 0.0) {
                throw DomainError("local fit: lasso coefficient nonzero off support at coordinate " + std::to_string(k + 1));
            }
        }
    }
}

void validate(const CompositionResult& result) {
    if (result.theta_tilde.size() != result.var_hat.size()) {
        throw DimensionMismatchError("composition result: theta_tilde and var_hat lengths differ");
    }
    if ((result.var_hat.array() < 0.0).any()) {
        throw DomainError("composition result: negative variance estimate");
    }
    if (result.sigma2_hat < 0.0) throw DomainError("composition result: negative sigma2_hat");
    if (result.xi_tilde.size() != result.components.size()) {
        throw DimensionMismatchError("composition result: xi_tilde/components length mismatch");
    }
}

void validate(const PenaltySpec& spec) {
    if (spec.lambda < 0.0) throw DomainError("penalty: lambda must be nonnegative");
    if (!(spec.rate_exponent > 0.0) || spec.rate_exponent > 1.0) {
        throw DomainError("penalty: rate exponent must lie in (0, 1]");
    }
}

}  // namespace gbcdc
