#include "gbcdc/compose.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbcdc/errors.hpp"

namespace gbcdc {

namespace {

void check_same_shape(const std::vector<LocalFit>& fits) {
    if (fits.empty()) throw DomainError("composition: no fits supplied");
    const auto p = fits.front().theta_hat.size();
    for (const auto& f : fits) {
        if (f.theta_hat.size() != p) throw DimensionMismatchError("composition: fits disagree on dimension");
    }
}

Vector between_batch_variance(const std::vector<LocalFit>& fits) {
    const auto n = static_cast<double>(fits.size());
    const auto p = fits.front().theta_hat.size();
    Vector mean = Vector::Zero(p);
    for (const auto& f : fits) mean += f.theta_hat;
    mean /= n;
    Vector var = Vector::Zero(p);
    if (fits.size() > 1) {
        for (const auto& f : fits) var += (f.theta_hat - mean).cwiseAbs2();
        var /= (n - 1.0);
    }
    return var / n;
}

std::vector<int> all_coordinates(Eigen::Index p) {
    std::vector<int> s(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) s[static_cast<std::size_t>(k)] = static_cast<int>(k);
    return s;
}

double mean_lambda(const std::vector<LocalFit>& fits) {
    double sum = 0.0;
    for (const auto& f : fits) sum += f.lambda;
    return sum / static_cast<double>(fits.size());
}

}  // namespace

LsSummary summarize_regression(const ComponentRegression& reg) {
    const auto n = reg.responses.size();
    if (reg.covariates.rows() != n) throw DimensionMismatchError("component regression: responses/covariates rows differ");
    LsSummary s;
    s.n = n;
    s.sum_v = reg.covariates.colwise().sum().transpose();
    s.sum_vv = reg.covariates.transpose() * reg.covariates;
    s.sum_y = reg.responses.sum();
    s.sum_vy = reg.covariates.transpose() * reg.responses;
    s.sum_y2 = reg.responses.squaredNorm();
    return s;
}

ComponentEstimate solve_intercept_ls(const LsSummary& sums) {
    const auto q = sums.sum_v.size();
    const double n = static_cast<double>(sums.n);
    if (sums.n <= q + 1) {
        throw InsufficientBatchesError("composite regression: need N > q + 1, got N = " + std::to_string(sums.n) +
                                       " with q = " + std::to_string(q));
    }
    const Vector v_bar = sums.sum_v / n;
    const double y_bar = sums.sum_y / n;
    Matrix scatter = sums.sum_vv - sums.sum_v * v_bar.transpose();
    scatter = (scatter + scatter.transpose()) / 2.0;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
    const Vector& lam = eig.eigenvalues();
    const double lam_max = lam.cwiseAbs().maxCoeff();
    const double lam_min = std::max(lam.minCoeff(), 0.0);
    if (lam_max <= 0.0 || lam_min / lam_max < kRcondCap) {
        throw RankDeficientError(
            "composite regression: covariate scatter rank deficient (rcond below 1e-12); "
            "batch covariates carry no spread - homogenize identically distributed batches first");
    }
    const Matrix& q_mat = eig.eigenvectors();
    const auto solve = [&](const Vector& rhs) { return q_mat * (q_mat.transpose() * rhs).cwiseQuotient(lam); };

    ComponentEstimate est;
    const Vector c = sums.sum_vy - sums.sum_v * y_bar;
    est.xi = solve(c);
    est.theta = y_bar - est.xi.dot(v_bar);

    double rss = sums.sum_y2 - 2.0 * est.theta * sums.sum_y - 2.0 * est.xi.dot(sums.sum_vy) + n * est.theta * est.theta +
                 2.0 * est.theta * est.xi.dot(sums.sum_v) + est.xi.dot(sums.sum_vv * est.xi);
    rss = std::max(rss, 0.0);
    est.sigma2_hat = rss / static_cast<double>(sums.n - q - 1);
    est.var_hat = est.sigma2_hat * (1.0 / n + v_bar.dot(solve(v_bar)));
    est.var_hat = std::max(est.var_hat, 0.0);
    return est;
}

ComponentEstimate bc_ge_component(const ComponentRegression& reg) {
    return solve_intercept_ls(summarize_regression(reg));
}

double estimate_sigma2(const ComponentRegression& reg, double theta, const Vector& xi) {
    const auto n = reg.responses.size();
    const auto q = reg.covariates.cols();
    if (reg.covariates.rows() != n) throw DimensionMismatchError("estimate_sigma2: responses/covariates rows differ");
    if (xi.size() != q) throw DimensionMismatchError("estimate_sigma2: xi length differs from covariate count");
    if (n <= q + 1) {
        throw InsufficientBatchesError("estimate_sigma2: need N > q + 1, got N = " + std::to_string(n));
    }
    double rss = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double r = reg.responses(j) - theta - xi.dot(reg.covariates.row(j));
        rss += r * r;
    }
    return rss / static_cast<double>(n - q - 1);
}

CompositionResult naive_average(const std::vector<LocalFit>& fits) {
    check_same_shape(fits);
    const auto p = fits.front().theta_hat.size();
    CompositionResult result;
    result.theta_tilde = Vector::Zero(p);
    for (const auto& f : fits) result.theta_tilde += f.theta_hat;
    result.theta_tilde /= static_cast<double>(fits.size());
    result.var_hat = between_batch_variance(fits);
    result.method = CompositionMethod::naive;
    result.n_batches = static_cast<int>(fits.size());
    result.components = all_coordinates(p);
    result.xi_tilde.assign(result.components.size(), Vector());
    return result;
}

CompositionResult dc_expression(const std::vector<LocalFit>& fits, EstimatorKind kind) {
    check_same_shape(fits);
    const auto p = fits.front().theta_hat.size();
    const double n_batches = static_cast<double>(fits.size());
    CompositionResult result;
    result.method = CompositionMethod::dc_expression;
    result.n_batches = static_cast<int>(fits.size());

    if (kind == EstimatorKind::lasso) {
        const auto& support = fits.front().support;
        for (const auto& f : fits) {
            if (f.support != support) {
                throw SupportMismatchError(
                    "dc_expression: lasso fits carry different supports; vote a common support and restrict first");
            }
        }
        const int s = static_cast<int>(support.size());
        result.theta_tilde = Vector::Zero(p);
        result.var_hat = between_batch_variance(fits);
        result.components = support;
        result.xi_tilde.assign(result.components.size(), Vector());
        if (s == 0) return result;
        Matrix pooled = Matrix::Zero(s, s);
        Vector weighted = Vector::Zero(s);
        for (const auto& f : fits) {
            Matrix g_ss(s, s);
            Vector theta_s(s);
            for (int a = 0; a < s; ++a) {
                theta_s(a) = f.theta_hat(support[static_cast<std::size_t>(a)]);
                for (int b = 0; b < s; ++b)
                    g_ss(a, b) = f.gram(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
            }
            pooled += g_ss;
            weighted += g_ss * theta_s;
        }
        const Vector theta_s = solve_sym_checked(pooled, weighted, "dc_expression pooled gram");
        for (int a = 0; a < s; ++a) result.theta_tilde(support[static_cast<std::size_t>(a)]) = theta_s(a);
        return result;
    }

    // ridge / ols: pooled-Gram weights; the +lambda I term uses the mean
    // batch penalty (the closed form assumes one shared penalty).
    Matrix pooled = Matrix::Zero(p, p);
    Vector weighted = Vector::Zero(p);
    for (const auto& f : fits) {
        pooled += f.gram;
        weighted += f.gram * f.theta_hat;
    }
    pooled /= n_batches;
    weighted /= n_batches;
    const double lambda = kind == EstimatorKind::ols ? 0.0 : mean_lambda(fits);
    const Matrix lhs = pooled + lambda * Matrix::Identity(p, p);
    result.theta_tilde = solve_sym_checked(lhs, weighted, "dc_expression pooled gram");
    result.var_hat = between_batch_variance(fits);
    result.components = all_coordinates(p);
    result.xi_tilde.assign(result.components.size(), Vector());
    return result;
}

std::vector<int> majority_vote_support(const std::vector<LocalFit>& fits, double threshold) {
    if (fits.empty()) throw DomainError("majority vote: no fits supplied");
    if (!(threshold > 0.0) || threshold > 1.0) throw DomainError("majority vote: threshold must lie in (0, 1]");
    const auto p = fits.front().theta_hat.size();
    std::vector<int> counts(static_cast<std::size_t>(p), 0);
    for (const auto& f : fits) {
        for (int k : f.support) counts[static_cast<std::size_t>(k)] += 1;
    }
    const int needed = static_cast<int>(std::ceil(threshold * static_cast<double>(fits.size())));
    std::vector<int> selected;
    for (Eigen::Index k = 0; k < p; ++k) {
        if (counts[static_cast<std::size_t>(k)] >= needed) selected.push_back(static_cast<int>(k));
    }
    return selected;
}

std::vector<LocalFit> restrict_to_support(const std::vector<LocalFit>& fits, const std::vector<int>& support) {
    check_same_shape(fits);
    const auto p = fits.front().theta_hat.size();
    const int s = static_cast<int>(support.size());
    for (int k : support) {
        if (k < 0 || k >= p) throw DomainError("restrict: support index out of range");
    }
    std::vector<LocalFit> restricted;
    restricted.reserve(fits.size());
    for (const auto& f : fits) {
        LocalFit r = f;
        r.support = support;
        r.theta_hat = Vector::Zero(p);
        for (int k : support) r.theta_hat(k) = f.theta_hat(k);
        if (s > 0) {
            Matrix g_ss(s, s);
            for (int a = 0; a < s; ++a)
                for (int b = 0; b < s; ++b)
                    g_ss(a, b) = f.gram(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
            r.v_matrix = -invert_sym_checked(g_ss, "restricted gram");
        } else {
            r.v_matrix = Matrix(0, 0);
        }
        r.kind = EstimatorKind::lasso;
        restricted.push_back(std::move(r));
    }
    return restricted;
}

CompositionResult bc_ge(const std::vector<LocalFit>& fits, double vote_threshold) {
    check_same_shape(fits);
    const auto p = fits.front().theta_hat.size();
    const auto n = static_cast<Eigen::Index>(fits.size());

    const bool lasso = fits.front().kind == EstimatorKind::lasso;
    const std::vector<LocalFit>* active = &fits;
    std::vector<LocalFit> restricted;
    if (lasso) {
        restricted = restrict_to_support(fits, majority_vote_support(fits, vote_threshold));
        active = &restricted;
    }
    const std::vector<int>& components = active->front().support;
    const int q = static_cast<int>(components.size());
    if (n <= q + 1) {
        throw InsufficientBatchesError("bc_ge: need N > q + 1, got N = " + std::to_string(n) +
                                       " with q = " + std::to_string(q));
    }

    CompositionResult result;
    result.theta_tilde = Vector::Zero(p);
    result.var_hat = Vector::Zero(p);
    result.method = CompositionMethod::bc_ge;
    result.n_batches = static_cast<int>(fits.size());
    result.components = components;
    double sigma2_sum = 0.0;
    for (int idx = 0; idx < q; ++idx) {
        const int k = components[static_cast<std::size_t>(idx)];
        ComponentRegression reg;
        reg.component_index = k;
        reg.responses.resize(n);
        reg.covariates.resize(n, q);
        for (Eigen::Index j = 0; j < n; ++j) {
            const LocalFit& f = (*active)[static_cast<std::size_t>(j)];
            reg.responses(j) = f.theta_hat(k);
            reg.covariates.row(j) = f.v_matrix.row(idx);
        }
        try {
            const ComponentEstimate est = bc_ge_component(reg);
            result.theta_tilde(k) = est.theta;
            result.var_hat(k) = est.var_hat;
            result.xi_tilde.push_back(est.xi);
            sigma2_sum += est.sigma2_hat;
        } catch (const RankDeficientError& e) {
            throw RankDeficientError("bc_ge: component " + std::to_string(k + 1) + ": " + e.what());
        }
    }
    if (q > 0) result.sigma2_hat = sigma2_sum / q;
    return result;
}

double lasso_full_mse(double lambda, const Eigen::VectorXi& sign_beta, const Matrix& e_vvT, double sigma2, long long n) {
    if (lambda < 0.0) throw DomainError("lasso_full_mse: lambda must be nonnegative");
    if (sigma2 < 0.0) throw DomainError("lasso_full_mse: sigma2 must be nonnegative");
    if (n < 1) throw DomainError("lasso_full_mse: n must be >= 1");
    if (e_vvT.rows() != sign_beta.size() || e_vvT.cols() != sign_beta.size()) {
        throw DimensionMismatchError("lasso_full_mse: E[vv'] dimension differs from sign vector");
    }
    if (!is_symmetric(e_vvT, 1e-10)) throw DomainError("lasso_full_mse: E[vv'] must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(e_vvT);
    const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(scale, 1.0)) {
        throw DomainError("lasso_full_mse: E[vv'] must be positive semidefinite");
    }
    const Vector sgn = sign_beta.cast<double>();
    return lambda * lambda * sgn.dot(e_vvT * sgn) + sigma2 / static_cast<double>(n);
}

}  // namespace gbcdc
