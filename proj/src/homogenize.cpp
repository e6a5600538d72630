#include "gbcdc/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbcdc/errors.hpp"
#include "gbcdc/rng.hpp"

namespace gbcdc {

namespace {

bool in_null_set(const HomogenizationPlan& plan, int k) {
    return std::binary_search(plan.null_set.begin(), plan.null_set.end(), k);
}

Vector standardized_column_means(const Matrix& x) {
    return x.colwise().mean().transpose();
}

}  // namespace

bool HomogenizationPlan::is_identity() const {
    if (b.cwiseAbs().maxCoeff() > 0.0) return false;
    if ((center.array() != 0.0).any() || (scale.array() != 1.0).any()) return false;
    for (const auto& a : a_values) {
        if (a.size() > 0 && (a.array() != 1.0).any()) return false;
    }
    return true;
}

void validate(const HomogenizationPlan& plan) {
    const int p = plan.p();
    if (p < 1) throw DomainError("homogenization plan: p must be >= 1");
    if (!std::is_sorted(plan.null_set.begin(), plan.null_set.end())) {
        throw DomainError("homogenization plan: null set must be ascending");
    }
    for (int k : plan.null_set) {
        if (k < 0 || k >= p) throw DomainError("homogenization plan: null coordinate out of range");
    }
    for (const auto& a : plan.a_values) {
        if (a.size() != static_cast<Eigen::Index>(plan.null_set.size())) {
            throw DimensionMismatchError("homogenization plan: scaling vector length differs from null set");
        }
        if ((a.array() == 0.0).any()) throw DomainError("homogenization plan: scaling values must be nonzero");
    }
    for (int k : plan.null_set) {
        if (plan.b(k) != 0.0) throw DomainError("homogenization plan: shift must vanish on null coordinates");
    }
    const double b_norm = plan.b.norm();
    if (b_norm != 0.0 && std::abs(b_norm - 1.0) > 1e-12) {
        throw DomainError("homogenization plan: shift must have unit norm (or be zero)");
    }
    if (plan.center.size() != p || plan.scale.size() != p) {
        throw DimensionMismatchError("homogenization plan: standardization moments must have length p");
    }
    if ((plan.scale.array() <= 0.0).any()) throw DomainError("homogenization plan: scales must be positive");
}

std::vector<int> estimate_null_set(const RegressionDataset& batch, double threshold) {
    if (!(threshold > 0.0)) throw DomainError("estimate_null_set: threshold must be positive");
    const Matrix& x = batch.x();
    const Vector& y = batch.y();
    const double m = static_cast<double>(batch.n());
    const Vector x_mean = standardized_column_means(x);
    const double y_mean = y.mean();
    const Vector yc = y.array() - y_mean;
    const double y_sd = std::sqrt(yc.squaredNorm() / m);

    std::vector<int> null_set;
    for (int k = 0; k < batch.p(); ++k) {
        const Vector xc = x.col(k).array() - x_mean(k);
        const double x_sd = std::sqrt(xc.squaredNorm() / m);
        double corr = 0.0;
        if (x_sd > 0.0 && y_sd > 0.0) corr = xc.dot(yc) / (m * x_sd * y_sd);
        if (std::abs(corr) < threshold) null_set.push_back(k);
    }
    return null_set;
}

HomogenizationPlan build_plan(const std::vector<int>& null_set, int p, int n_batches, const ALawSpec& a_law,
                              std::uint64_t seed, bool with_shift) {
    if (p < 1) throw DomainError("build_plan: p must be >= 1");
    if (n_batches < 1) throw DomainError("build_plan: need at least one batch");
    if (!(a_law.low > 0.0) || a_law.high < a_law.low) {
        throw DomainError("build_plan: scaling law support must be positive with low <= high");
    }
    const bool has_gap = a_law.gap_low < a_law.gap_high && a_law.gap_low > a_law.low && a_law.gap_high < a_law.high;

    HomogenizationPlan plan;
    plan.null_set = null_set;
    std::sort(plan.null_set.begin(), plan.null_set.end());
    plan.b = Vector::Zero(p);
    plan.center = Vector::Zero(p);
    plan.scale = Vector::Ones(p);
    plan.seed = seed;
    plan.a_law = a_law;

    if (with_shift) {
        int first_free = -1;
        for (int k = 0; k < p; ++k) {
            if (!std::binary_search(plan.null_set.begin(), plan.null_set.end(), k)) {
                first_free = k;
                break;
            }
        }
        if (first_free < 0) {
            throw DomainError("build_plan: shift requested but every coordinate is in the null set");
        }
        plan.b(first_free) = 1.0;
    }

    Rng rng(seed);
    const auto draw = [&]() {
        if (!has_gap) return rng.uniform(a_law.low, a_law.high);
        const double left = a_law.gap_low - a_law.low;
        const double right = a_law.high - a_law.gap_high;
        const double u = rng.u01() * (left + right);
        return u < left ? a_law.low + u : a_law.gap_high + (u - left);
    };
    const bool degenerate = a_law.low == a_law.high;
    const int width = static_cast<int>(plan.null_set.size());
    for (int j = 0; j < n_batches; ++j) {
        Vector a(width);
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (int i = 0; i < width; ++i) a(i) = draw();
            bool duplicate = false;
            if (!degenerate && width > 0) {
                for (const auto& prev : plan.a_values) {
                    if ((prev - a).cwiseAbs().maxCoeff() == 0.0) {
                        duplicate = true;
                        break;
                    }
                }
            }
            if (!duplicate) break;
        }
        plan.a_values.push_back(std::move(a));
    }
    validate(plan);
    return plan;
}

void learn_standardization(HomogenizationPlan& plan, const RegressionDataset& first_batch) {
    if (first_batch.p() != plan.p()) throw DimensionMismatchError("learn_standardization: dimension mismatch");
    const Matrix& x = first_batch.x();
    const double m = static_cast<double>(first_batch.n());
    plan.center = x.colwise().mean().transpose();
    for (int k = 0; k < plan.p(); ++k) {
        const double var = (x.col(k).array() - plan.center(k)).square().sum() / m;
        if (var <= 0.0) throw DomainError("learn_standardization: column " + std::to_string(k + 1) + " is constant");
        plan.scale(k) = std::sqrt(var);
    }
}

namespace {

Vector diagonal_for_batch(const HomogenizationPlan& plan, int batch_index) {
    if (batch_index < 0 || batch_index >= plan.n_batches()) {
        throw DomainError("homogenization: batch index out of range");
    }
    Vector diag = Vector::Ones(plan.p());
    const Vector& a = plan.a_values[static_cast<std::size_t>(batch_index)];
    for (std::size_t i = 0; i < plan.null_set.size(); ++i) {
        diag(plan.null_set[i]) = a(static_cast<Eigen::Index>(i));
    }
    return diag;
}

}  // namespace

RegressionDataset apply_transform(const RegressionDataset& batch, const HomogenizationPlan& plan, int batch_index) {
    if (batch.p() != plan.p()) throw DimensionMismatchError("apply_transform: dimension mismatch");
    const Vector diag = diagonal_for_batch(plan, batch_index);
    Matrix u = (batch.x().rowwise() - plan.center.transpose()).array().rowwise() / plan.scale.transpose().array();
    u = u.array().rowwise() * diag.transpose().array();
    u.rowwise() += plan.b.transpose();
    return RegressionDataset(std::move(u), batch.y());
}

RegressionDataset invert_transform(const RegressionDataset& transformed, const HomogenizationPlan& plan,
                                   int batch_index) {
    if (transformed.p() != plan.p()) throw DimensionMismatchError("invert_transform: dimension mismatch");
    const Vector diag = diagonal_for_batch(plan, batch_index);
    Matrix x = transformed.x().rowwise() - plan.b.transpose();
    x = x.array().rowwise() / diag.transpose().array();
    x = x.array().rowwise() * plan.scale.transpose().array();
    x.rowwise() += plan.center.transpose();
    return RegressionDataset(std::move(x), transformed.y());
}

EquivalenceReport check_equivalence(const RegressionDataset& dataset, const BatchPartition& partition,
                                    const HomogenizationPlan& plan, const Vector& beta_true) {
    validate(plan);
    if (dataset.p() != plan.p()) throw DimensionMismatchError("check_equivalence: dimension mismatch");
    if (beta_true.size() != plan.p()) throw DimensionMismatchError("check_equivalence: beta length mismatch");
    if (partition.n_batches() != plan.n_batches()) {
        throw DimensionMismatchError("check_equivalence: partition and plan disagree on batch count");
    }
    const int p = plan.p();

    // Pooled uncentered moments of the transformed data.
    Matrix uu = Matrix::Zero(p, p);
    Vector uy = Vector::Zero(p);
    // Pooled standardized second moment of the raw data (for the eigen residual).
    Matrix ss = Matrix::Zero(p, p);
    long long total = 0;
    for (int j = 0; j < partition.n_batches(); ++j) {
        const RegressionDataset batch = dataset.rows(partition.block(j));
        const RegressionDataset u = apply_transform(batch, plan, j);
        uu += u.x().transpose() * u.x();
        uy += u.x().transpose() * u.y();
        const Matrix z =
            (batch.x().rowwise() - plan.center.transpose()).array().rowwise() / plan.scale.transpose().array();
        ss += z.transpose() * z;
        total += batch.n();
    }
    uu /= static_cast<double>(total);
    uy /= static_cast<double>(total);
    ss /= static_cast<double>(total);
    uu = (uu + uu.transpose()) / 2.0;
    ss = (ss + ss.transpose()) / 2.0;

    EquivalenceReport report;
    report.eta_hat = solve_sym_checked(uu, uy, "check_equivalence transformed moment matrix");
    report.beta_true = beta_true;
    report.deviation = (report.eta_hat - beta_true).cwiseAbs();

    std::vector<int> nonnull;
    for (int k = 0; k < p; ++k) {
        if (!in_null_set(plan, k)) nonnull.push_back(k);
    }
    const int r = static_cast<int>(nonnull.size());
    if (r > 0) {
        Matrix uu_nn(r, r);
        Vector uy_nn(r), beta_nn(r);
        for (int a = 0; a < r; ++a) {
            uy_nn(a) = uy(nonnull[static_cast<std::size_t>(a)]);
            beta_nn(a) = beta_true(nonnull[static_cast<std::size_t>(a)]);
            for (int b = 0; b < r; ++b)
                uu_nn(a, b) = uu(nonnull[static_cast<std::size_t>(a)], nonnull[static_cast<std::size_t>(b)]);
        }
        report.eta_hat_nonnull = solve_sym_checked(uu_nn, uy_nn, "check_equivalence restricted moment matrix");
        report.deviation_nonnull = (report.eta_hat_nonnull - beta_nn).cwiseAbs();
        report.max_deviation_nonnull = report.deviation_nonnull.maxCoeff();
    }

    const double b_norm2 = plan.b.squaredNorm();
    double residual = 0.0;
    for (int j = 0; j < plan.n_batches(); ++j) {
        const Vector diag = diagonal_for_batch(plan, j);
        const Matrix gap = ss - diag.asDiagonal() * ss * diag.asDiagonal();
        residual = std::max(residual, (gap * plan.b - b_norm2 * plan.b).norm());
    }
    report.eigen_residual = residual;
    return report;
}

}  // namespace gbcdc
