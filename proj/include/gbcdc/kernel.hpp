#pragma once

#include <string>
#include <vector>

#include "gbcdc/dataset.hpp"

namespace gbcdc {

enum class KernelType { gaussian, epanechnikov };

KernelType kernel_type_from_string(const std::string& s);

/// Kernel choice, bandwidth rule h = c * m^(-varsigma), and the evaluation
/// grid (sorted, inside [0, 1]).
struct KernelSpec {
    KernelType kernel = KernelType::gaussian;
    double c = 1.0;
    double varsigma = 1.0 / 3.0;
    Vector grid;

    double bandwidth(int m) const;
};

void validate(const KernelSpec& spec);

/// Equispaced grid of `points` values on [0, 1].
Vector default_grid(int points = 101);

/// Nadaraya-Watson estimate sum K_h(X_i - x) Y_i / sum K_h(X_i - x) on a
/// batch with a single covariate column. EmptyWindowError when every weight
/// vanishes (compact-support kernel with no observation in range).
double nw_estimate(const RegressionDataset& batch, double x, const KernelSpec& spec);

/// The scaled residual statistic sqrt(h/m) * sum K_h(X_i - x)(Y_i - center)
/// used as the per-batch covariate of the composite curve regression.
/// Centering at the batch's own estimate gives exactly zero; center at a
/// pilot instead. Because the weighted residual sum factorizes as
/// (kernel mass) * (own estimate - center), a pilot built from the batch
/// curves themselves (e.g. their mean) makes the covariate self-referential
/// and the composite collapses to the naive average; use a pilot with its
/// own information, such as pilot_curve below.
double phi_covariate(const RegressionDataset& batch, double x, const KernelSpec& spec, double center);

/// Kernel numerator/denominator sums at an explicit bandwidth, the
/// shippable batch summary behind pooled estimates.
struct KernelSums {
    double weighted_y = 0.0;  ///< sum K_h(X_i - x) Y_i
    double weight = 0.0;      ///< sum K_h(X_i - x)
};
KernelSums kernel_sums(const RegressionDataset& batch, double x, KernelType kernel, double bandwidth);

/// Pooled finer-bandwidth pilot on the grid: per-batch kernel sums at the
/// full-sample bandwidth h = c * n^(-varsigma) are aggregated across
/// batches (summaries only, no raw-data pooling). Its smoothing bias is an
/// order smaller than the batch curves', which keeps the composite
/// regression's covariate anchored near the truth.
Vector pilot_curve(const std::vector<RegressionDataset>& batches, const KernelSpec& spec);

struct CurvePoint {
    double x = 0.0;
    double r_tilde = 0.0;      ///< composite estimate (regression intercept)
    double alpha_tilde = 0.0;  ///< fitted slope
    double naive = 0.0;        ///< plain across-batch mean
    bool ok = false;           ///< false when this grid point was rank deficient
    int n_batches = 0;
};

/// Per-grid-point simple regression of the batch curve values on the phi
/// covariates, via the shared intercept least squares. Rank-deficient grid
/// points are flagged individually; the remaining points are still
/// computed.
std::vector<CurvePoint> bc_ge_curve(const Matrix& curve_values, const Matrix& covariates, const Vector& grid);

/// Writes the curve table as CSV: x, r_tilde, alpha_tilde, naive_avg,
/// n_batches_used (rank-deficient points carry empty estimate fields).
void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);

}  // namespace gbcdc
