#pragma once

#include <cstdint>
#include <vector>

#include "gbcdc/dataset.hpp"

namespace gbcdc {

/// Per-batch law of the diagonal scaling values: uniform on
/// [low, gap_low] U [gap_high, high]. The default keeps the draws away
/// from 1 so batches actually differ; a degenerate law (low == high) is
/// allowed and yields the identity scaling. The support must not touch 0.
struct ALawSpec {
    double low = 0.5;
    double high = 1.5;
    double gap_low = 0.9;
    double gap_high = 1.1;
};

/// The batch-heterogenizing reparametrization u = A_j x + b: A_j scales the
/// null coordinates (those uncorrelated with the response) by per-batch
/// values a_j, and b optionally shifts the remaining coordinates by a unit
/// vector. Optional standardization moments (learned from the first batch)
/// are applied before the map.
struct HomogenizationPlan {
    std::vector<int> null_set;       ///< ascending 0-based coordinates with E[x_k y] = 0
    std::vector<Vector> a_values;    ///< one vector of length |null_set| per batch, all entries nonzero
    Vector b;                        ///< length p; zero on null coordinates; unit norm or zero
    Vector center;                   ///< standardization shift (zeros = none)
    Vector scale;                    ///< standardization scale (ones = none)
    std::uint64_t seed = 0;
    ALawSpec a_law;

    int p() const { return static_cast<int>(b.size()); }
    int n_batches() const { return static_cast<int>(a_values.size()); }
    bool is_identity() const;
};

void validate(const HomogenizationPlan& plan);

/// Coordinates whose |empirical correlation with y| falls below `threshold`
/// (columns and response standardized internally). DomainError when the
/// threshold is not positive.
std::vector<int> estimate_null_set(const RegressionDataset& batch, double threshold);

/// Builds a plan with seeded per-batch scaling vectors drawn from `a_law`
/// (redrawn until distinct when the law is non-degenerate). With
/// `with_shift`, b is the unit vector on the first non-null coordinate;
/// DomainError if a shift is requested but every coordinate is null.
HomogenizationPlan build_plan(const std::vector<int>& null_set, int p, int n_batches, const ALawSpec& a_law,
                              std::uint64_t seed, bool with_shift = true);

/// Records column means/sds of `first_batch` in the plan so transforms
/// standardize before scaling.
void learn_standardization(HomogenizationPlan& plan, const RegressionDataset& first_batch);

/// Applies u_i = A_j x_i + b to every row of the batch; y is unchanged.
RegressionDataset apply_transform(const RegressionDataset& batch, const HomogenizationPlan& plan, int batch_index);

/// Inverse of apply_transform (all scaling values are nonzero).
RegressionDataset invert_transform(const RegressionDataset& transformed, const HomogenizationPlan& plan,
                                   int batch_index);

/// Diagnostics for the coefficient-preservation identity: eta_hat is the
/// uncentered-moment regression coefficient of y on the transformed
/// covariates pooled over all batches, compared elementwise against the
/// known beta; a restricted fit over the non-null coordinates is reported
/// alongside, plus the empirical eigen-residual
/// ||(S - A S A) b - ||b||^2 b|| of the shift construction (max over
/// batches, S the standardized pooled second moment).
struct EquivalenceReport {
    Vector eta_hat;
    Vector beta_true;
    Vector deviation;               ///< |eta_hat - beta_true|
    Vector eta_hat_nonnull;         ///< restricted regression, non-null coordinates only
    Vector deviation_nonnull;
    double max_deviation_nonnull = 0.0;
    double eigen_residual = 0.0;
};

EquivalenceReport check_equivalence(const RegressionDataset& dataset, const BatchPartition& partition,
                                    const HomogenizationPlan& plan, const Vector& beta_true);

}  // namespace gbcdc
