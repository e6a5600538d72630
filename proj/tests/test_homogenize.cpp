#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include <cmath>

#include "gbcdc/compose.hpp"
#include "gbcdc/errors.hpp"
#include "gbcdc/estimators.hpp"
#include "gbcdc/homogenize.hpp"
#include "gbcdc/serialize.hpp"
#include "gbcdc/simulate.hpp"

using namespace gbcdc;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

ALawSpec degenerate_law(double value) {
    ALawSpec law;
    law.low = law.high = value;
    law.gap_low = law.gap_high = value;
    return law;
}

}  // namespace

TEST_CASE("null set estimation: exact signal is excluded, huge threshold includes all") {
    Rng rng(1);
    const int m = 400, p = 3;
    Matrix x = random_matrix(rng, m, p);
    const Vector y = x.col(0);  // noise-free signal on coordinate 1
    const RegressionDataset batch(x, y);
    const auto null_set = estimate_null_set(batch, 0.5);
    CHECK(std::find(null_set.begin(), null_set.end(), 0) == null_set.end());

    const auto all = estimate_null_set(batch, 1e9);
    CHECK(all.size() == 3);

    CHECK_THROWS_AS(estimate_null_set(batch, 0.0), DomainError);
}

TEST_CASE("null set estimation: independent coordinates are detected at 3/sqrt(m)") {
    const int m = 5000;
    int included = 0;
    const int runs = 50;
    for (int r = 0; r < runs; ++r) {
        Rng rng(1000 + static_cast<std::uint64_t>(r));
        Matrix x = random_matrix(rng, m, 2);
        Vector y(m);
        for (int i = 0; i < m; ++i) y(i) = 2.0 * x(i, 0) + rng.normal();  // y independent of column 2
        const auto null_set = estimate_null_set(RegressionDataset(x, y), 3.0 / std::sqrt(static_cast<double>(m)));
        if (std::find(null_set.begin(), null_set.end(), 1) != null_set.end()) ++included;
    }
    CHECK(included >= 48);  // calibrated: |corr| < 3/sqrt(m) holds with probability about 0.997
}

TEST_CASE("degenerate scaling law with no shift is the identity transform") {
    const auto plan = build_plan({1, 2}, 3, 4, degenerate_law(1.0), 7, /*with_shift=*/false);
    CHECK(plan.is_identity());
    Rng rng(2);
    const Matrix x = random_matrix(rng, 10, 3);
    const Vector y = random_vector(rng, 10);
    const RegressionDataset batch(x, y);
    const RegressionDataset out = apply_transform(batch, plan, 2);
    CHECK((out.x() - x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((out.y() - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("plan construction: deterministic, distinct scaling vectors") {
    const auto a = build_plan({0, 1}, 2, 3, ALawSpec{}, 42, false);
    const auto b = build_plan({0, 1}, 2, 3, ALawSpec{}, 42, false);
    REQUIRE(a.a_values.size() == 3);
    for (int j = 0; j < 3; ++j) {
        CHECK((a.a_values[j] - b.a_values[j]).cwiseAbs().maxCoeff() == 0.0);
        for (int i = 0; i < 2; ++i) {
            const double v = a.a_values[j](i);
            CHECK(((v >= 0.5 && v <= 0.9) || (v >= 1.1 && v <= 1.5)));
        }
    }
    CHECK((a.a_values[0] - a.a_values[1]).cwiseAbs().maxCoeff() > 0.0);
    CHECK((a.a_values[1] - a.a_values[2]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("plan shift: unit vector on the first free coordinate") {
    // null coordinates 3..4 of p = 4 (0-based {2, 3}): the shift lives on the
    // first two coordinates and has unit norm.
    const auto plan = build_plan({2, 3}, 4, 2, ALawSpec{}, 5, /*with_shift=*/true);
    CHECK(plan.b(2) == 0.0);
    CHECK(plan.b(3) == 0.0);
    CHECK(plan.b.norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(plan.b(0) == 1.0);

    CHECK_THROWS_AS(build_plan({0, 1}, 2, 2, ALawSpec{}, 5, true), DomainError);  // every coordinate null
}

TEST_CASE("scaling law touching zero is rejected") {
    ALawSpec law;
    law.low = 0.0;
    CHECK_THROWS_AS(build_plan({0}, 2, 2, law, 1, false), DomainError);
    ALawSpec negative;
    negative.low = -0.5;
    CHECK_THROWS_AS(build_plan({0}, 2, 2, negative, 1, false), DomainError);
}

TEST_CASE("apply_transform: hand example on one null coordinate") {
    auto plan = build_plan({1}, 2, 1, degenerate_law(2.0), 0, false);
    Matrix x(1, 2);
    x << 3, 5;
    Vector y(1);
    y << 1;
    const auto out = apply_transform(RegressionDataset(x, y), plan, 0);
    CHECK(out.x()(0, 0) == 3.0);
    CHECK(out.x()(0, 1) == 10.0);
    CHECK(out.y()(0) == 1.0);

    Matrix wrong(1, 3);
    wrong << 1, 2, 3;
    CHECK_THROWS_AS(apply_transform(RegressionDataset(wrong, y), plan, 0), DimensionMismatchError);
}

TEST_CASE("transform round trip is exact to 1e-12") {
    Rng rng(3);
    const auto plan = build_plan({1, 3}, 4, 5, ALawSpec{}, 11, true);
    const Matrix x = random_matrix(rng, 20, 4);
    const Vector y = random_vector(rng, 20);
    const RegressionDataset batch(x, y);
    for (int j = 0; j < 5; ++j) {
        const auto back = invert_transform(apply_transform(batch, plan, j), plan, j);
        CHECK((back.x() - x).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("scaling preserves the population moment vector on exact null coordinates") {
    // population E[xy] = beta for independent standardized coordinates; the
    // diagonal map leaves it untouched exactly when beta vanishes on the
    // null set.
    Vector beta(4);
    beta << 1.5, -0.5, 0.0, 0.0;
    const auto plan = build_plan({2, 3}, 4, 6, ALawSpec{}, 13, false);
    for (int j = 0; j < 6; ++j) {
        Vector diag = Vector::Ones(4);
        diag(2) = plan.a_values[j](0);
        diag(3) = plan.a_values[j](1);
        CHECK(testutil::max_abs_diff(diag.asDiagonal() * beta, beta) <= 1e-12);
    }
}

TEST_CASE("check_equivalence with the identity plan reproduces the raw moment fit") {
    Rng rng(4);
    const int n = 600, p = 3;
    const Matrix x = random_matrix(rng, n, p);
    Vector beta(p);
    beta << 1.0, 0.0, 0.0;
    const Vector y = x * beta + random_vector(rng, n);
    const RegressionDataset data(x, y);
    const auto partition = partition_contiguous(n, 3);
    const auto plan = build_plan({1, 2}, p, 3, degenerate_law(1.0), 0, false);
    const auto report = check_equivalence(data, partition, plan, beta);

    const Matrix uu = x.transpose() * x / static_cast<double>(n);
    const Vector uy = x.transpose() * y / static_cast<double>(n);
    const Vector raw = uu.ldlt().solve(uy);
    CHECK(testutil::max_abs_diff(report.eta_hat, raw) <= 1e-12);
    CHECK(report.eigen_residual == 0.0);  // b = 0
}

TEST_CASE("check_equivalence: one perturbed null coordinate, shiftless plan") {
    Rng rng(5);
    const int m = 100000, n_batches = 3, p = 4;
    Vector beta(p);
    beta << 1.0, 0.5, 0.0, 0.0;
    const auto [data, beta_out] = gen_homogeneous(m * n_batches, p, beta, 21);
    const auto partition = partition_contiguous(m * n_batches, n_batches);
    const auto plan = build_plan({2}, p, n_batches, degenerate_law(1.3), 0, false);
    const auto report = check_equivalence(data, partition, plan, beta);
    CHECK(report.eta_hat.allFinite());
    CHECK(report.deviation.allFinite());
    CHECK(report.max_deviation_nonnull < 0.02);
}

TEST_CASE("eigen residual measures the shift construction gap") {
    Rng rng(6);
    const int m = 20000, n_batches = 2, p = 3;
    Vector beta(p);
    beta << 1.0, 0.0, 0.0;
    const auto [data, beta_out] = gen_homogeneous(m * n_batches, p, beta, 31);
    const auto partition = partition_contiguous(m * n_batches, n_batches);
    const auto plan = build_plan({1, 2}, p, n_batches, ALawSpec{}, 3, /*with_shift=*/true);
    const auto report = check_equivalence(data, partition, plan, beta);
    // standardized second moment is ~identity, so (S - A S A) b ~ 0 and the
    // residual sits near ||b||^2 * ||b|| = 1
    CHECK(report.eigen_residual > 0.8);
    CHECK(report.eigen_residual < 1.2);
}

TEST_CASE("standardization moments are learned from the first batch and applied") {
    Rng rng(7);
    const int m = 500, p = 2;
    Matrix x = random_matrix(rng, m, p);
    x.col(0) = (x.col(0).array() * 3.0 + 5.0).matrix();  // non-trivial center/scale
    const Vector y = random_vector(rng, m);
    const RegressionDataset batch(x, y);

    auto plan = build_plan({1}, p, 2, degenerate_law(1.0), 0, false);
    learn_standardization(plan, batch);
    CHECK(plan.center(0) == doctest::Approx(x.col(0).mean()).epsilon(1e-12));
    CHECK(plan.scale(0) > 2.5);

    const auto u = apply_transform(batch, plan, 0);
    CHECK(std::abs(u.x().col(0).mean()) <= 1e-10);
    CHECK(std::abs(u.x().col(0).squaredNorm() / m - 1.0) <= 1e-10);
    const auto back = invert_transform(u, plan, 0);
    CHECK((back.x() - x).cwiseAbs().maxCoeff() <= 1e-10);

    Matrix constant = x;
    constant.col(1).setConstant(2.0);
    CHECK_THROWS_AS(learn_standardization(plan, RegressionDataset(constant, y)), DomainError);
}

TEST_CASE("plan json round trip") {
    auto plan = build_plan({1, 2}, 4, 3, ALawSpec{}, 17, true);
    const auto text = to_json(plan);
    const auto back = plan_from_json(text);
    CHECK(back.null_set == plan.null_set);
    CHECK(testutil::max_abs_diff(back.b, plan.b) == 0.0);
    for (int j = 0; j < 3; ++j) CHECK((back.a_values[j] - plan.a_values[j]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(to_json(back) == text);
}

TEST_CASE("homogenization restores composite rank for replicated-design ridge batches") {
    // Identically distributed batches in the strongest sense: one fixed
    // design replicated across batches. Without the transform the composite
    // covariates are exactly equal and the solve reports rank deficiency;
    // with per-batch scaling it becomes well posed.
    const int p = 20, n_batches = 24, m = 400;
    Vector beta = Vector::Zero(p);
    beta(0) = 3.0;
    beta(1) = 1.0;
    beta(2) = -1.0;
    beta(3) = -2.0;
    const auto [data, beta_out] = gen_homogeneous_shared_design(m, n_batches, beta, 0.5, 97);
    const auto partition = partition_contiguous(data.n(), n_batches);

    std::vector<LocalFit> fits;
    for (int j = 0; j < n_batches; ++j) {
        const auto batch = data.rows(partition.block(j));
        fits.push_back(fit_ridge(batch.x(), batch.y(), 0.5));
    }
    CHECK_THROWS_AS(bc_ge(fits), RankDeficientError);

    std::vector<int> null_set;
    for (int k = 4; k < p; ++k) null_set.push_back(k);
    const auto plan = build_plan(null_set, p, n_batches, ALawSpec{}, 23, false);
    std::vector<LocalFit> homogenized;
    for (int j = 0; j < n_batches; ++j) {
        const auto batch = apply_transform(data.rows(partition.block(j)), plan, j);
        homogenized.push_back(fit_ridge(batch.x(), batch.y(), 0.5));
    }
    const auto result = bc_ge(homogenized);
    CHECK(result.theta_tilde.allFinite());
    CHECK(result.theta_tilde.size() == p);
}
