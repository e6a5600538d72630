#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include <cmath>

#include "gbcdc/compose.hpp"
#include "gbcdc/errors.hpp"
#include "gbcdc/estimators.hpp"
#include "gbcdc/zestim.hpp"

using namespace gbcdc;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

std::vector<Observation> scalar_obs(std::initializer_list<double> ys) {
    std::vector<Observation> out;
    for (double y : ys) out.push_back(Vector::Constant(1, y));
    return out;
}

}  // namespace

TEST_CASE("location estimating function finds the sample mean") {
    const auto fn = make_estimating_function("location");
    const auto fit = solve_z_estimator(scalar_obs({1.0, 2.0, 3.0}), fn, Vector::Zero(1));
    CHECK(fit.theta_hat(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.kind == EstimatorKind::mz);
    CHECK(fit.m == 3);
}

TEST_CASE("linear score matches the ols fit") {
    Rng rng(1);
    const int m = 50, p = 2;
    const Matrix x = random_matrix(rng, m, p);
    const Vector y = x * Vector::Constant(p, 1.5) + random_vector(rng, m);
    const auto fn = make_estimating_function("linear-score", p);
    const auto fit = solve_z_estimator(observations_from_dataset(x, y), fn, Vector::Zero(p), 1e-12);
    const auto ols = fit_ols(x, y);
    CHECK(testutil::max_abs_diff(fit.theta_hat, ols.theta_hat) <= 1e-8);
}

TEST_CASE("huber root sits between median and mean; bisection oracle agrees") {
    const auto batch = scalar_obs({0.1, -0.2, 0.3, 0.05, 10.0});
    const double median = 0.1;
    const double mean = 2.05;
    const auto fn = make_estimating_function("huber(1.0)");
    const double tol = 1e-10;
    const auto fit = solve_z_estimator(batch, fn, Vector::Constant(1, 0.0), tol, 200);
    const double root = fit.theta_hat(0);
    CHECK(root >= median);
    CHECK(root <= mean);
    CHECK(std::abs(mean_psi(batch, fn, fit.theta_hat)(0)) <= tol);

    // oracle: the mean clipped residual is monotone in theta, bisect it
    double lo = median - 1.0, hi = mean + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = (lo + hi) / 2.0;
        const double value = mean_psi(batch, fn, Vector::Constant(1, mid))(0);
        if (value > 0.0) lo = mid;
        else hi = mid;
    }
    CHECK(root == doctest::Approx((lo + hi) / 2.0).epsilon(1e-8));
}

TEST_CASE("psi covariate at the batch root is zero") {
    Rng rng(2);
    const auto fn = make_estimating_function("location");
    std::vector<Observation> batch;
    for (int i = 0; i < 30; ++i) batch.push_back(Vector::Constant(1, rng.normal(1.0, 2.0)));
    const double tol = 1e-12;
    const auto fit = solve_z_estimator(batch, fn, Vector::Zero(1), tol);
    const Vector cov = psi_covariate(batch, fn, fit.theta_hat);
    CHECK(std::abs(cov(0)) <= tol * std::sqrt(30.0));
}

TEST_CASE("psi covariate hand value") {
    const auto fn = make_estimating_function("location");
    const Vector cov = psi_covariate(scalar_obs({1.0, 2.0, 3.0}), fn, Vector::Constant(1, 1.0));
    CHECK(cov(0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("identically zero estimating function gives a zero covariate") {
    EstimatingFunction zero;
    zero.dim = 2;
    zero.psi = [](const Vector&, const Observation&) { return Vector::Zero(2); };
    const Vector cov = psi_covariate(scalar_obs({1.0, 2.0}), zero, Vector::Zero(2));
    CHECK(cov.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic jacobians match finite differences on probe points") {
    Rng rng(3);
    std::vector<Vector> theta_probes;
    std::vector<Observation> obs_probes;
    for (int t = 0; t < 10; ++t) {
        theta_probes.push_back(Vector::Constant(1, rng.normal(0.5, 0.4)));
        Observation z(2);
        z << rng.uniform(0.1, 1.2), rng.normal(1.0, 0.5);
        obs_probes.push_back(z);
    }
    CHECK(jacobian_gap(make_estimating_function("location"), theta_probes, obs_probes) <= 1e-4);
    CHECK(jacobian_gap(make_estimating_function("huber(1.345)"), theta_probes, obs_probes) <= 1e-4);
    CHECK(jacobian_gap(make_estimating_function("exp-regression"), theta_probes, obs_probes) <= 1e-4);

    std::vector<Vector> theta2;
    std::vector<Observation> obs2;
    for (int t = 0; t < 10; ++t) {
        theta2.push_back(random_vector(rng, 2));
        Observation z(3);
        z << rng.normal(), rng.normal(), rng.normal();
        obs2.push_back(z);
    }
    CHECK(jacobian_gap(make_estimating_function("linear-score", 2), theta2, obs2) <= 1e-4);
}

TEST_CASE("solver error paths") {
    const auto fn = make_estimating_function("location");
    CHECK_THROWS_AS(solve_z_estimator({}, fn, Vector::Zero(1)), DomainError);
    CHECK_THROWS_AS(solve_z_estimator(scalar_obs({1.0}), fn, Vector::Zero(2)), DimensionMismatchError);

    // flat estimating function: Newton cannot move
    EstimatingFunction flat;
    flat.dim = 1;
    flat.psi = [](const Vector&, const Observation&) { return Vector::Constant(1, 1.0); };
    CHECK_THROWS_AS(solve_z_estimator(scalar_obs({1.0, 2.0}), flat, Vector::Zero(1)), SingularJacobianError);
    CHECK(make_estimating_function("location").dim == 1);
    CHECK_THROWS_AS(make_estimating_function("nope"), DomainError);
    CHECK_THROWS_AS(make_estimating_function("huber(-1)"), DomainError);
}

TEST_CASE("bc_ge_mz: constant covariates are rank deficient, noise-free is exact") {
    std::vector<LocalFit> fits;
    std::vector<Vector> constant_cov;
    Rng rng(4);
    const double theta = 0.8;
    const Vector xi = Vector::Constant(1, 2.0);
    std::vector<Vector> varying_cov;
    for (int j = 0; j < 10; ++j) {
        const double c = rng.normal();
        LocalFit f;
        f.theta_hat = Vector::Constant(1, theta + xi(0) * c);
        f.gram = Matrix::Zero(1, 1);
        f.v_matrix = Matrix::Zero(1, 1);
        f.support = {0};
        f.m = 5;
        f.kind = EstimatorKind::mz;
        fits.push_back(f);
        varying_cov.push_back(Vector::Constant(1, c));
        constant_cov.push_back(Vector::Constant(1, 0.7));
    }
    CHECK_THROWS_AS(bc_ge_mz(fits, constant_cov, 0), RankDeficientError);
    const auto est = bc_ge_mz(fits, varying_cov, 0);
    CHECK(std::abs(est.theta - theta) <= 1e-10);
    CHECK(std::abs(est.xi(0) - xi(0)) <= 1e-10);
}

TEST_CASE("bc_ge_mz delegates to the shared component solver byte for byte") {
    Rng rng(5);
    const int n = 12;
    std::vector<LocalFit> fits;
    std::vector<Vector> covs;
    ComponentRegression reg;
    reg.responses.resize(n);
    reg.covariates.resize(n, 2);
    for (int j = 0; j < n; ++j) {
        LocalFit f;
        f.theta_hat = Vector::Constant(1, rng.normal());
        f.gram = Matrix::Zero(1, 1);
        f.v_matrix = Matrix::Zero(1, 1);
        f.support = {0};
        f.m = 5;
        f.kind = EstimatorKind::mz;
        fits.push_back(f);
        covs.push_back(random_vector(rng, 2));
        reg.responses(j) = f.theta_hat(0);
        reg.covariates.row(j) = covs.back();
    }
    const auto via_mz = bc_ge_mz(fits, covs, 0);
    const auto direct = bc_ge_component(reg);
    CHECK(via_mz.theta == direct.theta);
    CHECK(via_mz.var_hat == direct.var_hat);
    CHECK((via_mz.xi - direct.xi).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nonlinear regression: composite corrects more bias than the naive average") {
    // q(theta, x) = exp(theta x) with heterogeneous batch designs; the
    // composite intercept removes most of the finite-batch estimation bias.
    const double theta_true = 1.0;
    const int n_batches = 20, m = 12, runs = 400;
    const auto fn = make_estimating_function("exp-regression");
    double sum_naive = 0.0, sum_bcge = 0.0;
    int used = 0;
    for (int r = 0; r < runs; ++r) {
        Rng rng(derive_seed(900, {static_cast<std::uint64_t>(r)}));
        std::vector<LocalFit> fits;
        std::vector<std::vector<Observation>> batches;
        bool failed = false;
        for (int j = 0; j < n_batches && !failed; ++j) {
            const double lo = 0.1 + 1.2 * j / n_batches;  // laddered design windows
            std::vector<Observation> batch;
            for (int i = 0; i < m; ++i) {
                Observation z(2);
                const double x = rng.uniform(lo, lo + 0.6);
                z << x, std::exp(theta_true * x) + rng.normal(0.0, 1.5);
                batch.push_back(z);
            }
            try {
                fits.push_back(solve_z_estimator(batch, fn, Vector::Constant(1, 0.9), 1e-10, 300));
                batches.push_back(std::move(batch));
            } catch (const Error&) {
                failed = true;
            }
        }
        if (failed) continue;
        Vector pilot = Vector::Zero(1);
        for (const auto& f : fits) pilot += f.theta_hat;
        pilot /= n_batches;
        std::vector<Vector> covs;
        for (const auto& b : batches) covs.push_back(psi_covariate(b, fn, pilot));
        try {
            const auto est = bc_ge_mz(fits, covs, 0);
            sum_naive += pilot(0) - theta_true;
            sum_bcge += est.theta - theta_true;
            ++used;
        } catch (const Error&) {
        }
    }
    REQUIRE(used >= 300);
    CHECK(std::abs(sum_bcge / used) <= std::abs(sum_naive / used));
}
