#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include <json.hpp>

#include "gbcdc/compose.hpp"
#include "gbcdc/errors.hpp"
#include "gbcdc/estimators.hpp"
#include "gbcdc/stream.hpp"

using namespace gbcdc;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

LocalFit scalar_fit(double theta, double v) {
    LocalFit fit;
    fit.theta_hat = Vector::Constant(1, theta);
    fit.gram = Matrix::Identity(1, 1);
    fit.v_matrix = Matrix::Constant(1, 1, v);
    fit.support = {0};
    fit.m = 5;
    fit.kind = EstimatorKind::ridge;
    return fit;
}

std::vector<LocalFit> heterogeneous_ridge_fits(int count, int p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LocalFit> fits;
    for (int j = 0; j < count; ++j) {
        const int m = 30;
        Matrix x(m, p);
        Vector y(m);
        for (int i = 0; i < m; ++i) {
            for (int k = 0; k < p; ++k) x(i, k) = rng.normal(0.0, 1.0 + 0.25 * j);
            y(i) = x.row(i).sum() * 0.8 + rng.normal();
        }
        fits.push_back(fit_ridge(x, y, 0.4));
    }
    return fits;
}

}  // namespace

TEST_CASE("fresh state is empty and cannot finalize") {
    StreamState state(1, 1);
    CHECK(state.n_batches() == 0);
    CHECK_THROWS_AS(state.finalize(), InsufficientBatchesError);

    StreamState wide(4, 4);
    CHECK(wide.p() == 4);
    CHECK(wide.q() == 4);
    CHECK_THROWS_AS(StreamState(0, 1), DomainError);
}

TEST_CASE("hand accumulation of one update") {
    StreamState state(1, 1);
    state.update(scalar_fit(3.0, 2.0));
    CHECK(state.n_batches() == 1);
    const auto j = nlohmann::json::parse(state.to_json());
    CHECK(j["components"][0]["sum_v"]["value"][0].get<double>() == 2.0);
    CHECK(j["components"][0]["sum_vv"]["value"][0].get<double>() == 4.0);
    CHECK(j["components"][0]["sum_vtheta"]["value"][0].get<double>() == 6.0);
    CHECK(j["components"][0]["sum_theta"].get<double>() == 3.0);
    CHECK(j["components"][0]["sum_theta2"].get<double>() == 9.0);
}

TEST_CASE("zero fit changes only the batch count") {
    StreamState state(1, 1);
    state.update(scalar_fit(0.0, 0.0));
    const auto j = nlohmann::json::parse(state.to_json());
    CHECK(j["n_batches"].get<int>() == 1);
    CHECK(j["components"][0]["sum_v"]["value"][0].get<double>() == 0.0);
    CHECK(j["components"][0]["sum_theta"].get<double>() == 0.0);
}

TEST_CASE("updates commute") {
    const auto fits = heterogeneous_ridge_fits(12, 2, 5);
    StreamState forward(2, 2), backward(2, 2);
    for (const auto& f : fits) forward.update(f);
    for (auto it = fits.rbegin(); it != fits.rend(); ++it) backward.update(*it);
    const auto a = forward.finalize();
    const auto b = backward.finalize();
    CHECK(testutil::max_abs_diff(a.theta_tilde, b.theta_tilde) <= 1e-12);
}

TEST_CASE("dimension mismatch is rejected") {
    StreamState state(2, 2);
    CHECK_THROWS_AS(state.update(scalar_fit(1.0, 1.0)), DimensionMismatchError);
}

TEST_CASE("streaming equals the batch composite estimate") {
    const auto fits = heterogeneous_ridge_fits(25, 3, 7);
    StreamState state(3, 3);
    for (const auto& f : fits) state.update(f);
    const auto streamed = state.finalize();
    const auto batch = bc_ge(fits);
    CHECK(testutil::max_abs_diff(streamed.theta_tilde, batch.theta_tilde) <= 1e-10);
    CHECK(testutil::max_abs_diff(streamed.var_hat, batch.var_hat) <= 1e-10);
    CHECK(streamed.sigma2_hat == doctest::Approx(batch.sigma2_hat).epsilon(1e-10));
}

TEST_CASE("boundary: N = q + 1 is insufficient") {
    StreamState state(1, 1);
    Rng rng(9);
    state.update(scalar_fit(1.0, rng.normal()));
    state.update(scalar_fit(2.0, rng.normal()));
    CHECK_THROWS_AS(state.finalize(), InsufficientBatchesError);  // N = 2 = q + 1
    state.update(scalar_fit(3.0, rng.normal()));
    CHECK_NOTHROW(state.finalize());
}

TEST_CASE("interleaved finalize reflects exactly the batches seen so far") {
    const auto fits = heterogeneous_ridge_fits(10, 1, 11);
    StreamState state(1, 1);
    for (int j = 0; j < 5; ++j) state.update(fits[static_cast<std::size_t>(j)]);
    const auto mid = state.finalize();
    const auto mid_batch = bc_ge(std::vector<LocalFit>(fits.begin(), fits.begin() + 5));
    CHECK(testutil::max_abs_diff(mid.theta_tilde, mid_batch.theta_tilde) <= 1e-10);
    for (int j = 5; j < 10; ++j) state.update(fits[static_cast<std::size_t>(j)]);
    const auto full = state.finalize();
    const auto full_batch = bc_ge(fits);
    CHECK(testutil::max_abs_diff(full.theta_tilde, full_batch.theta_tilde) <= 1e-10);
}

TEST_CASE("snapshot round trip is exact and resumable") {
    const auto fits = heterogeneous_ridge_fits(14, 2, 13);
    StreamState state(2, 2);
    for (int j = 0; j < 7; ++j) state.update(fits[static_cast<std::size_t>(j)]);
    const std::string snapshot = state.to_json();
    StreamState restored = StreamState::from_json(snapshot);
    CHECK(restored.to_json() == snapshot);

    for (int j = 7; j < 14; ++j) {
        state.update(fits[static_cast<std::size_t>(j)]);
        restored.update(fits[static_cast<std::size_t>(j)]);
    }
    const auto a = state.finalize();
    const auto b = restored.finalize();
    CHECK((a.theta_tilde - b.theta_tilde).cwiseAbs().maxCoeff() == 0.0);  // identical bytes in, identical out

    CHECK_THROWS_AS(StreamState::from_json("{"), ParseError);
    CHECK_THROWS_AS(StreamState::from_json("{\"schema_version\":2}"), ParseError);
}

TEST_CASE("merge is commutative and matches sequential feeding") {
    const auto fits = heterogeneous_ridge_fits(16, 2, 17);
    StreamState left(2, 2), right(2, 2), sequential(2, 2);
    for (int j = 0; j < 8; ++j) left.update(fits[static_cast<std::size_t>(j)]);
    for (int j = 8; j < 16; ++j) right.update(fits[static_cast<std::size_t>(j)]);
    for (const auto& f : fits) sequential.update(f);

    StreamState lr = left;
    lr.merge(right);
    StreamState rl = right;
    rl.merge(left);
    CHECK(lr.n_batches() == 16);
    const auto a = lr.finalize();
    const auto b = rl.finalize();
    const auto c = sequential.finalize();
    CHECK(testutil::max_abs_diff(a.theta_tilde, b.theta_tilde) <= 1e-12);
    CHECK(testutil::max_abs_diff(a.theta_tilde, c.theta_tilde) <= 1e-12);

    StreamState wrong(3, 3);
    CHECK_THROWS_AS(wrong.merge(left), DimensionMismatchError);
}

TEST_CASE("state size depends only on the dimensions, never on the stream length") {
    StreamState short_state(2, 2), long_state(2, 2);
    const auto fits = heterogeneous_ridge_fits(40, 2, 19);
    short_state.update(fits[0]);
    for (const auto& f : fits) long_state.update(f);
    const auto js = nlohmann::json::parse(short_state.to_json());
    const auto jl = nlohmann::json::parse(long_state.to_json());
    REQUIRE(js["components"].size() == jl["components"].size());
    for (std::size_t k = 0; k < js["components"].size(); ++k) {
        CHECK(js["components"][k]["sum_v"]["value"].size() == jl["components"][k]["sum_v"]["value"].size());
        CHECK(js["components"][k]["sum_vv"]["value"].size() == jl["components"][k]["sum_vv"]["value"].size());
    }
}
