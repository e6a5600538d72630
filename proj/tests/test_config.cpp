#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include <string>

#include "gbcdc/config.hpp"
#include "gbcdc/errors.hpp"

using namespace gbcdc;

namespace {

const char* kToml = R"(# experiment preset
schema_version = 1
experiment = "exp2_ridge"
n = 400                      # total rows
N_grid = [10, 20]
replicates = 3
seed = 9
partition = "shuffled"
lambda_mode = "fixed"
lambda = 0.25
shared_design = false
)";

}  // namespace

TEST_CASE("toml parsing covers scalars, arrays, comments") {
    const auto map = parse_toml(kToml, "preset");
    const auto cfg = experiment_config_from_map(map);
    CHECK(cfg.experiment == "exp2_ridge");
    CHECK(cfg.n == 400);
    CHECK(cfg.N_grid == std::vector<int>{10, 20});
    CHECK(cfg.replicates == 3);
    CHECK(cfg.seed == 9);
    CHECK(cfg.partition == "shuffled");
    CHECK(cfg.lambda_mode == LambdaMode::fixed);
    CHECK(cfg.lambda_fixed == 0.25);
    CHECK(cfg.estimator == "ridge");  // defaulted from the experiment
}

TEST_CASE("json config is accepted") {
    const std::string json = R"({"experiment": "exp1_lasso", "n": 200, "N_grid": [10], "replicates": 2,
                               "seed": 4, "vote_threshold": 0.6})";
    const auto cfg = experiment_config_from_map(parse_json_config(json, "inline"));
    CHECK(cfg.experiment == "exp1_lasso");
    CHECK(cfg.vote_threshold == 0.6);
    CHECK(cfg.estimator == "lasso");
}

TEST_CASE("unknown keys are rejected by name") {
    try {
        experiment_config_from_map(parse_toml("experiment = \"exp1_lasso\"\nreplicats = 5\n", "x"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("replicats") != std::string::npos);
    }
}

TEST_CASE("schema version gate") {
    CHECK_THROWS_AS(experiment_config_from_map(parse_toml("schema_version = 2\n", "x")), ConfigError);
}

TEST_CASE("table headers are rejected") {
    CHECK_THROWS_AS(parse_toml("[section]\nkey = 1\n", "x"), ConfigError);
}

TEST_CASE("value grammar errors carry location") {
    try {
        parse_toml("n = \n", "cfg.toml");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cfg.toml:1") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_toml("n == 3\n", "x"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = [1, \"two\"]\n", "x"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n", "x"), ConfigError);
}

TEST_CASE("overrides use the same grammar and replace values") {
    auto map = parse_toml(kToml, "preset");
    apply_overrides(map, {"replicates=7", "N_grid=[4]", "n=80", "partition=\"contiguous\""});
    const auto cfg = experiment_config_from_map(map);
    CHECK(cfg.replicates == 7);
    CHECK(cfg.N_grid == std::vector<int>{4});
    CHECK(cfg.partition == "contiguous");
    CHECK_THROWS_AS(apply_overrides(map, {"oops"}), ConfigError);
}

TEST_CASE("validation failures surface as config errors") {
    auto map = parse_toml(kToml, "preset");
    apply_overrides(map, {"N_grid=[7]"});  // 7 does not divide 400
    CHECK_THROWS_AS(experiment_config_from_map(map), ConfigError);

    auto map2 = parse_toml("experiment = \"exp1_lasso\"\nlambda_mode = \"sometimes\"\n", "x");
    CHECK_THROWS_AS(experiment_config_from_map(map2), ConfigError);
}
