#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include <chrono>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gbcdc/compose.hpp"
#include "gbcdc/dataset.hpp"
#include "gbcdc/estimators.hpp"

using namespace gbcdc;
namespace fs = std::filesystem;

namespace {

const std::string kCli = GBCDC_CLI_PATH;
const std::string kTinyCsv = std::string(GBCDC_TEST_DATA_DIR) + "/tiny_n40_p2.csv";
const std::string kCurveCsv = std::string(GBCDC_TEST_DATA_DIR) + "/tiny_curve_n400.csv";

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
    const fs::path out_file = dir / "stdout.txt";
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd =
        env + kCli + " " + args + " > " + out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("cli_runs") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        rows.push_back(std::move(fields));
    }
    return rows;
}

Vector result_csv_thetas(const fs::path& path) {
    const auto rows = read_csv(path);
    REQUIRE(rows.size() >= 2);
    Vector theta(static_cast<Eigen::Index>(rows.size() - 1));
    for (std::size_t i = 1; i < rows.size(); ++i) theta(static_cast<Eigen::Index>(i - 1)) = std::stod(rows[i][1]);
    return theta;
}

}  // namespace

TEST_CASE("estimate bc_ge matches an independent least-squares golden value") {
    const auto dir = fresh_dir("estimate_bcge");
    const auto run = run_cli("estimate " + kTinyCsv + " --N 8 --estimator ridge --lambda 0.5 --method bc_ge --out " +
                                 dir.string(),
                             dir);
    REQUIRE(run.exit_code == 0);

    // oracle: per-component intercept least squares via QR on the stacked design
    const auto data = RegressionDataset::from_csv(kTinyCsv);
    const auto partition = partition_contiguous(40, 8);
    std::vector<LocalFit> fits;
    for (int j = 0; j < 8; ++j) {
        const auto batch = data.rows(partition.block(j));
        fits.push_back(fit_ridge(batch.x(), batch.y(), 0.5));
    }
    Vector golden(2);
    for (int k = 0; k < 2; ++k) {
        Matrix v(8, 2);
        Vector resp(8);
        for (int j = 0; j < 8; ++j) {
            v.row(j) = fits[static_cast<std::size_t>(j)].v_matrix.row(k);
            resp(j) = fits[static_cast<std::size_t>(j)].theta_hat(k);
        }
        golden(k) = testutil::qr_intercept_ls(v, resp)(0);
    }

    const Vector theta = result_csv_thetas(dir / "result.csv");
    REQUIRE(theta.size() == 2);
    CHECK(testutil::max_abs_diff(theta, golden) <= 1e-8);
    CHECK(fs::exists(dir / "result.json"));
}

TEST_CASE("estimate naive matches the hand mean of the local fits") {
    const auto dir = fresh_dir("estimate_naive");
    const auto run = run_cli("estimate " + kTinyCsv + " --N 8 --estimator ridge --lambda 0.5 --method naive --out " +
                                 dir.string(),
                             dir);
    REQUIRE(run.exit_code == 0);

    const auto data = RegressionDataset::from_csv(kTinyCsv);
    const auto partition = partition_contiguous(40, 8);
    Vector mean = Vector::Zero(2);
    for (int j = 0; j < 8; ++j) {
        const auto batch = data.rows(partition.block(j));
        mean += fit_ridge(batch.x(), batch.y(), 0.5).theta_hat;
    }
    mean /= 8.0;
    CHECK(testutil::max_abs_diff(result_csv_thetas(dir / "result.csv"), mean) <= 1e-10);
}

TEST_CASE("estimate: non-divisor N exits 2 unless lenient") {
    const auto dir = fresh_dir("estimate_nondiv");
    const auto strict = run_cli("estimate " + kTinyCsv + " --N 7 --estimator ridge --lambda 0.5 --out " + dir.string(),
                                dir);
    CHECK(strict.exit_code == 2);
    CHECK(strict.err.find("error:") != std::string::npos);

    const auto lenient = run_cli(
        "estimate " + kTinyCsv + " --N 7 --estimator ridge --lambda 0.5 --lenient --out " + dir.string(), dir);
    CHECK(lenient.exit_code == 0);
}

TEST_CASE("estimate kernel writes the curve table") {
    const auto dir = fresh_dir("estimate_kernel");
    const auto run = run_cli("estimate " + kCurveCsv + " --N 8 --estimator kernel --grid-points 31 --out " +
                                 dir.string(),
                             dir);
    REQUIRE(run.exit_code == 0);
    const auto rows = read_csv(dir / "curve.csv");
    REQUIRE(rows.size() == 32);
    CHECK(rows[0] == std::vector<std::string>{"x", "r_tilde", "alpha_tilde", "naive_avg", "n_batches_used"});
}

TEST_CASE("estimate mz linear-score works end to end") {
    const auto dir = fresh_dir("estimate_mz");
    const auto run = run_cli("estimate " + kTinyCsv + " --N 8 --estimator mz --psi linear-score --out " + dir.string(),
                             dir);
    REQUIRE(run.exit_code == 0);
    const Vector theta = result_csv_thetas(dir / "result.csv");
    CHECK(theta.allFinite());
}

TEST_CASE("simulate: writes metrics.csv, honors overrides, reproduces bytes") {
    const auto dir = fresh_dir("simulate");
    const fs::path config = dir / "tiny.toml";
    std::ofstream(config) << "schema_version = 1\n"
                             "experiment = \"homogeneous\"\n"
                             "n = 240\nN_grid = [8]\nreplicates = 3\nseed = 11\np = 2\n"
                             "beta = [1.0, 0.0]\nestimator = \"ridge\"\nlambda_mode = \"fixed\"\nlambda = 0.5\n"
                             "shared_design = true\nhomogenize = true\n";

    const auto run = run_cli("simulate --config " + config.string() + " --out " + dir.string() + " --charts", dir);
    REQUIRE(run.exit_code == 0);
    const auto csv1 = slurp(dir / "metrics.csv");
    CHECK(csv1.rfind("experiment,N,method,component,bias,mse,var_hat,replicates,seed,note\n", 0) == 0);
    CHECK(fs::exists(dir / "bias_vs_N.svg"));
    CHECK(fs::exists(dir / "mse_vs_N.svg"));
    CHECK(fs::exists(dir / "run_manifest.json"));

    // byte-identical rerun
    const auto rerun = run_cli("simulate --config " + config.string() + " --out " + dir.string(), dir);
    REQUIRE(rerun.exit_code == 0);
    CHECK(slurp(dir / "metrics.csv") == csv1);

    // override shows up in the table
    const auto overridden = run_cli(
        "simulate --config " + config.string() + " --out " + dir.string() + " --override replicates=2", dir);
    REQUIRE(overridden.exit_code == 0);
    const auto rows = read_csv(dir / "metrics.csv");
    CHECK(rows.at(1).at(7) == "2");
}

TEST_CASE("simulate: malformed configs exit 2 and name the problem") {
    const auto dir = fresh_dir("simulate_bad");
    const fs::path config = dir / "bad.toml";
    std::ofstream(config) << "experiment = \"exp1_lasso\"\nreplicats = 5\n";
    const auto run = run_cli("simulate --config " + config.string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("replicats") != std::string::npos);

    const auto missing = run_cli("simulate --config does_not_exist.toml", dir);
    CHECK(missing.exit_code == 2);
}

TEST_CASE("stream equals the batch estimate and supports snapshots") {
    const auto dir = fresh_dir("stream");
    const auto batch_dir = fresh_dir("stream_batch");
    const auto est = run_cli("estimate " + kTinyCsv + " --N 8 --estimator ridge --lambda 0.5 --method bc_ge --out " +
                                 batch_dir.string(),
                             batch_dir);
    REQUIRE(est.exit_code == 0);

    const auto stream = run_cli("stream " + kTinyCsv + " --N 8 --estimator ridge --lambda 0.5 --snapshot-every 3 --out " +
                                    dir.string(),
                                dir);
    REQUIRE(stream.exit_code == 0);
    const Vector via_stream = result_csv_thetas(dir / "result.csv");
    const Vector via_batch = result_csv_thetas(batch_dir / "result.csv");
    CHECK(testutil::max_abs_diff(via_stream, via_batch) <= 1e-10);
    REQUIRE(fs::exists(dir / "snapshot_3.json"));
    REQUIRE(fs::exists(dir / "snapshot_6.json"));

    // resume from the mid-stream snapshot: identical result bytes
    const auto resume_dir = fresh_dir("stream_resume");
    const auto resumed = run_cli("stream " + kTinyCsv + " --N 8 --estimator ridge --lambda 0.5 --restore " +
                                     (dir / "snapshot_3.json").string() + " --out " + resume_dir.string(),
                                 resume_dir);
    REQUIRE(resumed.exit_code == 0);
    CHECK(slurp(resume_dir / "result.csv") == slurp(dir / "result.csv"));
}

TEST_CASE("stream with too few batches exits 3") {
    const auto dir = fresh_dir("stream_few");
    const auto run = run_cli("stream " + kTinyCsv + " --N 2 --estimator ridge --lambda 0.5 --out " + dir.string(), dir);
    CHECK(run.exit_code == 3);
    CHECK(run.err.find("N > q + 1") != std::string::npos);
}

TEST_CASE("check passes clean and fails under fault injection, within budget") {
    const auto dir = fresh_dir("check");
    const auto start = std::chrono::steady_clock::now();
    const auto ok = run_cli("check", dir);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(ok.exit_code == 0);
    CHECK(elapsed < 10.0);
    CHECK(ok.out.find("[ok]") != std::string::npos);

    const auto injected = run_cli("check", dir, "GBCDC_CHECK_INJECT_FAULT=1 ");
    CHECK(injected.exit_code == 1);
    CHECK(injected.out.find("[FAIL]") != std::string::npos);
}

TEST_CASE("simulate --strict exits 3 when cells fail") {
    const auto dir = fresh_dir("simulate_strict");
    const fs::path config = dir / "degenerate.toml";
    std::ofstream(config) << "schema_version = 1\n"
                             "experiment = \"homogeneous\"\n"
                             "n = 240\nN_grid = [8]\nreplicates = 2\nseed = 11\np = 2\n"
                             "beta = [1.0, 0.0]\nestimator = \"ridge\"\nlambda_mode = \"fixed\"\nlambda = 0.5\n"
                             "shared_design = true\nhomogenize = false\n";
    const auto lenient = run_cli("simulate --config " + config.string() + " --out " + dir.string(), dir);
    CHECK(lenient.exit_code == 0);  // failed cells are recorded, not fatal
    const auto strict = run_cli("simulate --config " + config.string() + " --out " + dir.string() + " --strict", dir);
    CHECK(strict.exit_code == 3);
}

TEST_CASE("estimate with cross-validated penalty works end to end") {
    const auto dir = fresh_dir("estimate_cv");
    const auto run = run_cli("estimate " + kTinyCsv +
                                 " --N 4 --estimator lasso --cv --cv-folds 5 --cv-grid-size 10 --method bc_ge --out " +
                                 dir.string(),
                             dir);
    REQUIRE(run.exit_code == 0);
    CHECK(result_csv_thetas(dir / "result.csv").allFinite());
}

TEST_CASE("stream lasso with a fixed support matches the restricted batch composite") {
    const auto dir = fresh_dir("stream_lasso");
    const auto run = run_cli(
        "stream " + kTinyCsv + " --N 8 --estimator lasso --lambda 0.05 --support 1 --support 2 --out " + dir.string(),
        dir);
    REQUIRE(run.exit_code == 0);

    const auto data = RegressionDataset::from_csv(kTinyCsv);
    const auto partition = partition_contiguous(40, 8);
    std::vector<LocalFit> fits;
    for (int j = 0; j < 8; ++j) {
        const auto batch = data.rows(partition.block(j));
        fits.push_back(fit_lasso(batch.x(), batch.y(), 0.05));
    }
    const auto restricted = restrict_to_support(fits, {0, 1});
    std::vector<double> golden(2);
    for (int k = 0; k < 2; ++k) {
        Matrix v(8, 2);
        Vector resp(8);
        for (int j = 0; j < 8; ++j) {
            v.row(j) = restricted[static_cast<std::size_t>(j)].v_matrix.row(k);
            resp(j) = restricted[static_cast<std::size_t>(j)].theta_hat(k);
        }
        golden[static_cast<std::size_t>(k)] = testutil::qr_intercept_ls(v, resp)(0);
    }
    const Vector theta = result_csv_thetas(dir / "result.csv");
    CHECK(std::abs(theta(0) - golden[0]) <= 1e-8);
    CHECK(std::abs(theta(1) - golden[1]) <= 1e-8);
}

TEST_CASE("GBCDC_THREADS env var is honored as the thread fallback") {
    const auto dir = fresh_dir("threads_env");
    const fs::path config = dir / "tiny.toml";
    std::ofstream(config) << "schema_version = 1\n"
                             "experiment = \"homogeneous\"\n"
                             "n = 240\nN_grid = [8]\nreplicates = 2\nseed = 3\np = 2\n"
                             "beta = [1.0, 0.0]\nestimator = \"ridge\"\nlambda_mode = \"fixed\"\nlambda = 0.5\n";
    const auto run = run_cli("simulate --config " + config.string() + " --out " + dir.string(), dir,
                             "GBCDC_THREADS=1 ");
    CHECK(run.exit_code == 0);
}

TEST_CASE("usage errors exit 2") {
    const auto dir = fresh_dir("usage");
    CHECK(run_cli("estimate", dir).exit_code == 2);
    CHECK(run_cli("estimate " + kTinyCsv + " --N 8 --estimator nope --out " + dir.string(), dir).exit_code == 2);
    CHECK(run_cli("estimate missing.csv --N 4", dir).exit_code == 2);
}
