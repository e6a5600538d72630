#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gbcdc/compose.hpp"
#include "gbcdc/config.hpp"
#include "gbcdc/dataset.hpp"
#include "gbcdc/errors.hpp"
#include "gbcdc/estimators.hpp"
#include "gbcdc/homogenize.hpp"
#include "gbcdc/kernel.hpp"
#include "gbcdc/serialize.hpp"
#include "gbcdc/simulate.hpp"
#include "gbcdc/stream.hpp"
#include "gbcdc/zestim.hpp"

namespace py = pybind11;
using namespace gbcdc;

namespace {

std::vector<LocalFit> fits_from_list(const py::list& fits) {
    std::vector<LocalFit> out;
    for (const auto& f : fits) out.push_back(f.cast<LocalFit>());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bias-corrected divide-and-conquer estimation";

    py::register_exception<Error>(m, "GbcdcError", PyExc_RuntimeError);

    py::enum_<EstimatorKind>(m, "EstimatorKind")
        .value("ols", EstimatorKind::ols)
        .value("ridge", EstimatorKind::ridge)
        .value("lasso", EstimatorKind::lasso)
        .value("mz", EstimatorKind::mz);

    py::class_<RegressionDataset>(m, "RegressionDataset")
        .def(py::init<Matrix, Vector>(), py::arg("x"), py::arg("y"))
        .def_property_readonly("x", &RegressionDataset::x)
        .def_property_readonly("y", &RegressionDataset::y)
        .def_property_readonly("n", &RegressionDataset::n)
        .def_property_readonly("p", &RegressionDataset::p)
        .def("rows", &RegressionDataset::rows)
        .def_static("from_csv", &RegressionDataset::from_csv)
        .def("to_csv", &RegressionDataset::to_csv);

    py::class_<BatchPartition>(m, "BatchPartition")
        .def_property_readonly("blocks", &BatchPartition::blocks)
        .def_property_readonly("n", &BatchPartition::n)
        .def_property_readonly("n_batches", &BatchPartition::n_batches)
        .def("batch_size", &BatchPartition::batch_size);

    m.def("partition_contiguous", &partition_contiguous, py::arg("n"), py::arg("n_batches"), py::arg("strict") = true);
    m.def("partition_shuffled", &partition_shuffled, py::arg("n"), py::arg("n_batches"), py::arg("seed"));

    py::class_<LocalFit>(m, "LocalFit")
        .def(py::init<>())
        .def_readwrite("theta_hat", &LocalFit::theta_hat)
        .def_readwrite("gram", &LocalFit::gram)
        .def_readwrite("v_matrix", &LocalFit::v_matrix)
        .def_readwrite("support", &LocalFit::support)
        .def_readwrite("lambda_", &LocalFit::lambda)
        .def_readwrite("m", &LocalFit::m)
        .def_readwrite("kind", &LocalFit::kind)
        .def("to_json", [](const LocalFit& fit) { return to_json(fit); })
        .def_static("from_json", &local_fit_from_json);

    py::class_<CompositionResult>(m, "CompositionResult")
        .def_readonly("theta_tilde", &CompositionResult::theta_tilde)
        .def_readonly("xi_tilde", &CompositionResult::xi_tilde)
        .def_readonly("var_hat", &CompositionResult::var_hat)
        .def_readonly("sigma2_hat", &CompositionResult::sigma2_hat)
        .def_readonly("n_batches", &CompositionResult::n_batches)
        .def_readonly("components", &CompositionResult::components)
        .def_property_readonly("method", [](const CompositionResult& r) { return to_string(r.method); })
        .def("to_json", [](const CompositionResult& r) { return to_json(r); });

    m.def("fit_ols", &fit_ols, py::arg("x"), py::arg("y"));
    m.def("fit_ridge", &fit_ridge, py::arg("x"), py::arg("y"), py::arg("lambda_"));
    m.def("fit_lasso", &fit_lasso, py::arg("x"), py::arg("y"), py::arg("lambda_"), py::arg("tol") = 1e-8,
          py::arg("max_iter") = 10000);
    m.def("default_lambda_grid", &default_lambda_grid, py::arg("x"), py::arg("y"), py::arg("size") = 50);
    m.def(
        "select_lambda_cv",
        [](const Matrix& x, const Vector& y, const std::string& kind, int folds, const std::vector<double>& grid,
           std::uint64_t seed) {
            const PenaltyKind k = kind == "lasso" ? PenaltyKind::lasso : PenaltyKind::ridge;
            return select_lambda_cv(x, y, k, folds, grid, seed);
        },
        py::arg("x"), py::arg("y"), py::arg("kind"), py::arg("folds"), py::arg("grid"), py::arg("seed"));

    m.def("naive_average", [](const py::list& fits) { return naive_average(fits_from_list(fits)); });
    m.def(
        "dc_expression",
        [](const py::list& fits, EstimatorKind kind) { return dc_expression(fits_from_list(fits), kind); },
        py::arg("fits"), py::arg("kind"));
    m.def(
        "majority_vote_support",
        [](const py::list& fits, double threshold) { return majority_vote_support(fits_from_list(fits), threshold); },
        py::arg("fits"), py::arg("threshold") = 0.5);
    m.def(
        "restrict_to_support",
        [](const py::list& fits, const std::vector<int>& support) {
            return restrict_to_support(fits_from_list(fits), support);
        },
        py::arg("fits"), py::arg("support"));
    m.def(
        "bc_ge", [](const py::list& fits, double threshold) { return bc_ge(fits_from_list(fits), threshold); },
        py::arg("fits"), py::arg("vote_threshold") = 0.5);
    m.def("lasso_full_mse", &lasso_full_mse, py::arg("lambda_"), py::arg("sign_beta"), py::arg("e_vvT"),
          py::arg("sigma2"), py::arg("n"));

    py::class_<ComponentRegression>(m, "ComponentRegression")
        .def(py::init<>())
        .def_readwrite("responses", &ComponentRegression::responses)
        .def_readwrite("covariates", &ComponentRegression::covariates)
        .def_readwrite("component_index", &ComponentRegression::component_index);

    py::class_<ComponentEstimate>(m, "ComponentEstimate")
        .def_readonly("theta", &ComponentEstimate::theta)
        .def_readonly("xi", &ComponentEstimate::xi)
        .def_readonly("var_hat", &ComponentEstimate::var_hat)
        .def_readonly("sigma2_hat", &ComponentEstimate::sigma2_hat);

    m.def("bc_ge_component", &bc_ge_component);
    m.def("estimate_sigma2", &estimate_sigma2, py::arg("reg"), py::arg("theta"), py::arg("xi"));

    // homogenization
    py::class_<ALawSpec>(m, "ALawSpec")
        .def(py::init<>())
        .def_readwrite("low", &ALawSpec::low)
        .def_readwrite("high", &ALawSpec::high)
        .def_readwrite("gap_low", &ALawSpec::gap_low)
        .def_readwrite("gap_high", &ALawSpec::gap_high);

    py::class_<HomogenizationPlan>(m, "HomogenizationPlan")
        .def_readonly("null_set", &HomogenizationPlan::null_set)
        .def_readonly("a_values", &HomogenizationPlan::a_values)
        .def_readonly("b", &HomogenizationPlan::b)
        .def_readonly("center", &HomogenizationPlan::center)
        .def_readonly("scale", &HomogenizationPlan::scale)
        .def_readonly("seed", &HomogenizationPlan::seed)
        .def("is_identity", &HomogenizationPlan::is_identity)
        .def("to_json", [](const HomogenizationPlan& plan) { return to_json(plan); })
        .def_static("from_json", &plan_from_json);

    m.def("estimate_null_set", &estimate_null_set, py::arg("batch"), py::arg("threshold"));
    m.def("build_plan", &build_plan, py::arg("null_set"), py::arg("p"), py::arg("n_batches"),
          py::arg("a_law") = ALawSpec{}, py::arg("seed") = 0, py::arg("with_shift") = true);
    m.def("learn_standardization", &learn_standardization, py::arg("plan"), py::arg("first_batch"));
    m.def("apply_transform", &apply_transform, py::arg("batch"), py::arg("plan"), py::arg("batch_index"));
    m.def("invert_transform", &invert_transform, py::arg("transformed"), py::arg("plan"), py::arg("batch_index"));

    py::class_<EquivalenceReport>(m, "EquivalenceReport")
        .def_readonly("eta_hat", &EquivalenceReport::eta_hat)
        .def_readonly("beta_true", &EquivalenceReport::beta_true)
        .def_readonly("deviation", &EquivalenceReport::deviation)
        .def_readonly("eta_hat_nonnull", &EquivalenceReport::eta_hat_nonnull)
        .def_readonly("deviation_nonnull", &EquivalenceReport::deviation_nonnull)
        .def_readonly("max_deviation_nonnull", &EquivalenceReport::max_deviation_nonnull)
        .def_readonly("eigen_residual", &EquivalenceReport::eigen_residual);

    m.def("check_equivalence", &check_equivalence, py::arg("dataset"), py::arg("partition"), py::arg("plan"),
          py::arg("beta_true"));

    // estimating equations
    py::enum_<Smoothness>(m, "Smoothness").value("smooth", Smoothness::smooth).value("nonsmooth", Smoothness::nonsmooth);

    py::class_<EstimatingFunction>(m, "EstimatingFunction")
        .def(py::init<>())
        .def_readwrite("dim", &EstimatingFunction::dim)
        .def_readwrite("psi", &EstimatingFunction::psi)
        .def_readwrite("jacobian", &EstimatingFunction::jacobian)
        .def_readwrite("smoothness", &EstimatingFunction::smoothness);

    m.def("make_estimating_function", &make_estimating_function, py::arg("name"), py::arg("x_dim") = 1);
    m.def("solve_z_estimator", &solve_z_estimator, py::arg("batch"), py::arg("fn"), py::arg("init"),
          py::arg("tol") = 1e-10, py::arg("max_iter") = 100);
    m.def("psi_covariate", &psi_covariate, py::arg("batch"), py::arg("fn"), py::arg("theta_eval"));
    m.def(
        "bc_ge_mz",
        [](const py::list& fits, const std::vector<Vector>& covariates, int component) {
            return bc_ge_mz(fits_from_list(fits), covariates, component);
        },
        py::arg("fits"), py::arg("covariates"), py::arg("component"));
    m.def("observations_from_dataset", &observations_from_dataset, py::arg("x"), py::arg("y"));

    // kernel extension
    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init<>())
        .def_readwrite("c", &KernelSpec::c)
        .def_readwrite("varsigma", &KernelSpec::varsigma)
        .def_readwrite("grid", &KernelSpec::grid)
        .def_property(
            "kernel", [](const KernelSpec& s) { return s.kernel == KernelType::gaussian ? "gaussian" : "epanechnikov"; },
            [](KernelSpec& s, const std::string& name) { s.kernel = kernel_type_from_string(name); })
        .def("bandwidth", &KernelSpec::bandwidth);

    py::class_<CurvePoint>(m, "CurvePoint")
        .def_readonly("x", &CurvePoint::x)
        .def_readonly("r_tilde", &CurvePoint::r_tilde)
        .def_readonly("alpha_tilde", &CurvePoint::alpha_tilde)
        .def_readonly("naive", &CurvePoint::naive)
        .def_readonly("ok", &CurvePoint::ok)
        .def_readonly("n_batches", &CurvePoint::n_batches);

    m.def("default_grid", &default_grid, py::arg("points") = 101);
    m.def("nw_estimate", &nw_estimate, py::arg("batch"), py::arg("x"), py::arg("spec"));
    m.def("phi_covariate", &phi_covariate, py::arg("batch"), py::arg("x"), py::arg("spec"), py::arg("center"));
    m.def("bc_ge_curve", &bc_ge_curve, py::arg("curve_values"), py::arg("covariates"), py::arg("grid"));

    // streaming
    py::class_<StreamState>(m, "StreamState")
        .def(py::init<int, int>(), py::arg("p"), py::arg("q"))
        .def("update", &StreamState::update)
        .def("finalize", &StreamState::finalize)
        .def("merge", &StreamState::merge)
        .def_property_readonly("n_batches", &StreamState::n_batches)
        .def_property_readonly("p", &StreamState::p)
        .def_property_readonly("q", &StreamState::q)
        .def("to_json", &StreamState::to_json)
        .def_static("from_json", &StreamState::from_json);

    // simulation harness
    m.def("gen_experiment1", &gen_experiment1, py::arg("n"), py::arg("seed"));
    m.def("gen_experiment2", &gen_experiment2, py::arg("n"), py::arg("seed"));
    m.def("gen_homogeneous", &gen_homogeneous, py::arg("n"), py::arg("p"), py::arg("beta"), py::arg("seed"));
    m.def("gen_homogeneous_shared_design", &gen_homogeneous_shared_design, py::arg("m"), py::arg("n_batches"),
          py::arg("beta"), py::arg("decay"), py::arg("seed"));
    m.def("gen_nonparam", &gen_nonparam, py::arg("n_batches"), py::arg("m"), py::arg("seed"), py::arg("tilt") = 1.0);
    m.def("nonparam_truth", &nonparam_truth);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("experiment", &ExperimentConfig::experiment)
        .def_readwrite("n", &ExperimentConfig::n)
        .def_readwrite("N_grid", &ExperimentConfig::N_grid)
        .def_readwrite("replicates", &ExperimentConfig::replicates)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("partition", &ExperimentConfig::partition)
        .def_readwrite("threads", &ExperimentConfig::threads)
        .def_readwrite("estimator", &ExperimentConfig::estimator)
        .def_readwrite("lambda_fixed", &ExperimentConfig::lambda_fixed)
        .def_readwrite("cv_folds", &ExperimentConfig::cv_folds)
        .def_readwrite("cv_grid_size", &ExperimentConfig::cv_grid_size)
        .def_readwrite("vote_threshold", &ExperimentConfig::vote_threshold)
        .def_readwrite("p", &ExperimentConfig::p)
        .def_readwrite("beta", &ExperimentConfig::beta)
        .def_readwrite("shared_design", &ExperimentConfig::shared_design)
        .def_readwrite("homogenize", &ExperimentConfig::homogenize)
        .def_readwrite("kernel", &ExperimentConfig::kernel)
        .def_readwrite("bandwidth_c", &ExperimentConfig::bandwidth_c)
        .def_readwrite("bandwidth_exponent", &ExperimentConfig::bandwidth_exponent)
        .def_readwrite("grid_points", &ExperimentConfig::grid_points)
        .def_readwrite("tilt", &ExperimentConfig::tilt)
        .def_property(
            "lambda_mode",
            [](const ExperimentConfig& c) {
                switch (c.lambda_mode) {
                    case LambdaMode::fixed: return "fixed";
                    case LambdaMode::cv_first: return "cv_first";
                    default: return "cv_median";
                }
            },
            [](ExperimentConfig& c, const std::string& mode) {
                if (mode == "fixed") c.lambda_mode = LambdaMode::fixed;
                else if (mode == "cv_first") c.lambda_mode = LambdaMode::cv_first;
                else if (mode == "cv_median") c.lambda_mode = LambdaMode::cv_median;
                else throw ConfigError("lambda_mode must be fixed, cv_first or cv_median");
            });

    py::class_<MetricsRow>(m, "MetricsRow")
        .def_readonly("experiment", &MetricsRow::experiment)
        .def_readonly("N", &MetricsRow::N)
        .def_readonly("method", &MetricsRow::method)
        .def_readonly("component", &MetricsRow::component)
        .def_readonly("bias", &MetricsRow::bias)
        .def_readonly("mse", &MetricsRow::mse)
        .def_readonly("var_hat", &MetricsRow::var_hat)
        .def_readonly("replicates", &MetricsRow::replicates)
        .def_readonly("seed", &MetricsRow::seed)
        .def_readonly("note", &MetricsRow::note);

    py::class_<MetricsTable>(m, "MetricsTable")
        .def_readonly("rows", &MetricsTable::rows)
        .def("to_csv", &MetricsTable::to_csv);

    m.def("run_experiment", &run_experiment, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    m.attr("__version__") = "0.1.0";
}
