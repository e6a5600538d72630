#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gbcdc/compose.hpp"
#include "gbcdc/local_fit.hpp"

namespace gbcdc {

/// One observation handed to an estimating function. For regression-style
/// functions the convention is (x_1..x_d, y); pure location functions read
/// only the last entry.
using Observation = Vector;

enum class Smoothness { smooth, nonsmooth };

/// A p-dimensional estimating function psi(theta, z) with optional analytic
/// Jacobian d psi / d theta. Callables must be pure (safe for concurrent
/// invocation).
struct EstimatingFunction {
    int dim = 1;
    std::function<Vector(const Vector&, const Observation&)> psi;
    std::function<Matrix(const Vector&, const Observation&)> jacobian;  ///< may be empty
    Smoothness smoothness = Smoothness::smooth;
};

/// Built-in estimating functions selectable by name:
///   "location"       psi = y - theta                       (p = 1)
///   "linear-score"   psi = x (y - x' theta)                (p = dim of x)
///   "huber(c)"       psi = clip(y - theta, -c, c)          (p = 1, nonsmooth)
///   "exp-regression" psi = x e^{theta x} (y - e^{theta x}) (p = 1)
EstimatingFunction make_estimating_function(const std::string& name, int x_dim = 1);

/// Mean estimating equation (1/m) sum_i psi(theta, z_i).
Vector mean_psi(const std::vector<Observation>& batch, const EstimatingFunction& fn, const Vector& theta);

/// Damped Newton root of the mean estimating equation: solves until
/// ||Psi||_inf <= tol, halving the step up to 30 times per iteration while
/// the residual fails to decrease. Uses the analytic Jacobian when present,
/// central finite differences otherwise. ConvergenceError /
/// SingularJacobianError on failure.
LocalFit solve_z_estimator(const std::vector<Observation>& batch, const EstimatingFunction& fn, const Vector& init,
                           double tol = 1e-10, int max_iter = 100);

/// The scaled batch statistic (1/sqrt m) sum_i psi(theta_eval, z_i) used as
/// the composite-regression covariate. Evaluated at a batch's own root it is
/// zero by definition; evaluate at a pilot estimate instead.
Vector psi_covariate(const std::vector<Observation>& batch, const EstimatingFunction& fn, const Vector& theta_eval);

/// Bias-corrected global estimate of one coordinate from Z-estimator fits
/// and their psi covariates; delegates to the shared intercept least
/// squares, so results match bc_ge_component exactly on identical inputs.
ComponentEstimate bc_ge_mz(const std::vector<LocalFit>& fits, const std::vector<Vector>& covariates, int component);

/// Max relative gap between the analytic Jacobian and central finite
/// differences over the probe points; used to vet analytic Jacobians.
double jacobian_gap(const EstimatingFunction& fn, const std::vector<Vector>& theta_probes,
                    const std::vector<Observation>& obs_probes);

/// Rows of a dataset as (x..., y) observations.
std::vector<Observation> observations_from_dataset(const Matrix& x, const Vector& y);

}  // namespace gbcdc
