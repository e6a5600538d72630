#include "gbcdc/zestim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gbcdc/errors.hpp"

namespace gbcdc {

EstimatingFunction make_estimating_function(const std::string& name, int x_dim) {
    EstimatingFunction fn;
    if (name == "location") {
        fn.dim = 1;
        fn.psi = [](const Vector& theta, const Observation& z) {
            Vector out(1);
            out(0) = z(z.size() - 1) - theta(0);
            return out;
        };
        fn.jacobian = [](const Vector&, const Observation&) {
            Matrix j(1, 1);
            j(0, 0) = -1.0;
            return j;
        };
        return fn;
    }
    if (name == "linear-score") {
        fn.dim = x_dim;
        fn.psi = [x_dim](const Vector& theta, const Observation& z) {
            const Vector x = z.head(x_dim);
            const double y = z(z.size() - 1);
            return Vector(x * (y - x.dot(theta)));
        };
        fn.jacobian = [x_dim](const Vector&, const Observation& z) {
            const Vector x = z.head(x_dim);
            return Matrix(-x * x.transpose());
        };
        return fn;
    }
    if (name.rfind("huber(", 0) == 0 && name.back() == ')') {
        const double c = std::stod(name.substr(6, name.size() - 7));
        if (!(c > 0.0)) throw DomainError("huber: cutoff must be positive");
        fn.dim = 1;
        fn.smoothness = Smoothness::nonsmooth;
        fn.psi = [c](const Vector& theta, const Observation& z) {
            Vector out(1);
            const double r = z(z.size() - 1) - theta(0);
            out(0) = std::clamp(r, -c, c);
            return out;
        };
        // Generalized derivative; the clip corners have measure zero.
        fn.jacobian = [c](const Vector& theta, const Observation& z) {
            Matrix j(1, 1);
            const double r = z(z.size() - 1) - theta(0);
            j(0, 0) = std::abs(r) < c ? -1.0 : 0.0;
            return j;
        };
        return fn;
    }
    if (name == "exp-regression") {
        fn.dim = 1;
        fn.psi = [](const Vector& theta, const Observation& z) {
            Vector out(1);
            const double x = z(0);
            const double y = z(z.size() - 1);
            const double q = std::exp(theta(0) * x);
            out(0) = x * q * (y - q);
            return out;
        };
        fn.jacobian = [](const Vector& theta, const Observation& z) {
            Matrix j(1, 1);
            const double x = z(0);
            const double y = z(z.size() - 1);
            const double q = std::exp(theta(0) * x);
            j(0, 0) = x * x * q * (y - 2.0 * q);
            return j;
        };
        return fn;
    }
    throw DomainError("unknown estimating function '" + name +
                      "' (expected location, linear-score, huber(c) or exp-regression)");
}

Vector mean_psi(const std::vector<Observation>& batch, const EstimatingFunction& fn, const Vector& theta) {
    if (batch.empty()) throw DomainError("estimating equation: empty batch");
    Vector sum = Vector::Zero(fn.dim);
    for (const auto& z : batch) sum += fn.psi(theta, z);
    return sum / static_cast<double>(batch.size());
}

namespace {

Matrix mean_jacobian(const std::vector<Observation>& batch, const EstimatingFunction& fn, const Vector& theta) {
    if (fn.jacobian) {
        Matrix sum = Matrix::Zero(fn.dim, fn.dim);
        for (const auto& z : batch) sum += fn.jacobian(theta, z);
        return sum / static_cast<double>(batch.size());
    }
    // Central finite differences of the mean equation.
    Matrix j(fn.dim, fn.dim);
    const double h0 = 1e-6;
    for (int k = 0; k < fn.dim; ++k) {
        const double h = h0 * std::max(1.0, std::abs(theta(k)));
        Vector hi = theta, lo = theta;
        hi(k) += h;
        lo(k) -= h;
        j.col(k) = (mean_psi(batch, fn, hi) - mean_psi(batch, fn, lo)) / (2.0 * h);
    }
    return j;
}

}  // namespace

LocalFit solve_z_estimator(const std::vector<Observation>& batch, const EstimatingFunction& fn, const Vector& init,
                           double tol, int max_iter) {
    if (init.size() != fn.dim) throw DimensionMismatchError("z-estimator: init length differs from psi dimension");
    if (!(tol > 0.0)) throw DomainError("z-estimator: tol must be positive");

    Vector theta = init;
    Vector psi = mean_psi(batch, fn, theta);
    for (int iter = 0; iter < max_iter; ++iter) {
        if (psi.cwiseAbs().maxCoeff() <= tol) break;
        const Matrix j = mean_jacobian(batch, fn, theta);
        Eigen::FullPivLU<Matrix> lu(j);
        if (!lu.isInvertible()) {
            throw SingularJacobianError("z-estimator: singular mean Jacobian");
        }
        const Vector direction = lu.solve(-psi);
        double step = 1.0;
        bool decreased = false;
        for (int halving = 0; halving < 30; ++halving) {
            const Vector candidate = theta + step * direction;
            const Vector psi_candidate = mean_psi(batch, fn, candidate);
            if (psi_candidate.cwiseAbs().maxCoeff() < psi.cwiseAbs().maxCoeff()) {
                theta = candidate;
                psi = psi_candidate;
                decreased = true;
                break;
            }
            step /= 2.0;
        }
        if (!decreased) {
            throw ConvergenceError("z-estimator: residual stopped decreasing during step halving");
        }
    }
    if (psi.cwiseAbs().maxCoeff() > tol) {
        throw ConvergenceError("z-estimator: did not reach tolerance in " + std::to_string(max_iter) + " iterations");
    }

    LocalFit fit;
    fit.theta_hat = theta;
    fit.gram = Matrix::Zero(fn.dim, fn.dim);
    fit.v_matrix = Matrix::Zero(fn.dim, fn.dim);
    fit.support.resize(static_cast<std::size_t>(fn.dim));
    std::iota(fit.support.begin(), fit.support.end(), 0);
    fit.lambda = 0.0;
    fit.m = static_cast<int>(batch.size());
    fit.kind = EstimatorKind::mz;
    return fit;
}

Vector psi_covariate(const std::vector<Observation>& batch, const EstimatingFunction& fn, const Vector& theta_eval) {
    if (batch.empty()) throw DomainError("psi_covariate: empty batch");
    Vector sum = Vector::Zero(fn.dim);
    for (const auto& z : batch) sum += fn.psi(theta_eval, z);
    return sum / std::sqrt(static_cast<double>(batch.size()));
}

ComponentEstimate bc_ge_mz(const std::vector<LocalFit>& fits, const std::vector<Vector>& covariates, int component) {
    if (fits.empty()) throw DomainError("bc_ge_mz: no fits supplied");
    if (fits.size() != covariates.size()) {
        throw DimensionMismatchError("bc_ge_mz: one covariate vector per fit required");
    }
    const auto n = static_cast<Eigen::Index>(fits.size());
    const auto q = covariates.front().size();
    ComponentRegression reg;
    reg.component_index = component;
    reg.responses.resize(n);
    reg.covariates.resize(n, q);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& fit = fits[static_cast<std::size_t>(j)];
        if (component < 0 || component >= fit.theta_hat.size()) {
            throw DomainError("bc_ge_mz: component index out of range");
        }
        if (covariates[static_cast<std::size_t>(j)].size() != q) {
            throw DimensionMismatchError("bc_ge_mz: covariate vectors disagree on length");
        }
        reg.responses(j) = fit.theta_hat(component);
        reg.covariates.row(j) = covariates[static_cast<std::size_t>(j)];
    }
    return bc_ge_component(reg);
}

double jacobian_gap(const EstimatingFunction& fn, const std::vector<Vector>& theta_probes,
                    const std::vector<Observation>& obs_probes) {
    if (!fn.jacobian) throw DomainError("jacobian_gap: estimating function has no analytic Jacobian");
    double worst = 0.0;
    for (const auto& theta : theta_probes) {
        for (const auto& z : obs_probes) {
            const Matrix analytic = fn.jacobian(theta, z);
            Matrix fd(fn.dim, fn.dim);
            for (int k = 0; k < fn.dim; ++k) {
                const double h = 1e-6 * std::max(1.0, std::abs(theta(k)));
                Vector hi = theta, lo = theta;
                hi(k) += h;
                lo(k) -= h;
                fd.col(k) = (fn.psi(hi, z) - fn.psi(lo, z)) / (2.0 * h);
            }
            const double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1e-12);
            worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff() / scale);
        }
    }
    return worst;
}

std::vector<Observation> observations_from_dataset(const Matrix& x, const Vector& y) {
    if (x.rows() != y.size()) throw DimensionMismatchError("observations: x rows and y length differ");
    std::vector<Observation> obs;
    obs.reserve(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Observation z(x.cols() + 1);
        z.head(x.cols()) = x.row(i);
        z(x.cols()) = y(i);
        obs.push_back(std::move(z));
    }
    return obs;
}

}  // namespace gbcdc
