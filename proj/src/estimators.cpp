#include "gbcdc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gbcdc/errors.hpp"
#include "gbcdc/rng.hpp"

namespace gbcdc {

namespace {

constexpr double kSupportTol = 1e-10;  // |theta_k| above this counts as nonzero

Matrix batch_gram(const Matrix& x) {
    const double m = static_cast<double>(x.rows());
    Matrix g = (x.transpose() * x) / m;
    return (g + g.transpose()) / 2.0;  // enforce exact symmetry
}

void check_batch(const Matrix& x, const Vector& y) {
    if (x.rows() != y.size()) throw DimensionMismatchError("fit: x rows and y length differ");
    if (x.rows() < 1 || x.cols() < 1) throw DomainError("fit: need m >= 1 and p >= 1");
    if (!x.allFinite() || !y.allFinite()) throw DomainError("fit: non-finite entry in batch");
}

double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

/// Cyclic coordinate descent on (1/2m)||y - X beta||^2 + lambda ||beta||_1,
/// written in terms of the Gram matrix g = (1/m) X^T X and the moment vector
/// c = (1/m) X^T y. `beta` is the warm start and carries the solution out.
void lasso_cd(const Matrix& g, const Vector& c, double lambda, double tol, int max_iter, Vector& beta) {
    const int p = static_cast<int>(g.rows());
    Vector g_beta = g * beta;
    for (int sweep = 0; sweep < max_iter; ++sweep) {
        double delta_max = 0.0;
        for (int k = 0; k < p; ++k) {
            const double gkk = g(k, k);
            if (gkk <= 0.0) continue;  // all-zero column: coordinate stays put
            const double z = c(k) - g_beta(k) + gkk * beta(k);
            const double next = soft_threshold(z, lambda) / gkk;
            const double d = next - beta(k);
            if (d != 0.0) {
                g_beta += g.col(k) * d;
                beta(k) = next;
                delta_max = std::max(delta_max, std::abs(d));
            }
        }
        if (delta_max < tol) {
            // Accept only once the subgradient stationarity conditions hold;
            // trailing coordinate interactions can need a few more sweeps.
            const Vector grad = c - g_beta;
            bool ok = true;
            for (int k = 0; k < p && ok; ++k) {
                if (std::abs(beta(k)) > kSupportTol) {
                    ok = std::abs(grad(k) - lambda * (beta(k) > 0 ? 1.0 : -1.0)) <= 10.0 * tol;
                } else {
                    ok = std::abs(grad(k)) <= lambda + 10.0 * tol;
                }
            }
            if (ok) return;
        }
    }
    throw ConvergenceError("lasso: coordinate descent did not converge in " + std::to_string(max_iter) + " sweeps");
}

}  // namespace

LocalFit fit_ols(const Matrix& batch_x, const Vector& batch_y) {
    check_batch(batch_x, batch_y);
    const int p = static_cast<int>(batch_x.cols());
    const double m = static_cast<double>(batch_x.rows());
    const Matrix g = batch_gram(batch_x);
    const Vector c = batch_x.transpose() * batch_y / m;

    LocalFit fit;
    fit.theta_hat = solve_sym_checked(g, c, "ols gram");
    fit.gram = g;
    fit.v_matrix = Matrix::Zero(p, p);
    fit.support.resize(static_cast<std::size_t>(p));
    std::iota(fit.support.begin(), fit.support.end(), 0);
    fit.lambda = 0.0;
    fit.m = static_cast<int>(m);
    fit.kind = EstimatorKind::ols;
    return fit;
}

LocalFit fit_ridge(const Matrix& batch_x, const Vector& batch_y, double lambda) {
    check_batch(batch_x, batch_y);
    if (lambda < 0.0) throw DomainError("ridge: lambda must be nonnegative");
    const int p = static_cast<int>(batch_x.cols());
    const double m = static_cast<double>(batch_x.rows());
    const Matrix g = batch_gram(batch_x);
    const Vector c = batch_x.transpose() * batch_y / m;
    const Matrix a = g + lambda * Matrix::Identity(p, p);

    LocalFit fit;
    if (lambda == 0.0) {
        fit.theta_hat = solve_sym_checked(a, c, "ridge gram (lambda = 0)");
        fit.v_matrix = -invert_sym_checked(a, "ridge gram (lambda = 0)");
    } else {
        Eigen::LDLT<Matrix> ldlt(a);
        fit.theta_hat = ldlt.solve(c);
        fit.v_matrix = -ldlt.solve(Matrix::Identity(p, p));
        fit.v_matrix = (fit.v_matrix + fit.v_matrix.transpose()) / 2.0;
    }
    fit.gram = g;
    fit.support.resize(static_cast<std::size_t>(p));
    std::iota(fit.support.begin(), fit.support.end(), 0);
    fit.lambda = lambda;
    fit.m = static_cast<int>(m);
    fit.kind = EstimatorKind::ridge;
    return fit;
}

LocalFit fit_lasso(const Matrix& batch_x, const Vector& batch_y, double lambda, double tol, int max_iter) {
    check_batch(batch_x, batch_y);
    if (lambda < 0.0) throw DomainError("lasso: lambda must be nonnegative");
    if (!(tol > 0.0)) throw DomainError("lasso: tol must be positive");
    if (max_iter < 1) throw DomainError("lasso: max_iter must be >= 1");
    const int p = static_cast<int>(batch_x.cols());
    const double m = static_cast<double>(batch_x.rows());
    const Matrix g = batch_gram(batch_x);
    const Vector c = batch_x.transpose() * batch_y / m;

    Vector beta = Vector::Zero(p);
    lasso_cd(g, c, lambda, tol, max_iter, beta);

    LocalFit fit;
    fit.theta_hat = beta;
    fit.gram = g;
    for (int k = 0; k < p; ++k) {
        if (std::abs(beta(k)) > kSupportTol) {
            fit.support.push_back(k);
        } else {
            fit.theta_hat(k) = 0.0;
        }
    }
    const int s = static_cast<int>(fit.support.size());
    if (s > 0) {
        Matrix g_ss(s, s);
        for (int a = 0; a < s; ++a)
            for (int b = 0; b < s; ++b) g_ss(a, b) = g(fit.support[static_cast<std::size_t>(a)], fit.support[static_cast<std::size_t>(b)]);
        fit.v_matrix = -invert_sym_checked(g_ss, "lasso restricted gram");
    } else {
        fit.v_matrix = Matrix(0, 0);
    }
    fit.lambda = lambda;
    fit.m = static_cast<int>(m);
    fit.kind = EstimatorKind::lasso;
    return fit;
}

std::vector<double> default_lambda_grid(const Matrix& batch_x, const Vector& batch_y, int size) {
    check_batch(batch_x, batch_y);
    if (size < 1) throw DomainError("lambda grid: size must be >= 1");
    const double m = static_cast<double>(batch_x.rows());
    double lambda_max = (batch_x.transpose() * batch_y / m).cwiseAbs().maxCoeff();
    if (lambda_max <= 0.0) lambda_max = 1.0;  // identically zero response
    std::vector<double> grid(static_cast<std::size_t>(size));
    if (size == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double log_min_ratio = std::log(1e-3);
    for (int i = 0; i < size; ++i) {
        grid[static_cast<std::size_t>(i)] = lambda_max * std::exp(log_min_ratio * i / (size - 1));
    }
    return grid;
}

double select_lambda_cv(const Matrix& batch_x, const Vector& batch_y, PenaltyKind kind, int folds,
                        const std::vector<double>& grid, std::uint64_t seed) {
    check_batch(batch_x, batch_y);
    const int m = static_cast<int>(batch_x.rows());
    const int p = static_cast<int>(batch_x.cols());
    if (grid.empty()) throw DomainError("cv: empty lambda grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw DomainError("cv: grid values must be strictly positive");
        if (i > 0 && !(grid[i] < grid[i - 1])) throw DomainError("cv: grid must be strictly descending");
    }
    if (folds < 2) throw DomainError("cv: need at least 2 folds");
    if (folds > m) throw DomainError("cv: folds exceed batch size");

    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);

    std::vector<double> total_err(grid.size(), 0.0);
    int start = 0;
    for (int f = 0; f < folds; ++f) {
        const int size_f = m / folds + (f < m % folds ? 1 : 0);
        const int stop = start + size_f;
        const int m_tr = m - size_f;
        Matrix x_tr(m_tr, p), x_te(size_f, p);
        Vector y_tr(m_tr), y_te(size_f);
        int it = 0, ie = 0;
        for (int i = 0; i < m; ++i) {
            const int row = perm[static_cast<std::size_t>(i)];
            if (i >= start && i < stop) {
                x_te.row(ie) = batch_x.row(row);
                y_te(ie++) = batch_y(row);
            } else {
                x_tr.row(it) = batch_x.row(row);
                y_tr(it++) = batch_y(row);
            }
        }
        start = stop;

        const Matrix g = batch_gram(x_tr);
        const Vector c = x_tr.transpose() * y_tr / static_cast<double>(m_tr);
        if (kind == PenaltyKind::lasso) {
            Vector beta = Vector::Zero(p);  // warm start carried down the path
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                lasso_cd(g, c, grid[gi], 1e-8, 10000, beta);
                total_err[gi] += (y_te - x_te * beta).squaredNorm();
            }
        } else {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
            const Vector qc = eig.eigenvectors().transpose() * c;
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                const Vector beta =
                    eig.eigenvectors() * (qc.array() / (eig.eigenvalues().array() + grid[gi])).matrix();
                total_err[gi] += (y_te - x_te * beta).squaredNorm();
            }
        }
    }

    std::size_t best = 0;  // grid descends, so strict improvement keeps the larger lambda on ties
    for (std::size_t gi = 1; gi < grid.size(); ++gi) {
        if (total_err[gi] < total_err[best]) best = gi;
    }
    return grid[best];
}

}  // namespace gbcdc
