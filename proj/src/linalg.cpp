#include "gbcdc/linalg.hpp"

#include <cmath>
#include <string>

#include "gbcdc/errors.hpp"

namespace gbcdc {

double reciprocal_condition_sym(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const Vector& v = eig.eigenvalues();
    const double max_abs = v.cwiseAbs().maxCoeff();
    if (max_abs <= 0.0) return 0.0;
    return v.cwiseAbs().minCoeff() / max_abs;
}

Vector solve_sym_checked(const Matrix& a, const Vector& b, const char* context) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const Vector& lam = eig.eigenvalues();
    const double max_abs = lam.cwiseAbs().maxCoeff();
    if (max_abs <= 0.0 || lam.cwiseAbs().minCoeff() / max_abs < kRcondCap) {
        throw SingularGramError(std::string(context) + ": matrix numerically singular (rcond below 1e-12)");
    }
    return eig.eigenvectors() * (eig.eigenvectors().transpose() * b).cwiseQuotient(lam);
}

Matrix invert_sym_checked(const Matrix& a, const char* context) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const Vector& lam = eig.eigenvalues();
    const double max_abs = lam.cwiseAbs().maxCoeff();
    if (max_abs <= 0.0 || lam.cwiseAbs().minCoeff() / max_abs < kRcondCap) {
        throw SingularGramError(std::string(context) + ": matrix numerically singular (rcond below 1e-12)");
    }
    return eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

bool is_symmetric(const Matrix& a, double rel_tol) {
    if (a.rows() != a.cols()) return false;
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

}  // namespace gbcdc
