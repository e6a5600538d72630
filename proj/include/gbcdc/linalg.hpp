#pragma once

#include <Eigen/Dense>

namespace gbcdc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Reciprocal condition number threshold below which symmetric systems are
/// treated as rank deficient / singular throughout the library.
inline constexpr double kRcondCap = 1e-12;

/// Reciprocal condition number of a symmetric matrix, min|eig| / max|eig|.
/// Returns 0 for the zero matrix.
double reciprocal_condition_sym(const Matrix& a);

/// Solves a x = b for symmetric a after checking the reciprocal condition.
/// Throws the exception built by `on_singular` when below the cap.
Vector solve_sym_checked(const Matrix& a, const Vector& b, const char* context);

/// Inverse of a symmetric matrix with the same conditioning guard.
Matrix invert_sym_checked(const Matrix& a, const char* context);

/// True when `a` is symmetric to the given relative tolerance.
bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);

}  // namespace gbcdc
