#pragma once

#include <doctest.h>

#include <Eigen/Dense>

#include "gbcdc/linalg.hpp"
#include "gbcdc/rng.hpp"

namespace testutil {

using gbcdc::Matrix;
using gbcdc::Rng;
using gbcdc::Vector;

inline Matrix random_matrix(Rng& rng, int rows, int cols, double sd = 1.0) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, sd);
    return m;
}

inline Vector random_vector(Rng& rng, int size, double sd = 1.0) {
    Vector v(size);
    for (int i = 0; i < size; ++i) v(i) = rng.normal(0.0, sd);
    return v;
}

/// Independent reference: intercept-augmented least squares via
/// column-pivoted QR. Returns (intercept, slopes...).
inline Vector qr_intercept_ls(const Matrix& covariates, const Vector& responses) {
    Matrix z(covariates.rows(), covariates.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(covariates.cols()) = covariates;
    return z.colPivHouseholderQr().solve(responses);
}

inline double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testutil
