#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xvabsde {

/// Dense row-major matrix; market dimensions stay small (a few assets), so
/// plain O(n^3) routines are used everywhere.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat scalar(double v) {
        Mat m(1, 1);
        m(0, 0) = v;
        return m;
    }
};

/// Solves the square system a x = b by Gaussian elimination with partial
/// pivoting. Throws NumericError when the matrix is numerically singular.
std::vector<double> solve_dense(Mat a, std::vector<double> b);

/// Smallest singular value (two-sided Jacobi on a^T a).
double min_singular_value(const Mat& a);

/// Eigenvalues of a symmetric matrix, ascending (cyclic Jacobi).
std::vector<double> symmetric_eigenvalues(Mat a);

/// Solves the SPD system g x = rhs via Cholesky. Returns false (leaving x
/// untouched) when g is not positive definite to working precision.
bool cholesky_solve(const Mat& g, std::span<const double> rhs, std::vector<double>& x);

double dot(std::span<const double> a, std::span<const double> b);

} // namespace xvabsde
