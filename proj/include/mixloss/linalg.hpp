#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mixloss {

using Vec = std::vector<double>;

bool all_finite(const Vec& v);
double dot(const Vec& a, const Vec& b);

// Dense row-major matrix. Sized for desk-scale work (parameter counts in
// the hundreds); no attempt at blocking or vectorization.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Matrix identity(std::size_t n);
    static Matrix diagonal(const Vec& d);

    bool square() const { return rows == cols; }
};

Matrix matmul(const Matrix& x, const Matrix& y);
Matrix transpose(const Matrix& x);
double trace(const Matrix& x);
double trace_of_product(const Matrix& x, const Matrix& y);  // Tr(XY) without forming XY
Matrix add(const Matrix& x, const Matrix& y);
Matrix scale(const Matrix& x, double s);
Vec matvec(const Matrix& x, const Vec& v);
double max_abs_asymmetry(const Matrix& x);
Matrix symmetrize(const Matrix& x);
void add_outer_product(Matrix& acc, const Vec& v, double weight);

// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
// Returns eigenvalues (ascending) and the orthogonal matrix of column
// eigenvectors: A = V diag(w) V^T.
struct SymmetricEigen {
    Vec values;
    Matrix vectors;
};
SymmetricEigen jacobi_eigen(const Matrix& sym, double tol = 1e-13, int max_sweeps = 100);

// Symmetric PSD square root via eigendecomposition. Eigenvalues below zero
// are clipped at 0; values below -psd_tolerance are rejected.
Matrix psd_sqrt(const Matrix& sym, double psd_tolerance = 1e-8);

double min_eigenvalue(const Matrix& sym);

}  // namespace mixloss
