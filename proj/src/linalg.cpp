#include "mixloss/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mixloss {

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const Vec& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix matmul(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul: shape mismatch");
    Matrix out(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double xv = x(i, k);
            if (xv == 0.0) continue;
            for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += xv * y(k, j);
        }
    return out;
}

Matrix transpose(const Matrix& x) {
    Matrix out(x.cols, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
    return out;
}

double trace(const Matrix& x) {
    if (!x.square()) throw std::invalid_argument("trace: matrix not square");
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) s += x(i, i);
    return s;
}

double trace_of_product(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows || x.rows != y.cols)
        throw std::invalid_argument("trace_of_product: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < x.cols; ++k) s += x(i, k) * y(k, i);
    return s;
}

Matrix add(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("add: shape mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
    return out;
}

Matrix scale(const Matrix& x, double s) {
    Matrix out = x;
    for (double& v : out.a) v *= s;
    return out;
}

Vec matvec(const Matrix& x, const Vec& v) {
    if (x.cols != v.size()) throw std::invalid_argument("matvec: shape mismatch");
    Vec out(x.rows, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) s += x(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

double max_abs_asymmetry(const Matrix& x) {
    if (!x.square()) throw std::invalid_argument("max_abs_asymmetry: matrix not square");
    double m = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = i + 1; j < x.cols; ++j)
            m = std::max(m, std::abs(x(i, j) - x(j, i)));
    return m;
}

Matrix symmetrize(const Matrix& x) {
    if (!x.square()) throw std::invalid_argument("symmetrize: matrix not square");
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = 0.5 * (x(i, j) + x(j, i));
    return out;
}

void add_outer_product(Matrix& acc, const Vec& v, double weight) {
    if (acc.rows != v.size() || acc.cols != v.size())
        throw std::invalid_argument("add_outer_product: shape mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double wv = weight * v[i];
        if (wv == 0.0) continue;
        for (std::size_t j = 0; j < v.size(); ++j) acc(i, j) += wv * v[j];
    }
}

SymmetricEigen jacobi_eigen(const Matrix& sym, double tol, int max_sweeps) {
    if (!sym.square()) throw std::invalid_argument("jacobi_eigen: matrix not square");
    const std::size_t n = sym.rows;
    Matrix a = sym;
    Matrix v = Matrix::identity(n);

    double norm = 0.0;
    for (double x : a.a) norm = std::max(norm, std::abs(x));
    const double stop = tol * std::max(norm, 1e-300);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off <= stop) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= stop * 1e-3) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymmetricEigen out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);

    // Sort ascending, reordering eigenvector columns to match.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return out.values[i] < out.values[j]; });
    Vec sorted_vals(n);
    Matrix sorted_vecs(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        sorted_vals[j] = out.values[order[j]];
        for (std::size_t i = 0; i < n; ++i) sorted_vecs(i, j) = v(i, order[j]);
    }
    out.values = std::move(sorted_vals);
    out.vectors = std::move(sorted_vecs);
    return out;
}

Matrix psd_sqrt(const Matrix& sym, double psd_tolerance) {
    SymmetricEigen e = jacobi_eigen(sym);
    for (double w : e.values)
        if (w < -psd_tolerance)
            throw std::invalid_argument("psd_sqrt: matrix is not positive semidefinite (eigenvalue " +
                                        std::to_string(w) + ")");
    const std::size_t n = sym.rows;
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = std::sqrt(std::max(e.values[k], 0.0));
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) += w * e.vectors(i, k) * e.vectors(j, k);
    }
    return out;
}

double min_eigenvalue(const Matrix& sym) {
    SymmetricEigen e = jacobi_eigen(sym);
    return e.values.empty() ? 0.0 : e.values.front();
}

}  // namespace mixloss
