#pragma once

// Test-only reference implementations, deliberately independent of the
// library's code paths: a naive triple-loop product, a two-sided Jacobi
// eigensolver for symmetric matrices, and finite-difference helpers.

#include <cmath>
#include <functional>
#include <vector>

#include "condlr/linalg.hpp"

namespace oracles {

inline condlr::Matrix matmul_triple_loop(const condlr::Matrix& a, const condlr::Matrix& b) {
    condlr::Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

// Eigenvalues of a symmetric matrix by the classical two-sided Jacobi
// rotation method. Returns eigenvalues sorted descending.
inline std::vector<double> sym_eigenvalues_jacobi(condlr::Matrix a) {
    const int n = a.rows;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-28) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

// Singular values of A as sqrt of the eigenvalues of A^T A (descending).
inline std::vector<double> singular_values_via_gram(const condlr::Matrix& a) {
    condlr::Matrix gram = matmul_triple_loop(condlr::transpose(a), a);
    std::vector<double> ev = sym_eigenvalues_jacobi(gram);
    for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
    return ev;
}

// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x0, double h = 1e-5) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor_val = 1e-9) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_val});
}

} // namespace oracles
