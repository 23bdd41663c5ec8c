#include "condlr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace condlr {

namespace {

void check_shape(bool ok, const char* what) {
    if (!ok) throw DimensionError(what);
}

} // namespace

Matrix::Matrix(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw DimensionError("matrix dimensions must be nonnegative");
    data.assign(static_cast<std::size_t>(r) * c, 0.0);
}

Matrix::Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (r <= 0 || c <= 0) throw DimensionError("matrix dimensions must be positive");
    if (data.size() != static_cast<std::size_t>(r) * c)
        throw DimensionError("matrix payload length does not match rows*cols");
    for (double x : data)
        if (!std::isfinite(x)) throw NumericalError("matrix entries must be finite");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(const Vector& d) {
    Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (int i = 0; i < m.rows; ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::gaussian(int r, int c, Rng& rng, double stddev) {
    Matrix m(r, c);
    for (double& x : m.data) x = stddev * rng.normal();
    return m;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_shape(a.cols == b.rows, "matmul: inner dimensions do not match");
    Matrix c(a.rows, b.cols);
    // ikj order keeps the B rows streaming; accumulation order is fixed.
    for (int i = 0; i < a.rows; ++i) {
        double* ci = &c.data[static_cast<std::size_t>(i) * c.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = &b.data[static_cast<std::size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    check_shape(a.same_shape(b), "matrix add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    check_shape(a.same_shape(b), "matrix sub: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& x : c.data) x *= s;
    return c;
}

void axpy(double s, const Matrix& a, Matrix& b) {
    check_shape(a.same_shape(b), "axpy: shape mismatch");
    for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] += s * a.data[i];
}

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double x : a.data) acc += x * x;
    return std::sqrt(acc);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.data) m = std::max(m, std::abs(x));
    return m;
}

double frobenius_dot(const Matrix& a, const Matrix& b) {
    check_shape(a.same_shape(b), "frobenius_dot: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double orthonormality_residual(const Matrix& q) {
    Matrix g = matmul(transpose(q), q);
    for (int i = 0; i < g.rows; ++i) g(i, i) -= 1.0;
    return frobenius_norm(g);
}

ThinQR thin_qr(const Matrix& a) {
    const int n = a.rows, k = a.cols;
    check_shape(n >= k && k >= 1, "thin_qr: requires rows >= cols >= 1");

    const double anorm = frobenius_norm(a);
    Matrix r = a;                 // n x k working copy, reduced in place
    std::vector<Vector> vs;       // Householder vectors
    vs.reserve(k);

    for (int j = 0; j < k; ++j) {
        // Build the reflector for column j below the diagonal.
        double sigma = 0.0;
        for (int i = j; i < n; ++i) sigma += r(i, j) * r(i, j);
        const double norm_x = std::sqrt(sigma);

        Vector v(static_cast<std::size_t>(n - j), 0.0);
        double vnorm2 = 0.0;
        if (norm_x > 0.0) {
            const double alpha = (r(j, j) >= 0.0) ? -norm_x : norm_x;
            v[0] = r(j, j) - alpha;
            for (int i = j + 1; i < n; ++i) v[i - j] = r(i, j);
            vnorm2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
            if (vnorm2 > 0.0) {
                // Apply I - 2 v v^T / (v^T v) to the trailing block.
                for (int c = j; c < k; ++c) {
                    double dot = 0.0;
                    for (int i = j; i < n; ++i) dot += v[i - j] * r(i, c);
                    const double f = 2.0 * dot / vnorm2;
                    for (int i = j; i < n; ++i) r(i, c) -= f * v[i - j];
                }
                r(j, j) = alpha;
                for (int i = j + 1; i < n; ++i) r(i, j) = 0.0;
            }
        }
        if (vnorm2 == 0.0) v.clear(); // column already reduced, no reflector
        vs.push_back(std::move(v));

        if (std::abs(r(j, j)) <= kRankTolerance * anorm) {
            std::ostringstream msg;
            msg << "thin_qr: numerically rank-deficient input (column " << j
                << ", |R[" << j << "][" << j << "]| = " << std::abs(r(j, j)) << ")";
            throw RankDeficientError(msg.str(), j);
        }
    }

    // Accumulate the thin Q by applying the reflectors to the first k identity columns.
    Matrix q(n, k);
    for (int j = 0; j < k; ++j) q(j, j) = 1.0;
    for (int j = k - 1; j >= 0; --j) {
        const Vector& v = vs[static_cast<std::size_t>(j)];
        if (v.empty()) continue;
        const double vnorm2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
        for (int c = 0; c < k; ++c) {
            double dot = 0.0;
            for (int i = j; i < n; ++i) dot += v[i - j] * q(i, c);
            const double f = 2.0 * dot / vnorm2;
            for (int i = j; i < n; ++i) q(i, c) -= f * v[i - j];
        }
    }

    // Sign convention: diag(R) >= 0 makes the factorization unique.
    ThinQR out;
    out.R = Matrix(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) out.R(i, j) = r(i, j);
    for (int i = 0; i < k; ++i) {
        if (out.R(i, i) < 0.0) {
            for (int j = i; j < k; ++j) out.R(i, j) = -out.R(i, j);
            for (int row = 0; row < n; ++row) q(row, i) = -q(row, i);
        }
    }
    out.Q = std::move(q);
    return out;
}

namespace {

// One-sided Jacobi on the columns of b (n x m, n >= m). On return the columns
// of b are mutually orthogonal and v holds the accumulated right rotations.
void jacobi_orthogonalize(Matrix& b, Matrix& v, double tol, int max_sweeps) {
    const int n = b.rows, m = b.cols;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0.0;
        for (int p = 0; p < m - 1; ++p) {
            for (int q = p + 1; q < m; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double bp = b(i, p), bq = b(i, q);
                    app += bp * bp;
                    aqq += bq * bq;
                    apq += bp * bq;
                }
                if (app == 0.0 || aqq == 0.0) continue;
                const double rel = std::abs(apq) / std::sqrt(app * aqq);
                worst = std::max(worst, rel);
                if (rel <= tol) continue;

                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < n; ++i) {
                    const double bp = b(i, p), bq = b(i, q);
                    b(i, p) = c * bp - s * bq;
                    b(i, q) = s * bp + c * bq;
                }
                for (int i = 0; i < m; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (worst <= tol) return;
    }
    std::ostringstream msg;
    msg << "svd: one-sided Jacobi did not converge within " << max_sweeps << " sweeps";
    throw NumericalError(msg.str());
}

SvdResult svd_tall(const Matrix& a) {
    const int n = a.rows, m = a.cols;
    Matrix b = a;
    Matrix v = Matrix::identity(m);
    jacobi_orthogonalize(b, v, 1e-14, 64);

    // Column norms are the singular values; sort nonincreasing.
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    Vector norms(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += b(i, j) * b(i, j);
        norms[static_cast<std::size_t>(j)] = std::sqrt(acc);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)]; });

    SvdResult out;
    out.sigma.resize(static_cast<std::size_t>(m));
    out.U = Matrix(n, m);
    out.V = Matrix(m, m);
    const double smax = norms[static_cast<std::size_t>(order[0])];
    for (int j = 0; j < m; ++j) {
        const int src = order[static_cast<std::size_t>(j)];
        const double s = norms[static_cast<std::size_t>(src)];
        out.sigma[static_cast<std::size_t>(j)] = s;
        for (int i = 0; i < m; ++i) out.V(i, j) = v(i, src);
        if (s > smax * 1e-300 && s > 0.0) {
            for (int i = 0; i < n; ++i) out.U(i, j) = b(i, src) / s;
        }
    }

    // Complete U to orthonormal columns where singular values vanished:
    // Gram-Schmidt canonical vectors against the columns built so far.
    for (int j = 0; j < m; ++j) {
        double cn = 0.0;
        for (int i = 0; i < n; ++i) cn += out.U(i, j) * out.U(i, j);
        if (cn > 0.5) continue;
        for (int cand = 0; cand < n; ++cand) {
            Vector w(static_cast<std::size_t>(n), 0.0);
            w[static_cast<std::size_t>(cand)] = 1.0;
            for (int c = 0; c < m; ++c) {
                if (c == j) continue;
                double d = 0.0;
                for (int i = 0; i < n; ++i) d += out.U(i, c) * w[static_cast<std::size_t>(i)];
                for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] -= d * out.U(i, c);
            }
            double wn = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
            if (wn > 1e-3) {
                for (int i = 0; i < n; ++i) out.U(i, j) = w[static_cast<std::size_t>(i)] / wn;
                break;
            }
        }
    }
    return out;
}

} // namespace

SvdResult svd(const Matrix& a) {
    check_shape(a.rows >= 1 && a.cols >= 1, "svd: empty matrix");
    for (double x : a.data)
        if (!std::isfinite(x)) throw NumericalError("svd: entries must be finite");
    if (a.rows >= a.cols) return svd_tall(a);
    SvdResult t = svd_tall(transpose(a));
    std::swap(t.U, t.V);
    return t;
}

Vector singular_values(const Matrix& a) { return svd(a).sigma; }

Cond2 cond2_from_sigma(const Vector& sigma) {
    if (sigma.empty()) throw DimensionError("cond2: empty spectrum");
    const double smax = sigma.front();
    if (smax <= 0.0) throw NumericalError("cond2: zero matrix has no condition number");
    const double threshold = kRankTolerance * smax;
    double smin = smax;
    bool deficient = false;
    for (double s : sigma) {
        if (s < threshold) {
            deficient = true;
        } else {
            smin = std::min(smin, s);
        }
    }
    return Cond2{smax / smin, deficient};
}

Cond2 cond2(const Matrix& a) { return cond2_from_sigma(svd(a).sigma); }

Matrix solve_right_upper(const Matrix& b, const Matrix& r) {
    check_shape(r.rows == r.cols && b.cols == r.rows, "solve_right_upper: shape mismatch");
    const int k = r.rows;
    Matrix x = b; // x * r = b, column j of x depends on columns < j
    for (int row = 0; row < b.rows; ++row) {
        for (int j = 0; j < k; ++j) {
            double acc = x(row, j);
            for (int i = 0; i < j; ++i) acc -= x(row, i) * r(i, j);
            x(row, j) = acc / r(j, j);
        }
    }
    return x;
}

Matrix solve_right_upper_transposed(const Matrix& b, const Matrix& r) {
    check_shape(r.rows == r.cols && b.cols == r.rows, "solve_right_upper_transposed: shape mismatch");
    const int k = r.rows;
    Matrix x = b; // x * r^T = b; r^T is lower triangular
    for (int row = 0; row < b.rows; ++row) {
        for (int j = k - 1; j >= 0; --j) {
            double acc = x(row, j);
            for (int i = j + 1; i < k; ++i) acc -= x(row, i) * r(j, i);
            x(row, j) = acc / r(j, j);
        }
    }
    return x;
}

Matrix cholesky(const Matrix& a) {
    check_shape(a.rows == a.cols, "cholesky: square matrix required");
    const int n = a.rows;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double acc = a(i, j);
            for (int k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            if (i == j) {
                if (acc <= 0.0) throw NumericalError("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(acc);
            } else {
                l(i, j) = acc / l(j, j);
            }
        }
    }
    return l;
}

Matrix solve_right_spd(const Matrix& b, const Matrix& l) {
    // x (L L^T) = b  =>  y L^T = b, then x L = y.
    const int k = l.rows;
    check_shape(b.cols == k, "solve_right_spd: shape mismatch");
    Matrix x = b;
    for (int row = 0; row < b.rows; ++row) {
        // y L^T = b: L^T upper triangular
        for (int j = 0; j < k; ++j) {
            double acc = x(row, j);
            for (int i = 0; i < j; ++i) acc -= x(row, i) * l(j, i);
            x(row, j) = acc / l(j, j);
        }
        // x L = y: L lower triangular
        for (int j = k - 1; j >= 0; --j) {
            double acc = x(row, j);
            for (int i = j + 1; i < k; ++i) acc -= x(row, i) * l(i, j);
            x(row, j) = acc / l(j, j);
        }
    }
    return x;
}

Matrix expm_pade6(const Matrix& a) {
    check_shape(a.rows == a.cols, "expm: square matrix required");
    const int n = a.rows;

    // Scaling so the Pade approximant stays in its accuracy region.
    double norm1 = 0.0;
    for (int j = 0; j < n; ++j) {
        double col = 0.0;
        for (int i = 0; i < n; ++i) col += std::abs(a(i, j));
        norm1 = std::max(norm1, col);
    }
    int squarings = 0;
    double scale = 1.0;
    const double theta = 0.25;
    while (norm1 * scale > theta && squarings < 64) {
        scale *= 0.5;
        ++squarings;
    }
    Matrix x = scale * a;

    // [6/6] Pade coefficients via the standard recurrence.
    constexpr int m = 6;
    double coeff[m + 1];
    coeff[0] = 1.0;
    for (int j = 0; j < m; ++j)
        coeff[j + 1] = coeff[j] * static_cast<double>(m - j) /
                       (static_cast<double>((2 * m - j)) * (j + 1));

    Matrix even = Matrix::identity(n); // sum of even-power terms
    Matrix odd(n, n);                  // sum of odd-power terms
    Matrix power = Matrix::identity(n);
    for (int j = 1; j <= m; ++j) {
        power = matmul(power, x);
        Matrix term = coeff[j] * power;
        if (j % 2 == 0) even = even + term;
        else odd = odd + term;
    }
    // exp(x) ~ (even - odd)^{-1} (even + odd); solve via Gaussian elimination.
    Matrix lhs = even - odd;
    Matrix rhs = even + odd;

    // Row-pivoted in-place solve lhs * y = rhs.
    const int nn = n;
    for (int col = 0; col < nn; ++col) {
        int piv = col;
        for (int i = col + 1; i < nn; ++i)
            if (std::abs(lhs(i, col)) > std::abs(lhs(piv, col))) piv = i;
        if (lhs(piv, col) == 0.0) throw NumericalError("expm: singular Pade denominator");
        if (piv != col) {
            for (int j = 0; j < nn; ++j) {
                std::swap(lhs(col, j), lhs(piv, j));
                std::swap(rhs(col, j), rhs(piv, j));
            }
        }
        const double d = lhs(col, col);
        for (int j = 0; j < nn; ++j) { lhs(col, j) /= d; rhs(col, j) /= d; }
        for (int i = 0; i < nn; ++i) {
            if (i == col) continue;
            const double f = lhs(i, col);
            if (f == 0.0) continue;
            for (int j = 0; j < nn; ++j) {
                lhs(i, j) -= f * lhs(col, j);
                rhs(i, j) -= f * rhs(col, j);
            }
        }
    }
    Matrix y = rhs;
    for (int s = 0; s < squarings; ++s) y = matmul(y, y);
    return y;
}

} // namespace condlr
