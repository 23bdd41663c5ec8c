#pragma once

#include <vector>

#include "condlr/errors.hpp"
#include "condlr/rng.hpp"

namespace condlr {

using Vector = std::vector<double>;

// Dense row-major double matrix. The universal numeric carrier.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data; // row-major, length rows*cols

    Matrix() = default;
    Matrix(int r, int c); // zero-filled
    Matrix(int r, int c, std::vector<double> d); // validates length and finiteness

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix identity(int n);
    static Matrix diag(const Vector& d);
    static Matrix gaussian(int r, int c, Rng& rng, double stddev = 1.0);
};

Matrix transpose(const Matrix& a);

// C[i][j] = sum_k A[i][k] B[k][j]
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

// b += s*a
void axpy(double s, const Matrix& a, Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

// Frobenius inner product <a, b>.
double frobenius_dot(const Matrix& a, const Matrix& b);

// ||Q^T Q - I||_F
double orthonormality_residual(const Matrix& q);

// Thin QR factorization A = Q R, Q rows x k orthonormal, R k x k upper
// triangular with nonnegative diagonal (unique under that convention).
struct ThinQR {
    Matrix Q;
    Matrix R;
};

// Householder QR with a post-hoc diagonal sign fix. Requires rows >= cols and
// numerically full column rank (min |R_ii| > 1e-12 * ||A||_F); throws
// RankDeficientError with the offending column otherwise.
ThinQR thin_qr(const Matrix& a);

// Thin SVD A = U diag(sigma) V^T with k = min(rows, cols); sigma nonincreasing.
struct SvdResult {
    Matrix U;     // rows x k, orthonormal columns
    Vector sigma; // length k, nonincreasing, >= 0
    Matrix V;     // cols x k, orthonormal columns
};

// One-sided Jacobi SVD. Throws NumericalError (with the residual) if the
// sweep cap is exceeded.
SvdResult svd(const Matrix& a);

Vector singular_values(const Matrix& a);

// cond_2 = s_max / s_min. When A is numerically rank-deficient
// (s_min < 1e-12 * s_max) the smallest singular value above the threshold is
// used instead and the result is flagged.
struct Cond2 {
    double value = 1.0;
    bool rank_deficient = false;
};

Cond2 cond2(const Matrix& a);
Cond2 cond2_from_sigma(const Vector& sigma);

// Solve X R = B for X (R upper triangular k x k, B n x k).
Matrix solve_right_upper(const Matrix& b, const Matrix& r);
// Solve X R^T = B for X.
Matrix solve_right_upper_transposed(const Matrix& b, const Matrix& r);

// Cholesky factor L (lower) of a symmetric positive definite matrix.
Matrix cholesky(const Matrix& a);
// Solve X A = B with A = L L^T given the Cholesky factor L.
Matrix solve_right_spd(const Matrix& b, const Matrix& l);

// Matrix exponential by scaling-and-squaring with a [6/6] Pade approximant.
// Intended for the small skew-symmetric generators used in the verification
// harness.
Matrix expm_pade6(const Matrix& a);

// Relative rank-deficiency threshold shared across the library.
inline constexpr double kRankTolerance = 1e-12;

} // namespace condlr
