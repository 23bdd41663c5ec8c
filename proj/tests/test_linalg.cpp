#include <doctest.h>

#include "condlr/linalg.hpp"
#include "oracles.hpp"

using namespace condlr;

TEST_CASE("matmul identity and permutation") {
    Rng rng(7);
    Matrix a = Matrix::gaussian(3, 5, rng);
    Matrix res = matmul(Matrix::identity(3), a);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(res.data[i] == a.data[i]);

    Matrix left(2, 2, {1, 2, 3, 4});
    Matrix perm(2, 2, {0, 1, 1, 0});
    Matrix prod = matmul(left, perm);
    CHECK(prod(0, 0) == 2);
    CHECK(prod(0, 1) == 1);
    CHECK(prod(1, 0) == 4);
    CHECK(prod(1, 1) == 3);
}

TEST_CASE("matmul matches the triple-loop oracle") {
    Rng rng(11);
    Matrix a = Matrix::gaussian(5, 4, rng);
    Matrix b = Matrix::gaussian(4, 3, rng);
    Matrix fast = matmul(a, b);
    Matrix ref = oracles::matmul_triple_loop(a, b);
    CHECK(max_abs(fast - ref) < 1e-14);

    CHECK_THROWS_AS(matmul(a, Matrix::gaussian(5, 2, rng)), DimensionError);
}

TEST_CASE("matrix construction validates payload") {
    CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::nan("")}), NumericalError);
}

TEST_CASE("thin_qr on canonical orthonormal input is exact") {
    Matrix a(3, 2, {1, 0, 0, 1, 0, 0});
    ThinQR qr = thin_qr(a);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(qr.Q.data[i] == a.data[i]);
    CHECK(qr.R(0, 0) == 1.0);
    CHECK(qr.R(1, 1) == 1.0);
    CHECK(qr.R(0, 1) == 0.0);
}

TEST_CASE("thin_qr column scaling example") {
    Matrix a(3, 2, {2, 0, 0, 3, 0, 0});
    ThinQR qr = thin_qr(a);
    CHECK(qr.Q(0, 0) == doctest::Approx(1.0));
    CHECK(qr.Q(1, 1) == doctest::Approx(1.0));
    CHECK(qr.R(0, 0) == doctest::Approx(2.0));
    CHECK(qr.R(1, 1) == doctest::Approx(3.0));
    CHECK(qr.R(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("thin_qr reconstruction and orthonormality residuals") {
    Rng rng(3);
    Matrix a = Matrix::gaussian(6, 3, rng);
    ThinQR qr = thin_qr(a);
    CHECK(orthonormality_residual(qr.Q) <= 1e-10 * 3);
    CHECK(frobenius_norm(matmul(qr.Q, qr.R) - a) <= 1e-10 * frobenius_norm(a));
    for (int i = 0; i < qr.R.rows; ++i) {
        CHECK(qr.R(i, i) >= 0.0);
        for (int j = 0; j < i; ++j) CHECK(qr.R(i, j) == 0.0);
    }
}

TEST_CASE("thin_qr projection idempotence") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a = Matrix::gaussian(8, 4, rng);
        Matrix q1 = thin_qr(a).Q;
        Matrix q2 = thin_qr(q1).Q;
        CHECK(max_abs(q2 - q1) < 1e-13);
    }
}

TEST_CASE("thin_qr reports the offending column on rank deficiency") {
    Matrix a(4, 3);
    for (int i = 0; i < 4; ++i) {
        a(i, 0) = i + 1.0;
        a(i, 1) = 2.0 * (i + 1.0); // multiple of column 0
        a(i, 2) = 1.0 / (i + 1.0);
    }
    try {
        thin_qr(a);
        FAIL("expected RankDeficientError");
    } catch (const RankDeficientError& e) {
        CHECK(e.column == 1);
    }
}

TEST_CASE("svd diagonal and orthogonal cases") {
    SvdResult dec = svd(Matrix(2, 2, {3, 0, 0, 1}));
    CHECK(dec.sigma[0] == doctest::Approx(3.0));
    CHECK(dec.sigma[1] == doctest::Approx(1.0));

    Rng rng(5);
    Matrix q = thin_qr(Matrix::gaussian(5, 5, rng)).Q;
    for (double s : svd(q).sigma) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd singular values match the Gram eigenvalue oracle") {
    Rng rng(23);
    Matrix a = Matrix::gaussian(4, 4, rng);
    SvdResult dec = svd(a);
    std::vector<double> ref = oracles::singular_values_via_gram(a);
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(std::abs(dec.sigma[i] - ref[i]) < 1e-9);
}

TEST_CASE("svd reconstruction over random square sizes") {
    Rng rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(63));
        Matrix a = Matrix::gaussian(n, n, rng);
        SvdResult dec = svd(a);
        Matrix us = dec.U;
        for (int i = 0; i < us.rows; ++i)
            for (int j = 0; j < us.cols; ++j) us(i, j) *= dec.sigma[static_cast<std::size_t>(j)];
        Matrix rec = matmul(us, transpose(dec.V));
        CHECK(frobenius_norm(rec - a) <= 1e-8 * frobenius_norm(a));
        for (std::size_t i = 1; i < dec.sigma.size(); ++i)
            CHECK(dec.sigma[i] <= dec.sigma[i - 1]);
    }
}

TEST_CASE("svd of a rectangular wide matrix") {
    Rng rng(31);
    Matrix a = Matrix::gaussian(3, 7, rng);
    SvdResult dec = svd(a);
    CHECK(dec.U.rows == 3);
    CHECK(dec.V.rows == 7);
    CHECK(dec.sigma.size() == 3);
    Matrix us = dec.U;
    for (int i = 0; i < us.rows; ++i)
        for (int j = 0; j < us.cols; ++j) us(i, j) *= dec.sigma[static_cast<std::size_t>(j)];
    CHECK(frobenius_norm(matmul(us, transpose(dec.V)) - a) <= 1e-10 * frobenius_norm(a));
}

TEST_CASE("cond2 on the worked examples") {
    CHECK(cond2(Matrix(2, 2, {3, 0, 0, 1})).value == doctest::Approx(3.0));

    Rng rng(41);
    Matrix q = thin_qr(Matrix::gaussian(6, 4, rng)).Q;
    CHECK(cond2(q).value == doctest::Approx(1.0).epsilon(1e-10));

    // U diag(1.1, 0.9) V^T through random rotations.
    Matrix u = thin_qr(Matrix::gaussian(5, 2, rng)).Q;
    Matrix v = thin_qr(Matrix::gaussian(4, 2, rng)).Q;
    Matrix s = Matrix::diag({1.1, 0.9});
    Matrix w = matmul(matmul(u, s), transpose(v));
    CHECK(cond2(w).value == doctest::Approx(1.1 / 0.9).epsilon(1e-10));
}

TEST_CASE("cond2 scaling invariance and zero-matrix error") {
    Rng rng(43);
    Matrix q = thin_qr(Matrix::gaussian(5, 3, rng)).Q;
    for (double c : {0.02, 1.0, 317.0}) {
        CHECK(cond2(c * q).value == doctest::Approx(1.0).epsilon(1e-10));
        Matrix w = Matrix::gaussian(4, 4, rng);
        CHECK(cond2(c * w).value == doctest::Approx(cond2(w).value).epsilon(1e-9));
    }
    CHECK_THROWS_AS(cond2(Matrix(3, 3)), NumericalError);
}

TEST_CASE("cond2 flags numerically rank-deficient input") {
    Matrix a = Matrix::diag({1.0, 0.5, 1e-15});
    Cond2 c = cond2(a);
    CHECK(c.rank_deficient);
    CHECK(c.value == doctest::Approx(2.0));
}

TEST_CASE("triangular and spd solves invert the products") {
    Rng rng(47);
    Matrix s = Matrix::gaussian(4, 4, rng);
    for (int i = 0; i < 4; ++i) s(i, i) += 4.0;
    Matrix r = thin_qr(s).R;
    Matrix b = Matrix::gaussian(6, 4, rng);
    CHECK(max_abs(matmul(solve_right_upper(b, r), r) - b) < 1e-10);
    CHECK(max_abs(matmul(solve_right_upper_transposed(b, r), transpose(r)) - b) < 1e-10);

    Matrix spd = matmul(s, transpose(s));
    Matrix l = cholesky(spd);
    CHECK(max_abs(matmul(l, transpose(l)) - spd) < 1e-8);
    CHECK(max_abs(matmul(solve_right_spd(b, l), spd) - b) < 1e-7);
}

TEST_CASE("expm matches the Taylor series on small generators") {
    Rng rng(53);
    Matrix a = Matrix::gaussian(5, 5, rng, 0.2);
    Matrix e = expm_pade6(a);

    Matrix series = Matrix::identity(5);
    Matrix term = Matrix::identity(5);
    for (int k = 1; k <= 30; ++k) {
        term = (1.0 / k) * matmul(term, a);
        series = series + term;
    }
    CHECK(max_abs(e - series) < 1e-12);

    // exp of skew is orthogonal.
    Matrix skew(4, 4);
    Matrix g = Matrix::gaussian(4, 4, rng);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) skew(i, j) = 0.5 * (g(i, j) - g(j, i));
    Matrix rot = expm_pade6(skew);
    CHECK(orthonormality_residual(rot) < 1e-12);
}
