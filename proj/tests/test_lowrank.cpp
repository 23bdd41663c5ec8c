#include <doctest.h>

#include <cmath>

#include "condlr/lowrank.hpp"
#include "oracles.hpp"

using namespace condlr;

namespace {

// Rank-r target with spectrum inside its own tau-band, for quadratic-loss
// convergence tests: L(W) = 0.5 ||W - A||_F^2, grad = W - A.
struct QuadraticTarget {
    Matrix A;
    double loss(const Matrix& w) const {
        Matrix d = w - A;
        const double n = frobenius_norm(d);
        return 0.5 * n * n;
    }
    Matrix grad(const Matrix& w) const { return w - A; }
};

QuadraticTarget make_target(int n, int m, int r, Rng& rng) {
    Matrix u = thin_qr(Matrix::gaussian(n, r, rng)).Q;
    Matrix v = thin_qr(Matrix::gaussian(m, r, rng)).Q;
    Vector sig(static_cast<std::size_t>(r));
    for (int j = 0; j < r; ++j) sig[static_cast<std::size_t>(j)] = 1.1 - 0.2 * j / std::max(1, r - 1);
    return QuadraticTarget{matmul(matmul(u, Matrix::diag(sig)), transpose(v))};
}

FactorizedLayer layer_from_truncation(const Matrix& a, int r, double tau) {
    SvdResult dec = svd(a);
    FactorizedLayer layer;
    layer.U = Matrix(a.rows, r);
    layer.V = Matrix(a.cols, r);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < r; ++j) layer.U(i, j) = dec.U(i, j);
    for (int i = 0; i < a.cols; ++i)
        for (int j = 0; j < r; ++j) layer.V(i, j) = dec.V(i, j);
    layer.S = Matrix::diag(Vector(dec.sigma.begin(), dec.sigma.begin() + r));
    layer.tau = tau;
    establish_band(layer, TrainVariant::CondLR);
    return layer;
}

Matrix materialize(const FactorizedLayer& l) {
    return matmul(matmul(l.U, l.S), transpose(l.V));
}

} // namespace

TEST_CASE("select_rank worked examples") {
    CHECK(select_rank(100, 100, 0.5) == 22);
    CHECK(select_rank(784, 256, 0.8) == 37);
    CHECK_THROWS_AS(select_rank(10, 10, 0.99), DimensionError);
}

TEST_CASE("select_rank meets the budget exactly") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 20 + static_cast<int>(rng.below(500));
        const int m = 20 + static_cast<int>(rng.below(500));
        const double alpha = 0.3 + 0.6 * rng.uniform();
        int r;
        try {
            r = select_rank(n, m, alpha);
        } catch (const DimensionError&) {
            continue;
        }
        const double dense = static_cast<double>(n) * m;
        const double achieved = 1.0 - r * (static_cast<double>(n) + m + r) / dense;
        CHECK(achieved >= alpha);
        if (r + 1 <= std::min(n, m)) {
            const double next = 1.0 - (r + 1.0) * (n + m + r + 1.0) / dense;
            CHECK(next < alpha);
        }
    }
}

TEST_CASE("init_factorized exp_decay spectrum is powers of two") {
    Rng rng(5);
    FactorizedLayer layer = init_factorized(12, 9, 4, InitScheme::ExpDecay, rng);
    Vector sig = singular_values(layer.S);
    CHECK(sig[0] == doctest::Approx(1.0));
    CHECK(sig[1] == doctest::Approx(0.5));
    CHECK(sig[2] == doctest::Approx(0.25));
    CHECK(sig[3] == doctest::Approx(0.125));
}

TEST_CASE("init_factorized factors are orthonormal for both schemes") {
    for (InitScheme scheme : {InitScheme::SvdOfGaussian, InitScheme::ExpDecay}) {
        Rng rng(7);
        FactorizedLayer layer = init_factorized(15, 10, 5, scheme, rng);
        CHECK(orthonormality_residual(layer.U) <= 1e-10);
        CHECK(orthonormality_residual(layer.V) <= 1e-10);
    }
}

TEST_CASE("svd_of_gaussian init is the best rank-r approximation") {
    // Redraw the same Gaussian stream to recover W0, then compare the
    // truncation error against the tail of the Gram-oracle spectrum.
    const int n = 10, m = 8, r = 3;
    Rng rng_init(11);
    FactorizedLayer layer = init_factorized(n, m, r, InitScheme::SvdOfGaussian, rng_init);
    Rng rng_replay(11);
    Matrix w0 = Matrix::gaussian(n, m, rng_replay, std::sqrt(2.0 / n));

    std::vector<double> spectrum = oracles::singular_values_via_gram(w0);
    double tail = 0.0;
    for (std::size_t k = r; k < spectrum.size(); ++k) tail += spectrum[k] * spectrum[k];

    Matrix diff = w0 - materialize(layer);
    const double err2 = frobenius_norm(diff) * frobenius_norm(diff);
    CHECK(err2 == doctest::Approx(tail).epsilon(1e-8));
}

TEST_CASE("factor_gradients zero case and shapes") {
    Rng rng(13);
    FactorizedLayer layer = init_factorized(7, 6, 3, InitScheme::SvdOfGaussian, rng);
    FactorGradients fg = factor_gradients(Matrix(7, 6), layer);
    CHECK(max_abs(fg.U) == 0.0);
    CHECK(max_abs(fg.S) == 0.0);
    CHECK(max_abs(fg.V) == 0.0);
    CHECK_THROWS_AS(factor_gradients(Matrix(6, 7), layer), DimensionError);
}

TEST_CASE("factor_gradients match finite differences of the quadratic loss") {
    Rng rng(17);
    QuadraticTarget target = make_target(7, 6, 3, rng);
    FactorizedLayer layer = init_factorized(7, 6, 3, InitScheme::SvdOfGaussian, rng);
    Matrix w = materialize(layer);
    FactorGradients fg = factor_gradients(target.grad(w), layer);

    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double fd = oracles::central_diff([&](double v) {
                FactorizedLayer p = layer;
                p.S(i, j) = v;
                return target.loss(materialize(p));
            }, layer.S(i, j));
            CHECK(oracles::rel_err(fg.S(i, j), fd, 1e-6) < 1e-5);
        }
    }
    for (int i = 0; i < layer.U.rows; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double fd = oracles::central_diff([&](double v) {
                FactorizedLayer p = layer;
                p.U(i, j) = v;
                return target.loss(materialize(p));
            }, layer.U(i, j));
            CHECK(oracles::rel_err(fg.U(i, j), fd, 1e-6) < 1e-5);
        }
    }
    for (int i = 0; i < layer.V.rows; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double fd = oracles::central_diff([&](double v) {
                FactorizedLayer p = layer;
                p.V(i, j) = v;
                return target.loss(materialize(p));
            }, layer.V(i, j));
            CHECK(oracles::rel_err(fg.V(i, j), fd, 1e-6) < 1e-5);
        }
    }
}

TEST_CASE("riemannian gradient vanishes for in-range gradU") {
    Rng rng(19);
    FactorizedLayer layer = init_factorized(8, 6, 3, InitScheme::SvdOfGaussian, rng);
    FactorGradients fg;
    fg.U = matmul(layer.U, Matrix::gaussian(3, 3, rng)); // in the range of U
    fg.V = Matrix(6, 3);
    fg.S = Matrix(3, 3);
    RiemannianGradients rg = riemannian_gradients(fg, layer);
    CHECK(max_abs(rg.G1) < 1e-12);
}

TEST_CASE("riemannian gradient scalar case S = s I") {
    Rng rng(23);
    const double s = 1.7;
    FactorizedLayer layer = init_factorized(8, 6, 3, InitScheme::SvdOfGaussian, rng);
    layer.S = s * Matrix::identity(3);
    layer.s_band = s;

    // A direction orthogonal to the range of U.
    Matrix raw = Matrix::gaussian(8, 3, rng);
    Matrix perp = raw - matmul(layer.U, matmul(transpose(layer.U), raw));
    FactorGradients fg;
    fg.U = perp;
    fg.V = Matrix(6, 3);
    fg.S = Matrix(3, 3);

    RiemannianGradients rg = riemannian_gradients(fg, layer);
    CHECK(max_abs(rg.G1 - (1.0 / (s * s)) * perp) < 1e-12);

    RiemannianGradients rg_scalar = riemannian_gradients(fg, layer, s);
    CHECK(max_abs(rg_scalar.G1 - rg.G1) < 1e-12);
}

TEST_CASE("riemannian gradients reproduce the tangent-space projection") {
    Rng rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        FactorizedLayer layer = init_factorized(9, 7, 3, InitScheme::SvdOfGaussian, rng);
        Matrix g = Matrix::gaussian(9, 7, rng);
        FactorGradients fg = factor_gradients(g, layer);
        RiemannianGradients rg = riemannian_gradients(fg, layer);

        Matrix assembled = matmul(matmul(layer.U, rg.G3), transpose(layer.V));
        assembled = assembled + matmul(matmul(rg.G1, layer.S), transpose(layer.V));
        assembled = assembled + matmul(matmul(layer.U, layer.S), transpose(rg.G2));

        // Explicit projector P_W(G) = U U^T G + G V V^T - U U^T G V V^T.
        Matrix uutg = matmul(layer.U, matmul(transpose(layer.U), g));
        Matrix gvvt = matmul(matmul(g, layer.V), transpose(layer.V));
        Matrix uutgvvt = matmul(layer.U, matmul(matmul(matmul(transpose(layer.U), g), layer.V),
                                                transpose(layer.V)));
        Matrix projected = uutg + gvvt - uutgvvt;
        CHECK(frobenius_norm(assembled - projected) <= 1e-10 * std::max(1.0, frobenius_norm(projected)));
    }
}

TEST_CASE("riemannian gradients reject singular S unless ridge is allowed") {
    Rng rng(31);
    FactorizedLayer layer = init_factorized(8, 6, 3, InitScheme::ExpDecay, rng);
    layer.S(0, 0) = 1.0;
    layer.S(1, 1) = 1e-16;
    layer.S(2, 2) = 1e-16;
    FactorGradients fg;
    fg.U = Matrix::gaussian(8, 3, rng);
    fg.V = Matrix::gaussian(6, 3, rng);
    fg.S = Matrix::gaussian(3, 3, rng);
    CHECK_THROWS_AS(riemannian_gradients(fg, layer), NumericalError);
    RiemannianGradients rg = riemannian_gradients(fg, layer, std::nullopt, /*ridge=*/true);
    CHECK(rg.ridge_used);
    for (double x : rg.G1.data) CHECK(std::isfinite(x));
}

TEST_CASE("sigma_band_project worked example tau = 0.5") {
    Rng rng(37);
    Matrix p = thin_qr(Matrix::gaussian(3, 3, rng)).Q;
    Matrix q = thin_qr(Matrix::gaussian(3, 3, rng)).Q;
    Matrix s = matmul(matmul(p, Matrix::diag({2.0, 1.0, 0.5})), transpose(q));

    BandProjection proj = sigma_band_project(s, 0.5);
    CHECK(proj.s == doctest::Approx(1.3228756555322954).epsilon(1e-12));
    CHECK(proj.eps == doctest::Approx(0.26457513110645906).epsilon(1e-12));
    Vector sig = singular_values(proj.S);
    CHECK(sig[0] == doctest::Approx(1.5874507866387544).epsilon(1e-10));
    CHECK(sig[1] == doctest::Approx(1.0583005244258363).epsilon(1e-10));
    CHECK(sig[2] == doctest::Approx(1.0583005244258363).epsilon(1e-10));
    CHECK(cond2(proj.S).value == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("sigma_band_project tau = 0 collapses the spectrum") {
    Rng rng(41);
    Matrix s = Matrix::gaussian(4, 4, rng);
    BandProjection proj = sigma_band_project(s, 0.0);
    Vector sig = singular_values(proj.S);
    for (double v : sig) CHECK(v == doctest::Approx(proj.s).epsilon(1e-10));
    CHECK(cond2(proj.S).value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sigma_band_project fixed point on scaled orthogonal input") {
    Rng rng(43);
    const double c = 2.4;
    Matrix q = thin_qr(Matrix::gaussian(3, 3, rng)).Q;
    Matrix s = c * q;
    BandProjection proj = sigma_band_project(s, 0.3);
    CHECK(proj.s == doctest::Approx(c).epsilon(1e-12));
    CHECK(max_abs(proj.S - s) < 1e-10);
    CHECK_THROWS_AS(sigma_band_project(Matrix(3, 3), 0.1), NumericalError);
}

TEST_CASE("stiefel_scale_project examples") {
    Matrix s3 = 3.0 * Matrix::identity(4);
    CHECK(max_abs(stiefel_scale_project(s3) - s3) < 1e-12);

    Matrix d = Matrix::diag({2.0, 1.0});
    Matrix proj = stiefel_scale_project(d);
    const double s = std::sqrt(2.5);
    CHECK(proj(0, 0) == doctest::Approx(s).epsilon(1e-12));
    CHECK(proj(1, 1) == doctest::Approx(s).epsilon(1e-12));
    CHECK(std::abs(proj(0, 1)) < 1e-14);

    Rng rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix m = Matrix::gaussian(4, 4, rng);
        CHECK(cond2(stiefel_scale_project(m)).value == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("band and stiefel projections agree on spectra at tau = 0") {
    Rng rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix s = Matrix::gaussian(5, 5, rng);
        Vector a = singular_values(sigma_band_project(s, 0.0).S);
        Vector b = singular_values(stiefel_scale_project(s));
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
    }
}

TEST_CASE("condlr_step fixed point at zero gradient") {
    Rng rng(59);
    FactorizedLayer layer = init_factorized(8, 6, 3, InitScheme::SvdOfGaussian, rng);
    layer.tau = 0.4;
    establish_band(layer, TrainVariant::CondLR);
    FactorizedLayer before = layer;
    OptState opt(0.1, 0.0);
    condlr_step(layer, Matrix(8, 6), opt, TrainVariant::CondLR);
    CHECK(max_abs(layer.U - before.U) < 1e-12);
    CHECK(max_abs(layer.V - before.V) < 1e-12);
    CHECK(max_abs(layer.S - before.S) < 1e-10);
}

TEST_CASE("condlr_step keeps every invariant when tau = 0.1") {
    Rng rng(61);
    QuadraticTarget target = make_target(10, 8, 3, rng);
    FactorizedLayer layer = init_factorized(10, 8, 3, InitScheme::SvdOfGaussian, rng);
    layer.tau = 0.1;
    establish_band(layer, TrainVariant::CondLR);
    OptState opt(0.1, 0.3);

    for (int step = 0; step < 25; ++step) {
        condlr_step(layer, target.grad(materialize(layer)), opt, TrainVariant::CondLR);
        const int r = layer.rank();
        CHECK(orthonormality_residual(layer.U) <= 1e-8 * r);
        CHECK(orthonormality_residual(layer.V) <= 1e-8 * r);
        Vector sig = singular_values(layer.S);
        for (double v : sig) {
            CHECK(v >= layer.s_band - layer.eps_band - 1e-10);
            CHECK(v <= layer.s_band + layer.eps_band + 1e-10);
        }
        CHECK(layer.eps_band ==
              doctest::Approx(layer.tau * layer.s_band / (2.0 + layer.tau)).epsilon(1e-12));
        CHECK(sig.front() / sig.back() <= 1.1 + 1e-10);

        // Singular values of the assembled W equal those of S.
        Vector wsig = singular_values(materialize(layer));
        for (std::size_t i = 0; i < sig.size(); ++i)
            CHECK(std::abs(wsig[i] - sig[i]) <= 1e-8 * std::max(1.0, sig[i]));
        CHECK(cond2(materialize(layer)).value <= 1.1 + 1e-8);
    }
}

TEST_CASE("condlr_step converges on the quadratic oracle") {
    Rng rng(67);
    QuadraticTarget target = make_target(10, 8, 3, rng);
    FactorizedLayer layer = layer_from_truncation(
        target.A + 0.05 * Matrix::gaussian(10, 8, rng), 3, 0.5);
    OptState opt(0.2, 0.0);

    double prev = target.loss(materialize(layer));
    for (int step = 0; step < 50; ++step) {
        condlr_step(layer, target.grad(materialize(layer)), opt, TrainVariant::CondLR);
        const double cur = target.loss(materialize(layer));
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK(frobenius_norm(materialize(layer) - target.A) < 1e-3);
}

TEST_CASE("descent up to the band-projection perturbation") {
    Rng rng(71);
    QuadraticTarget target = make_target(9, 7, 3, rng);
    FactorizedLayer layer = layer_from_truncation(
        target.A + 0.3 * Matrix::gaussian(9, 7, rng), 3, 0.2);
    OptState opt(0.05, 0.0);

    for (int step = 0; step < 30; ++step) {
        const double before = target.loss(materialize(layer));
        StepReport rep = condlr_step(layer, target.grad(materialize(layer)), opt, TrainVariant::CondLR);
        const double after = target.loss(materialize(layer));
        const double allowance =
            rep.band_shift * (std::sqrt(2.0 * before) + rep.band_shift) + 1e-12;
        CHECK(after <= before + allowance);
    }
}

TEST_CASE("unit variant pins the spectrum to one") {
    Rng rng(73);
    QuadraticTarget target = make_target(8, 6, 3, rng);
    FactorizedLayer layer = init_factorized(8, 6, 3, InitScheme::SvdOfGaussian, rng);
    establish_band(layer, TrainVariant::Unit);
    OptState opt(0.05, 0.0);
    for (int step = 0; step < 5; ++step) {
        condlr_step(layer, target.grad(materialize(layer)), opt, TrainVariant::Unit);
        Vector sig = singular_values(layer.S);
        for (double v : sig) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(layer.s_band == 1.0);
    }
}

TEST_CASE("parameter accounting") {
    Rng rng(79);
    FactorizedLayer f = init_factorized(20, 15, 4, InitScheme::SvdOfGaussian, rng);
    f.bias = Vector(20, 0.0);
    Layer lf = f;
    CHECK(layer_param_count(lf) == 4 * (20 + 15 + 4) + 20);
    CHECK(layer_dense_param_count(lf) == 20 * 15 + 20);

    TwoFactorLayer t = init_two_factor(20, 15, 4, InitScheme::SvdOfGaussian, rng);
    Layer lt = t;
    CHECK(layer_param_count(lt) == 4 * (20 + 15));
}

TEST_CASE("projected_sgd step lands on the Stiefel set") {
    Rng rng(83);
    OptState opt(0.1, 0.0);
    Matrix tall = Matrix::gaussian(9, 5, rng);
    projected_sgd_step(tall, Matrix::gaussian(9, 5, rng), opt);
    CHECK(cond2(tall).value == doctest::Approx(1.0).epsilon(1e-8));

    OptState opt2(0.1, 0.0);
    Matrix wide = Matrix::gaussian(4, 7, rng);
    projected_sgd_step(wide, Matrix::gaussian(4, 7, rng), opt2);
    CHECK(cond2(wide).value == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("vanilla_uv step is a no-op at zero gradient") {
    Rng rng(89);
    TwoFactorLayer layer = init_two_factor(8, 6, 3, InitScheme::SvdOfGaussian, rng);
    TwoFactorLayer before = layer;
    OptState opt(0.1, 0.0);
    vanilla_uv_step(layer, Matrix(8, 6), opt);
    CHECK(max_abs(layer.U - before.U) == 0.0);
    CHECK(max_abs(layer.V - before.V) == 0.0);
}

TEST_CASE("full baseline follows the scalar heavy-ball recursion") {
    Rng rng(97);
    Matrix a = Matrix::gaussian(3, 4, rng);
    Matrix w = Matrix::gaussian(3, 4, rng);
    Matrix w_ref = w;
    std::vector<double> buf(w.data.size(), 0.0);

    OptState opt(0.07, 0.4);
    for (int step = 0; step < 40; ++step) {
        full_step(w, w - a, opt);
        for (std::size_t i = 0; i < w_ref.data.size(); ++i) {
            buf[i] = 0.4 * buf[i] + (w_ref.data[i] - a.data[i]);
            w_ref.data[i] -= 0.07 * buf[i];
        }
    }
    CHECK(max_abs(w - w_ref) < 1e-15);
}
