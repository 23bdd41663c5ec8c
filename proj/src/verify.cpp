#include "condlr/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace condlr {

void TangentPoint::validate() const {
    if (U.cols != S.rows || S.rows != S.cols || V.cols != S.cols)
        throw DimensionError("tangent point factors have inconsistent shapes");
    const double tol = 1e-10 * S.rows;
    if (orthonormality_residual(U) > tol || orthonormality_residual(V) > tol)
        throw NumericalError("tangent point factors are not orthonormal");
}

Matrix tangent_project(const Matrix& u, const Matrix& v, const Matrix& b) {
    if (b.rows != u.rows || b.cols != v.rows)
        throw DimensionError("tangent_project: ambient matrix shape mismatch");
    Matrix utb = matmul(transpose(u), b);     // r x m
    Matrix bv = matmul(b, v);                 // n x r
    Matrix utbv = matmul(utb, v);             // r x r
    Matrix out = matmul(u, utb);              // U U^T B
    out = out + matmul(bv, transpose(v));     // + B V V^T
    out = out - matmul(matmul(u, utbv), transpose(v)); // - U U^T B V V^T
    return out;
}

Matrix tangent_project(const TangentPoint& w, const Matrix& b) {
    return tangent_project(w.U, w.V, b);
}

TangentPoint truncate_to_rank(const Matrix& a, int r) {
    if (r < 1 || r > std::min(a.rows, a.cols))
        throw DimensionError("truncate_to_rank: rank out of range");
    SvdResult dec = svd(a);
    TangentPoint p;
    p.U = Matrix(a.rows, r);
    p.V = Matrix(a.cols, r);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < r; ++j) p.U(i, j) = dec.U(i, j);
    for (int i = 0; i < a.cols; ++i)
        for (int j = 0; j < r; ++j) p.V(i, j) = dec.V(i, j);
    Vector sig(dec.sigma.begin(), dec.sigma.begin() + r);
    p.S = Matrix::diag(sig);
    return p;
}

namespace {

Matrix reassemble(const TangentPoint& p) {
    return matmul(matmul(p.U, p.S), transpose(p.V));
}

// Random orthonormal n x r frame.
Matrix random_frame(int n, int r, Rng& rng) {
    return thin_qr(Matrix::gaussian(n, r, rng)).Q;
}

} // namespace

std::vector<CurvatureRow> curvature_check(int n, int m, int r, const std::vector<double>& s_min_list,
                                          int trials, std::uint64_t seed) {
    if (r < 2 || r > std::min(n, m)) throw DimensionError("curvature_check: need 2 <= r <= min(n,m)");
    for (std::size_t i = 1; i < s_min_list.size(); ++i)
        if (s_min_list[i] >= s_min_list[i - 1] || s_min_list[i] <= 0.0)
            throw DimensionError("curvature_check: s_min list must be positive descending");

    Rng rng(seed);
    Matrix b = Matrix::gaussian(n, m, rng); // fixed test matrix B
    std::vector<CurvatureRow> rows;
    rows.reserve(s_min_list.size());

    for (double s_min : s_min_list) {
        CurvatureRow row;
        row.s_min = s_min;
        for (int t = 0; t < trials; ++t) {
            TangentPoint w;
            w.U = random_frame(n, r, rng);
            w.V = random_frame(m, r, rng);
            // Spectrum from 1 down to s_min.
            Vector sig(static_cast<std::size_t>(r));
            for (int j = 0; j < r; ++j)
                sig[static_cast<std::size_t>(j)] =
                    (r == 1) ? s_min : 1.0 + (s_min - 1.0) * j / (r - 1);
            w.S = Matrix::diag(sig);
            Matrix w_full = reassemble(w);

            Matrix noise = Matrix::gaussian(n, m, rng);
            const double delta = 1e-6 * s_min;
            Matrix perturbed = w_full + (delta / frobenius_norm(noise)) * noise;
            TangentPoint wp = truncate_to_rank(perturbed, r);
            Matrix wp_full = reassemble(wp);

            const double dist = frobenius_norm(w_full - wp_full);
            if (dist == 0.0) continue;
            const double num = frobenius_norm(tangent_project(w, b) - tangent_project(wp, b));
            row.rho = std::max(row.rho, num / dist);
        }
        row.rho_scaled = row.rho * s_min;
        rows.push_back(row);
    }
    return rows;
}

double TheoremCheckSpec::lambda_precondition_bound() const {
    if (eta <= 0.0) return std::numeric_limits<double>::infinity();
    return (s - eps) / (4.0 * std::sqrt(2.0 * mu * eta));
}

void TheoremCheckSpec::validate() const {
    if (r < 1 || r > std::min(n, m)) throw DimensionError("theorem2: rank out of range");
    if (!(eps >= 0.0 && eps < s)) throw DimensionError("theorem2: need 0 <= eps < s");
    if (eta < 0.0 || mu <= 0.0) throw DimensionError("theorem2: eta >= 0 and mu > 0 required");
    if (substeps < 8) throw DimensionError("theorem2: too few substeps");
}

namespace {

Matrix random_skew(int n, Rng& rng) {
    Matrix a = Matrix::gaussian(n, n, rng);
    Matrix s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) - a(j, i));
    return s;
}

double spectral_norm_upper(const Matrix& a) { return frobenius_norm(a); }

} // namespace

TheoremCheckResult theorem2_check(const TheoremCheckSpec& spec_in) {
    TheoremCheckSpec spec = spec_in;
    spec.validate();
    if (spec.lambda <= 0.0) spec.lambda = spec.lambda_precondition_bound();
    if (!std::isfinite(spec.lambda)) spec.lambda = 1.0; // eta = 0 has no precondition

    Rng rng(spec.seed);

    // Rank-r start with spectrum spread across the band.
    TangentPoint w0;
    w0.U = random_frame(spec.n, spec.r, rng);
    w0.V = random_frame(spec.m, spec.r, rng);
    Vector sig(static_cast<std::size_t>(spec.r));
    for (int j = 0; j < spec.r; ++j)
        sig[static_cast<std::size_t>(j)] =
            (spec.r == 1) ? spec.s
                          : (spec.s + spec.eps) + (-2.0 * spec.eps) * j / (spec.r - 1);
    w0.S = Matrix::diag(sig);
    Matrix w0_full = reassemble(w0);
    const double w0_norm = frobenius_norm(w0_full);

    // Skew generators scaled so ||dW/dt|| <= mu with headroom for eta N.
    Matrix omega1 = random_skew(spec.n, rng);
    Matrix omega2 = random_skew(spec.m, rng);
    const double budget = 0.9 * (spec.mu - spec.eta);
    if (budget <= 0.0) throw DimensionError("theorem2: mu must exceed eta");
    const double scale1 = budget / (2.0 * w0_norm * spectral_norm_upper(omega1));
    const double scale2 = budget / (2.0 * w0_norm * spectral_norm_upper(omega2));
    omega1 = scale1 * omega1;
    omega2 = scale2 * omega2;

    Matrix noise = Matrix::gaussian(spec.n, spec.m, rng);
    Matrix n_dir = (1.0 / frobenius_norm(noise)) * noise; // ||N||_F = 1

    // Closed forms for W~(t) and dW/dt.
    auto rotate = [&](double t) {
        Matrix r1 = expm_pade6(t * omega1);
        Matrix r2 = expm_pade6(t * omega2);
        return matmul(matmul(r1, w0_full), transpose(r2));
    };
    auto w_of = [&](double t) {
        Matrix w = rotate(t);
        axpy(t * spec.eta, n_dir, w);
        return w;
    };
    auto wdot_of = [&](double t) {
        Matrix wt = rotate(t);
        Matrix d = matmul(omega1, wt) + matmul(wt, transpose(omega2));
        axpy(spec.eta, n_dir, d);
        return d;
    };

    // Projected flow dY/dt = P(Y) dW/dt, classical RK4 with rank-r projector
    // factors recomputed at every stage.
    auto field = [&](const Matrix& y, double t) {
        TangentPoint p = truncate_to_rank(y, spec.r);
        return tangent_project(p, wdot_of(t));
    };

    TheoremCheckResult res;
    res.certified = spec.eta == 0.0 || spec.lambda <= spec.lambda_precondition_bound() + 1e-12;

    const double h = spec.lambda / spec.substeps;
    Matrix y = w0_full;
    res.times.push_back(0.0);
    res.errors.push_back(0.0);
    res.bounds.push_back(0.0);

    for (int k = 0; k < spec.substeps; ++k) {
        const double t = k * h;
        Matrix k1 = field(y, t);
        Matrix y2 = y; axpy(0.5 * h, k1, y2);
        Matrix k2 = field(y2, t + 0.5 * h);
        Matrix y3 = y; axpy(0.5 * h, k2, y3);
        Matrix k3 = field(y3, t + 0.5 * h);
        Matrix y4 = y; axpy(h, k3, y4);
        Matrix k4 = field(y4, t + h);

        axpy(h / 6.0, k1, y);
        axpy(h / 3.0, k2, y);
        axpy(h / 3.0, k3, y);
        axpy(h / 6.0, k4, y);
        // Retract onto M_r; the flow keeps Y there up to integrator error.
        y = reassemble(truncate_to_rank(y, spec.r));

        const double tk = (k + 1) * h;
        const double err = frobenius_norm(y - w_of(tk));
        res.times.push_back(tk);
        res.errors.push_back(err);
        res.bounds.push_back(3.0 * tk * spec.eta);
    }

    // Integrator tolerance: RK4 global error estimate plus roundoff margin.
    const double rate = std::max(frobenius_norm(omega1), frobenius_norm(omega2));
    res.integrator_tolerance =
        1e-9 + 10.0 * spec.lambda * std::pow(h * std::max(rate, 1e-3), 4) * w0_norm;

    res.pass = true;
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        if (res.errors[i] > res.bounds[i] + res.integrator_tolerance) res.pass = false;
        if (res.errors[i] > res.max_error) {
            res.max_error = res.errors[i];
            res.bound_at_max = res.bounds[i];
        }
    }
    res.final_error = res.errors.back();
    res.final_bound = res.bounds.back();
    return res;
}

} // namespace condlr
