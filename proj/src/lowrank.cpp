#include "condlr/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace condlr {

std::string variant_name(TrainVariant v) {
    switch (v) {
        case TrainVariant::CondLR: return "condlr";
        case TrainVariant::Unit: return "unit";
        case TrainVariant::NoBand: return "noband";
        case TrainVariant::VanillaUV: return "vanilla_uv";
        case TrainVariant::Full: return "full";
        case TrainVariant::ProjectedSGD: return "projected_sgd";
    }
    return "condlr";
}

TrainVariant parse_variant(const std::string& name) {
    if (name == "condlr") return TrainVariant::CondLR;
    if (name == "unit") return TrainVariant::Unit;
    if (name == "noband") return TrainVariant::NoBand;
    if (name == "vanilla_uv") return TrainVariant::VanillaUV;
    if (name == "full") return TrainVariant::Full;
    if (name == "projected_sgd") return TrainVariant::ProjectedSGD;
    throw DimensionError("unknown training variant: " + name);
}

bool variant_is_factorized(TrainVariant v) {
    return v == TrainVariant::CondLR || v == TrainVariant::Unit || v == TrainVariant::NoBand;
}

OptState::OptState(double learning_rate, double momentum) : lr(learning_rate), beta(momentum) {
    if (lr <= 0.0) throw DimensionError("learning rate must be positive");
    if (beta < 0.0 || beta >= 1.0) throw DimensionError("momentum must lie in [0, 1)");
}

int select_rank(int n, int m, double alpha) {
    if (alpha <= 0.0 || alpha >= 1.0) throw DimensionError("compression rate must lie in (0, 1)");
    if (n <= 0 || m <= 0) throw DimensionError("layer dimensions must be positive");
    const double dense = static_cast<double>(n) * static_cast<double>(m);
    auto achieved = [&](int r) {
        return 1.0 - static_cast<double>(r) * (static_cast<double>(n) + m + r) / dense;
    };
    if (achieved(1) < alpha) {
        std::ostringstream msg;
        msg << "no feasible rank for a " << n << "x" << m << " layer at compression " << alpha
            << ": even r=1 stores " << (n + m + 1) << " of the " << static_cast<long long>(dense * (1.0 - alpha))
            << " parameter budget";
        throw DimensionError(msg.str());
    }
    int r = 1;
    const int rmax = std::min(n, m);
    while (r + 1 <= rmax && achieved(r + 1) >= alpha) ++r;
    return r;
}

namespace {

// Truncated rank-r SVD of a Gaussian draw scaled by sqrt(2/n).
SvdResult gaussian_truncated_svd(int n, int m, Rng& rng) {
    Matrix w0 = Matrix::gaussian(n, m, rng, std::sqrt(2.0 / static_cast<double>(n)));
    return svd(w0);
}

Matrix take_columns(const Matrix& a, int k) {
    Matrix out(a.rows, k);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < k; ++j) out(i, j) = a(i, j);
    return out;
}

} // namespace

FactorizedLayer init_factorized(int n, int m, int r, InitScheme scheme, Rng& rng) {
    if (r < 1 || r > std::min(n, m)) throw DimensionError("rank out of range for layer shape");
    SvdResult dec = gaussian_truncated_svd(n, m, rng);
    FactorizedLayer layer;
    layer.U = take_columns(dec.U, r);
    layer.V = take_columns(dec.V, r);
    Vector sig(dec.sigma.begin(), dec.sigma.begin() + r);
    if (scheme == InitScheme::ExpDecay)
        for (int k = 0; k < r; ++k) sig[static_cast<std::size_t>(k)] = std::pow(2.0, -static_cast<double>(k));
    layer.S = Matrix::diag(sig);
    double acc = 0.0;
    for (double s : sig) acc += s * s;
    layer.s_band = std::sqrt(acc / r);
    layer.eps_band = 0.0;
    return layer;
}

TwoFactorLayer init_two_factor(int n, int m, int r, InitScheme scheme, Rng& rng) {
    if (r < 1 || r > std::min(n, m)) throw DimensionError("rank out of range for layer shape");
    SvdResult dec = gaussian_truncated_svd(n, m, rng);
    Vector sig(dec.sigma.begin(), dec.sigma.begin() + r);
    if (scheme == InitScheme::ExpDecay)
        for (int k = 0; k < r; ++k) sig[static_cast<std::size_t>(k)] = std::pow(2.0, -static_cast<double>(k));
    TwoFactorLayer layer;
    layer.U = take_columns(dec.U, r);
    layer.V = take_columns(dec.V, r);
    for (int j = 0; j < r; ++j) {
        const double f = std::sqrt(sig[static_cast<std::size_t>(j)]);
        for (int i = 0; i < n; ++i) layer.U(i, j) *= f;
        for (int i = 0; i < m; ++i) layer.V(i, j) *= f;
    }
    return layer;
}

FactorGradients factor_gradients(const Matrix& g, const FactorizedLayer& layer) {
    if (g.rows != layer.out_dim() || g.cols != layer.in_dim())
        throw DimensionError("factor_gradients: ambient gradient shape mismatch");
    FactorGradients out;
    Matrix gv = matmul(g, layer.V);            // n x r
    out.U = matmul(gv, transpose(layer.S));    // n x r
    out.S = matmul(transpose(layer.U), gv);    // r x r
    out.V = matmul(transpose(g), matmul(layer.U, layer.S)); // m x r
    return out;
}

namespace {

// b - u (u^T b): orthogonal complement projector applied on the left.
Matrix project_out_range(const Matrix& u, const Matrix& b) {
    return b - matmul(u, matmul(transpose(u), b));
}

} // namespace

RiemannianGradients riemannian_gradients(const FactorGradients& fg, const FactorizedLayer& layer,
                                         std::optional<double> scalar_s, bool ridge) {
    RiemannianGradients out;
    out.G3 = fg.S;
    Matrix pu = project_out_range(layer.U, fg.U);
    Matrix pv = project_out_range(layer.V, fg.V);

    if (scalar_s) {
        const double s2 = (*scalar_s) * (*scalar_s);
        if (s2 <= 0.0) throw NumericalError("riemannian_gradients: scalar s must be positive");
        out.G1 = (1.0 / s2) * pu;
        out.G2 = (1.0 / s2) * pv;
        return out;
    }

    const double snorm = frobenius_norm(layer.S);
    // QR of S^T gives S S^T = R^T R; QR of S gives S^T S = R^T R.
    auto near_singular = [&](const Matrix& r) {
        double dmin = std::abs(r(0, 0));
        for (int i = 1; i < r.rows; ++i) dmin = std::min(dmin, std::abs(r(i, i)));
        return dmin < kRankTolerance * snorm;
    };

    Matrix st = transpose(layer.S);
    bool singular = false;
    Matrix r_left, r_right;
    try {
        r_left = thin_qr(st).R;       // S S^T = r_left^T r_left
        r_right = thin_qr(layer.S).R; // S^T S = r_right^T r_right
        singular = near_singular(r_left) || near_singular(r_right);
    } catch (const RankDeficientError&) {
        singular = true;
    }

    if (!singular) {
        out.G1 = solve_right_upper_transposed(solve_right_upper(pu, r_left), r_left);
        out.G2 = solve_right_upper_transposed(solve_right_upper(pv, r_right), r_right);
        return out;
    }

    if (!ridge)
        throw NumericalError("riemannian_gradients: S numerically singular; project S onto the band first");

    // Tikhonov fallback for the unprojected variant.
    const double delta = 1e-10 * layer.s_band * layer.s_band;
    Matrix sst = matmul(layer.S, st);
    Matrix sts = matmul(st, layer.S);
    for (int i = 0; i < sst.rows; ++i) { sst(i, i) += delta; sts(i, i) += delta; }
    out.G1 = solve_right_spd(pu, cholesky(sst));
    out.G2 = solve_right_spd(pv, cholesky(sts));
    out.ridge_used = true;
    return out;
}

BandProjection sigma_band_project(const Matrix& s_mat, double tau) {
    if (tau < 0.0) throw DimensionError("tau must be nonnegative");
    SvdResult dec = svd(s_mat);
    const int r = static_cast<int>(dec.sigma.size());
    double acc = 0.0;
    for (double s : dec.sigma) acc += s * s;
    if (acc == 0.0) throw NumericalError("sigma_band_project: zero matrix");

    BandProjection out;
    out.s = std::sqrt(acc / r);
    out.eps = tau * out.s / (2.0 + tau);
    const double lo = out.s - out.eps, hi = out.s + out.eps;
    Vector clamped = dec.sigma;
    for (double& s : clamped) s = std::clamp(s, lo, hi);

    // P diag(clamped) Q^T
    Matrix scaled = dec.U; // r x r
    for (int i = 0; i < scaled.rows; ++i)
        for (int j = 0; j < scaled.cols; ++j) scaled(i, j) *= clamped[static_cast<std::size_t>(j)];
    out.S = matmul(scaled, transpose(dec.V));
    return out;
}

Matrix stiefel_scale_project(const Matrix& s_mat, std::optional<double> fixed_s) {
    double s;
    if (fixed_s) {
        s = *fixed_s;
        if (s <= 0.0) throw DimensionError("fixed band center must be positive");
    } else {
        double acc = 0.0;
        for (double x : s_mat.data) acc += x * x; // trace(S^T S)
        if (acc == 0.0) throw NumericalError("stiefel_scale_project: zero matrix");
        s = std::sqrt(acc / s_mat.rows);
    }
    ThinQR qr = thin_qr(s_mat); // throws RankDeficientError on singular S
    return s * qr.Q;
}

namespace {

void momentum_update(Matrix& buf, const Matrix& grad, const Matrix& owner, double beta) {
    if (buf.rows == 0) buf = Matrix(owner.rows, owner.cols);
    if (!buf.same_shape(owner)) throw DimensionError("momentum buffer shape does not match owner");
    for (std::size_t i = 0; i < buf.data.size(); ++i)
        buf.data[i] = beta * buf.data[i] + grad.data[i];
}

} // namespace

StepReport condlr_step(FactorizedLayer& layer, const Matrix& g, OptState& opt, TrainVariant variant) {
    if (!variant_is_factorized(variant))
        throw DimensionError("condlr_step: variant does not use factorized layers");
    StepReport report;

    // All three gradients at the entry values of (U, S, V).
    FactorGradients fg = factor_gradients(g, layer);
    std::optional<double> scalar_s;
    if (variant == TrainVariant::Unit || (variant == TrainVariant::CondLR && layer.tau == 0.0))
        scalar_s = layer.s_band;
    RiemannianGradients rg =
        riemannian_gradients(fg, layer, scalar_s, /*ridge=*/variant == TrainVariant::NoBand);
    report.ridge_used = rg.ridge_used;

    if (opt.bufs.size() != 3) opt.bufs.assign(3, Matrix());
    momentum_update(opt.bufs[0], rg.G1, layer.U, opt.beta);
    momentum_update(opt.bufs[1], rg.G3, layer.S, opt.beta);
    momentum_update(opt.bufs[2], rg.G2, layer.V, opt.beta);

    Matrix u_new = layer.U; axpy(-opt.lr, opt.bufs[0], u_new);
    Matrix s_new = layer.S; axpy(-opt.lr, opt.bufs[1], s_new);
    Matrix v_new = layer.V; axpy(-opt.lr, opt.bufs[2], v_new);

    layer.U = thin_qr(u_new).Q;
    layer.V = thin_qr(v_new).Q;

    switch (variant) {
        case TrainVariant::CondLR: {
            BandProjection proj = sigma_band_project(s_new, layer.tau);
            report.band_shift = frobenius_norm(proj.S - s_new);
            layer.S = std::move(proj.S);
            layer.s_band = proj.s;
            layer.eps_band = proj.eps;
            break;
        }
        case TrainVariant::Unit: {
            Matrix projected = stiefel_scale_project(s_new, 1.0);
            report.band_shift = frobenius_norm(projected - s_new);
            layer.S = std::move(projected);
            layer.s_band = 1.0;
            layer.eps_band = 0.0;
            break;
        }
        case TrainVariant::NoBand: {
            layer.S = std::move(s_new);
            double acc = 0.0;
            for (double x : layer.S.data) acc += x * x;
            layer.s_band = std::sqrt(acc / layer.S.rows); // monitoring + ridge scale only
            layer.eps_band = 0.0;
            break;
        }
        default: break;
    }
    return report;
}

void full_step(Matrix& w, const Matrix& g, OptState& opt) {
    if (opt.bufs.size() != 1) opt.bufs.assign(1, Matrix());
    momentum_update(opt.bufs[0], g, w, opt.beta);
    axpy(-opt.lr, opt.bufs[0], w);
}

void projected_sgd_step(Matrix& w, const Matrix& g, OptState& opt) {
    full_step(w, g, opt);
    // Orthonormalize the tall orientation so cond2(W) = 1.
    if (w.rows >= w.cols) {
        w = thin_qr(w).Q;
    } else {
        w = transpose(thin_qr(transpose(w)).Q);
    }
}

void vanilla_uv_step(TwoFactorLayer& layer, const Matrix& g, OptState& opt) {
    if (g.rows != layer.out_dim() || g.cols != layer.in_dim())
        throw DimensionError("vanilla_uv_step: ambient gradient shape mismatch");
    if (opt.bufs.size() != 2) opt.bufs.assign(2, Matrix());

    Matrix grad_u = matmul(g, layer.V);
    momentum_update(opt.bufs[0], grad_u, layer.U, opt.beta);
    axpy(-opt.lr, opt.bufs[0], layer.U);

    // Alternate: V step uses the already-updated U.
    Matrix grad_v = matmul(transpose(g), layer.U);
    momentum_update(opt.bufs[1], grad_v, layer.V, opt.beta);
    axpy(-opt.lr, opt.bufs[1], layer.V);
}

void bias_step(Vector& bias, const Vector& grad, OptState& opt) {
    if (bias.size() != grad.size()) throw DimensionError("bias_step: shape mismatch");
    if (opt.bias_buf.size() != bias.size()) opt.bias_buf.assign(bias.size(), 0.0);
    for (std::size_t i = 0; i < bias.size(); ++i) {
        opt.bias_buf[i] = opt.beta * opt.bias_buf[i] + grad[i];
        bias[i] -= opt.lr * opt.bias_buf[i];
    }
}

void establish_band(FactorizedLayer& layer, TrainVariant variant) {
    if (variant == TrainVariant::CondLR) {
        BandProjection proj = sigma_band_project(layer.S, layer.tau);
        layer.S = std::move(proj.S);
        layer.s_band = proj.s;
        layer.eps_band = proj.eps;
    } else if (variant == TrainVariant::Unit) {
        layer.S = stiefel_scale_project(layer.S, 1.0);
        layer.s_band = 1.0;
        layer.eps_band = 0.0;
    }
}

} // namespace condlr
