#pragma once

#include <optional>
#include <string>

#include "condlr/layers.hpp"

namespace condlr {

// Training scheme selector.
//  condlr:        factorized step with the singular-value band projection
//  unit:          condlr with s fixed to one (S projected to the Stiefel set)
//  noband:        condlr without the band projection step
//  vanilla_uv:    W = U V^T alternate descent, no projections
//  full:          dense SGD with momentum
//  projected_sgd: dense SGD followed by Stiefel orthonormalization of W
enum class TrainVariant { CondLR, Unit, NoBand, VanillaUV, Full, ProjectedSGD };

std::string variant_name(TrainVariant v);
TrainVariant parse_variant(const std::string& name);
bool variant_is_factorized(TrainVariant v);

// Per-layer momentum-SGD state. Buffers are lazily sized to their owners and
// kept in the ambient factor coordinates (no transport after projections).
struct OptState {
    double lr = 0.1;
    double beta = 0.0;          // momentum coefficient in [0, 1)
    std::vector<Matrix> bufs;   // [U,S,V] factorized, [W] dense, [U,V] two-factor
    Vector bias_buf;

    OptState() = default;
    OptState(double learning_rate, double momentum);
};

// Largest rank r >= 1 with a stored parameter count r(n+m+r) achieving
// compression >= alpha against the n*m dense layer; r <= min(n,m). Throws
// DimensionError when even r = 1 exceeds the budget (layer too small).
int select_rank(int n, int m, double alpha);

enum class InitScheme { SvdOfGaussian, ExpDecay };

// Rank-r initialization from the truncated SVD of a Gaussian matrix with
// entries scaled by sqrt(2/n). ExpDecay keeps U, V but overwrites the
// spectrum with sigma_k = 2^{-k} (the ill-conditioned start used to probe
// sensitivity to small singular values).
FactorizedLayer init_factorized(int n, int m, int r, InitScheme scheme, Rng& rng);

// Two-factor start from the same truncated SVD, balanced split
// U <- Uhat sqrt(Sigma), V <- Vhat sqrt(Sigma).
TwoFactorLayer init_two_factor(int n, int m, int r, InitScheme scheme, Rng& rng);

struct FactorGradients {
    Matrix U; // dL/dU = G V S^T        (n x r)
    Matrix S; // dL/dS = U^T G V        (r x r)
    Matrix V; // dL/dV = G^T U S        (m x r)
};

// Chain rule through W = U S V^T for an ambient gradient G = dL/dW.
FactorGradients factor_gradients(const Matrix& g, const FactorizedLayer& layer);

struct RiemannianGradients {
    Matrix G1; // (I - U U^T) dL/dU (S S^T)^{-1}
    Matrix G2; // (I - V V^T) dL/dV (S^T S)^{-1}
    Matrix G3; // dL/dS
    bool ridge_used = false;
};

// The projected gradient-flow right-hand sides for the three factors. When
// `scalar_s` is set (tau = 0 variants) the r x r inverses collapse to 1/s^2.
// `ridge` enables the Tikhonov fallback (1e-10 * s^2) for near-singular S
// instead of throwing; intended for the noband variant.
RiemannianGradients riemannian_gradients(const FactorGradients& fg, const FactorizedLayer& layer,
                                         std::optional<double> scalar_s = std::nullopt,
                                         bool ridge = false);

struct BandProjection {
    Matrix S;
    double s = 0.0;
    double eps = 0.0;
};

// Project S onto Sigma_s(eps): s is the root mean square of the singular
// values, eps = tau*s/(2+tau), and each singular value is clamped into
// [s-eps, s+eps]. Guarantees cond2(S') <= 1 + tau.
BandProjection sigma_band_project(const Matrix& s_mat, double tau);

// tau = 0 shortcut: S' = s * Q with Q the orthonormal QR factor of S and
// s = sqrt(trace(S^T S)/r) (or a caller-fixed s). cond2(S') = 1.
Matrix stiefel_scale_project(const Matrix& s_mat, std::optional<double> fixed_s = std::nullopt);

// One training step of the factorized layer: gradients evaluated at the entry
// point for all three blocks, momentum-SGD updates applied simultaneously,
// then U, V re-orthonormalized by thin QR and S band-projected according to
// the variant. Layer invariants hold on exit.
struct StepReport {
    bool ridge_used = false;
    double band_shift = 0.0; // ||S_pre_projection - S_post_projection||_F
};

StepReport condlr_step(FactorizedLayer& layer, const Matrix& g, OptState& opt, TrainVariant variant);

// Dense baselines.
void full_step(Matrix& w, const Matrix& g, OptState& opt);
void projected_sgd_step(Matrix& w, const Matrix& g, OptState& opt);
// Alternate descent on U then V (with the updated U), no projections.
void vanilla_uv_step(TwoFactorLayer& layer, const Matrix& g, OptState& opt);

// Momentum-SGD on a bias vector.
void bias_step(Vector& bias, const Vector& grad, OptState& opt);

// Establish the band invariant on a freshly initialized layer so the first
// condlr_step sees a valid entry state.
void establish_band(FactorizedLayer& layer, TrainVariant variant);

} // namespace condlr
