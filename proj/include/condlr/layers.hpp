#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "condlr/activation.hpp"
#include "condlr/linalg.hpp"

namespace condlr {

// Plain dense layer, W is out x in.
struct DenseLayer {
    Matrix W;
    std::optional<Vector> bias;
    Activation activation;
};

// Rank-r layer W = U S V^T held on M_r with S confined to the singular value
// band [s_band - eps_band, s_band + eps_band] (CondLR variants).
struct FactorizedLayer {
    Matrix U; // out x r, orthonormal columns
    Matrix S; // r x r, invertible
    Matrix V; // in x r, orthonormal columns
    std::optional<Vector> bias;
    Activation activation;
    double tau = 0.0;      // conditioning tolerance, cond2(S) <= 1 + tau
    double s_band = 1.0;   // current band center s
    double eps_band = 0.0; // current band half-width eps = tau*s/(2+tau)

    int out_dim() const { return U.rows; }
    int in_dim() const { return V.rows; }
    int rank() const { return S.rows; }
};

// W = U V^T two-factor parametrization used by the vanilla low-rank baseline.
struct TwoFactorLayer {
    Matrix U; // out x r
    Matrix V; // in x r
    std::optional<Vector> bias;
    Activation activation;

    int out_dim() const { return U.rows; }
    int in_dim() const { return V.rows; }
    int rank() const { return U.cols; }
};

using Layer = std::variant<DenseLayer, FactorizedLayer, TwoFactorLayer>;

int layer_in_dim(const Layer& l);
int layer_out_dim(const Layer& l);
const Activation& layer_activation(const Layer& l);
const std::optional<Vector>& layer_bias(const Layer& l);
std::optional<Vector>& layer_bias(Layer& l);

// Materialize the effective weight W (out x in).
Matrix effective_weight(const Layer& l);

// Singular values of the effective weight without forming it when factors
// give a cheaper route (sigma(S) for factorized, sigma(Ru Rv^T) for UV^T).
Vector effective_singular_values(const Layer& l);

// Trainable parameter count as stored: r(n+m+r) for factorized, r(n+m) for
// two-factor, n*m dense; +out for bias when present.
std::int64_t layer_param_count(const Layer& l);
// Parameter count of the dense layer this one replaces.
std::int64_t layer_dense_param_count(const Layer& l);

} // namespace condlr
