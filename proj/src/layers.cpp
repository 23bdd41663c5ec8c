#include "condlr/layers.hpp"

namespace condlr {

int layer_in_dim(const Layer& l) {
    return std::visit([](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DenseLayer>) return x.W.cols;
        else return x.in_dim();
    }, l);
}

int layer_out_dim(const Layer& l) {
    return std::visit([](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DenseLayer>) return x.W.rows;
        else return x.out_dim();
    }, l);
}

const Activation& layer_activation(const Layer& l) {
    return std::visit([](const auto& x) -> const Activation& { return x.activation; }, l);
}

const std::optional<Vector>& layer_bias(const Layer& l) {
    return std::visit([](const auto& x) -> const std::optional<Vector>& { return x.bias; }, l);
}

std::optional<Vector>& layer_bias(Layer& l) {
    return std::visit([](auto& x) -> std::optional<Vector>& { return x.bias; }, l);
}

Matrix effective_weight(const Layer& l) {
    return std::visit([](const auto& x) -> Matrix {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DenseLayer>) {
            return x.W;
        } else if constexpr (std::is_same_v<T, FactorizedLayer>) {
            return matmul(matmul(x.U, x.S), transpose(x.V));
        } else {
            return matmul(x.U, transpose(x.V));
        }
    }, l);
}

Vector effective_singular_values(const Layer& l) {
    return std::visit([](const auto& x) -> Vector {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DenseLayer>) {
            return singular_values(x.W);
        } else if constexpr (std::is_same_v<T, FactorizedLayer>) {
            // U, V orthonormal: sigma(W) = sigma(S).
            return singular_values(x.S);
        } else {
            // W = U V^T = Qu (Ru Rv^T) Qv^T, so sigma(W) = sigma(Ru Rv^T).
            ThinQR qu = thin_qr(x.U);
            ThinQR qv = thin_qr(x.V);
            return singular_values(matmul(qu.R, transpose(qv.R)));
        }
    }, l);
}

std::int64_t layer_param_count(const Layer& l) {
    const std::int64_t bias = layer_bias(l) ? layer_out_dim(l) : 0;
    return std::visit([](const auto& x) -> std::int64_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DenseLayer>) {
            return static_cast<std::int64_t>(x.W.rows) * x.W.cols;
        } else if constexpr (std::is_same_v<T, FactorizedLayer>) {
            const std::int64_t n = x.out_dim(), m = x.in_dim(), r = x.rank();
            return r * (n + m + r);
        } else {
            const std::int64_t n = x.out_dim(), m = x.in_dim(), r = x.rank();
            return r * (n + m);
        }
    }, l) + bias;
}

std::int64_t layer_dense_param_count(const Layer& l) {
    const std::int64_t bias = layer_bias(l) ? layer_out_dim(l) : 0;
    return static_cast<std::int64_t>(layer_out_dim(l)) * layer_in_dim(l) + bias;
}

} // namespace condlr
