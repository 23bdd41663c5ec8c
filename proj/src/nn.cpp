#include "condlr/nn.hpp"

#include <cmath>
#include <sstream>

namespace condlr {

void Network::validate() const {
    if (layers.empty()) throw DimensionError("network has no layers");
    if (num_classes <= 0) throw DimensionError("num_classes must be positive");
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        if (layer_out_dim(layers[i]) != layer_in_dim(layers[i + 1])) {
            std::ostringstream msg;
            msg << "layer " << i << " output width " << layer_out_dim(layers[i])
                << " does not chain into layer " << i + 1 << " input width "
                << layer_in_dim(layers[i + 1]);
            throw DimensionError(msg.str());
        }
    }
    if (layer_out_dim(layers.back()) != num_classes)
        throw DimensionError("final layer width must equal num_classes");
}

namespace {

// pre = x W^T (+ bias), computed through the factors for compressed layers.
Matrix layer_preactivation(const Layer& l, const Matrix& x) {
    Matrix pre = std::visit([&](const auto& lay) -> Matrix {
        using T = std::decay_t<decltype(lay)>;
        if constexpr (std::is_same_v<T, DenseLayer>) {
            return matmul(x, transpose(lay.W));
        } else if constexpr (std::is_same_v<T, FactorizedLayer>) {
            // x V S^T U^T, never forming U S V^T.
            return matmul(matmul(matmul(x, lay.V), transpose(lay.S)), transpose(lay.U));
        } else {
            return matmul(matmul(x, lay.V), transpose(lay.U));
        }
    }, l);
    const auto& bias = layer_bias(l);
    if (bias) {
        for (int i = 0; i < pre.rows; ++i)
            for (int j = 0; j < pre.cols; ++j) pre(i, j) += (*bias)[static_cast<std::size_t>(j)];
    }
    return pre;
}

// d_input = d_pre W, again through the factors.
Matrix layer_input_grad(const Layer& l, const Matrix& dpre) {
    return std::visit([&](const auto& lay) -> Matrix {
        using T = std::decay_t<decltype(lay)>;
        if constexpr (std::is_same_v<T, DenseLayer>) {
            return matmul(dpre, lay.W);
        } else if constexpr (std::is_same_v<T, FactorizedLayer>) {
            return matmul(matmul(matmul(dpre, lay.U), lay.S), transpose(lay.V));
        } else {
            return matmul(matmul(dpre, lay.U), transpose(lay.V));
        }
    }, l);
}

} // namespace

ForwardResult forward(const Network& net, const Matrix& x) {
    net.validate();
    if (x.cols != layer_in_dim(net.layers.front()))
        throw DimensionError("forward: input width does not match first layer");

    ForwardResult out;
    out.trace.inputs.reserve(net.layers.size());
    out.trace.preacts.reserve(net.layers.size());

    Matrix z = x;
    for (const Layer& l : net.layers) {
        out.trace.inputs.push_back(z);
        Matrix pre = layer_preactivation(l, z);
        out.trace.preacts.push_back(pre);
        const Activation& act = layer_activation(l);
        if (act.kind != ActKind::Identity)
            for (double& v : pre.data) v = act(v);
        z = std::move(pre);
    }
    out.logits = std::move(z);
    return out;
}

Matrix forward_logits(const Network& net, const Matrix& x) {
    return forward(net, x).logits;
}

LossGrad cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.rows)
        throw DimensionError("cross_entropy: one label per row required");
    const int batch = logits.rows, k = logits.cols;
    for (int lab : labels)
        if (lab < 0 || lab >= k) throw DimensionError("cross_entropy: label out of range");

    LossGrad out;
    out.dlogits = Matrix(batch, k);
    double loss = 0.0;
    for (int i = 0; i < batch; ++i) {
        double mx = logits(i, 0);
        for (int j = 1; j < k; ++j) mx = std::max(mx, logits(i, j));
        double denom = 0.0;
        for (int j = 0; j < k; ++j) denom += std::exp(logits(i, j) - mx);
        const double logz = mx + std::log(denom);
        loss += logz - logits(i, labels[static_cast<std::size_t>(i)]);
        for (int j = 0; j < k; ++j)
            out.dlogits(i, j) = std::exp(logits(i, j) - logz) / batch;
        out.dlogits(i, labels[static_cast<std::size_t>(i)]) -= 1.0 / batch;
    }
    out.loss = loss / batch;
    return out;
}

double cross_entropy_loss(const Matrix& logits, const std::vector<int>& labels) {
    return cross_entropy(logits, labels).loss;
}

BackwardResult backward(const Network& net, const ForwardTrace& trace, const Matrix& dlogits) {
    const std::size_t depth = net.layers.size();
    if (trace.inputs.size() != depth || trace.preacts.size() != depth)
        throw DimensionError("backward: trace depth does not match network");
    if (!dlogits.same_shape(trace.preacts.back()))
        throw DimensionError("backward: dlogits shape does not match trace");

    BackwardResult out;
    out.layers.resize(depth);

    Matrix d = dlogits;
    for (std::size_t idx = depth; idx-- > 0;) {
        const Layer& l = net.layers[idx];
        const Activation& act = layer_activation(l);
        Matrix dpre = std::move(d);
        if (act.kind != ActKind::Identity) {
            const Matrix& pre = trace.preacts[idx];
            for (std::size_t i = 0; i < dpre.data.size(); ++i)
                dpre.data[i] *= act.derivative(pre.data[i]);
        }
        LayerGrads& g = out.layers[idx];
        g.grad_W = matmul(transpose(dpre), trace.inputs[idx]);
        if (layer_bias(l)) {
            g.grad_bias.assign(static_cast<std::size_t>(dpre.cols), 0.0);
            for (int i = 0; i < dpre.rows; ++i)
                for (int j = 0; j < dpre.cols; ++j) g.grad_bias[static_cast<std::size_t>(j)] += dpre(i, j);
        }
        d = layer_input_grad(l, dpre);
    }
    out.grad_input = std::move(d);
    return out;
}

std::vector<int> predict(const Matrix& logits) {
    std::vector<int> p(static_cast<std::size_t>(logits.rows));
    for (int i = 0; i < logits.rows; ++i) {
        int best = 0;
        for (int j = 1; j < logits.cols; ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        p[static_cast<std::size_t>(i)] = best;
    }
    return p;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
    if (labels.empty()) throw DataError("accuracy: empty label set");
    std::vector<int> p = predict(logits);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (p[i] == labels[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

} // namespace condlr
