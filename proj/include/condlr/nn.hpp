#pragma once

#include <vector>

#include "condlr/layers.hpp"

namespace condlr {

// Feed-forward stack z_{i+1} = sigma_i(W_i z_i + b_i). Batch is the leading
// dimension everywhere: X is batch x in, logits batch x num_classes.
struct Network {
    std::vector<Layer> layers;
    int num_classes = 0;

    void validate() const; // dimension chaining, final width == num_classes
};

// Cached per-layer inputs and pre-activations from one forward pass.
struct ForwardTrace {
    std::vector<Matrix> inputs;   // z_i, batch x in_i
    std::vector<Matrix> preacts;  // W_i z_i + b_i, batch x out_i
};

struct ForwardResult {
    Matrix logits;
    ForwardTrace trace;
};

ForwardResult forward(const Network& net, const Matrix& x);
Matrix forward_logits(const Network& net, const Matrix& x);

struct LossGrad {
    double loss = 0.0;
    Matrix dlogits;
};

// Mean softmax cross-entropy over the batch; dlogits = (softmax - onehot)/batch.
LossGrad cross_entropy(const Matrix& logits, const std::vector<int>& labels);
double cross_entropy_loss(const Matrix& logits, const std::vector<int>& labels);

struct LayerGrads {
    Matrix grad_W;     // gradient wrt the effective weight, out x in
    Vector grad_bias;  // empty when the layer has no bias
};

struct BackwardResult {
    std::vector<LayerGrads> layers;
    Matrix grad_input; // batch x in, feeds FGSM
};

// Exact reverse-mode gradients for the trace produced by forward().
BackwardResult backward(const Network& net, const ForwardTrace& trace, const Matrix& dlogits);

// argmax prediction per row.
std::vector<int> predict(const Matrix& logits);
double accuracy(const Matrix& logits, const std::vector<int>& labels);

} // namespace condlr
