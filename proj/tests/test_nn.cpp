#include <doctest.h>

#include <cmath>

#include "condlr/nn.hpp"
#include "oracles.hpp"

using namespace condlr;

namespace {

Network tiny_identity_net(int d) {
    Network net;
    DenseLayer l;
    l.W = Matrix::identity(d);
    l.bias = Vector(static_cast<std::size_t>(d), 0.0);
    l.activation = Activation::identity();
    net.layers.push_back(std::move(l));
    net.num_classes = d;
    return net;
}

Network random_dense_net(const std::vector<int>& widths, std::uint64_t seed,
                         const std::vector<Activation>& acts) {
    Rng rng(seed);
    Network net;
    net.num_classes = widths.back();
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        DenseLayer l;
        l.W = Matrix::gaussian(widths[i + 1], widths[i], rng, 0.8);
        l.bias = Vector(static_cast<std::size_t>(widths[i + 1]));
        for (double& b : *l.bias) b = 0.2 * rng.normal();
        l.activation = acts[i];
        net.layers.push_back(std::move(l));
    }
    return net;
}

} // namespace

TEST_CASE("forward through an identity layer returns the input") {
    Network net = tiny_identity_net(4);
    Rng rng(2);
    Matrix x = Matrix::gaussian(3, 4, rng);
    Matrix logits = forward_logits(net, x);
    CHECK(max_abs(logits - x) == 0.0);
}

TEST_CASE("leaky relu slope definition") {
    Network net;
    DenseLayer l;
    l.W = Matrix(1, 1, {1.0});
    l.activation = Activation::leaky_relu(0.5);
    net.layers.push_back(std::move(l));
    net.num_classes = 1;
    Matrix x(1, 1, {-2.0});
    CHECK(forward_logits(net, x)(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("two-layer forward matches a scalar reimplementation") {
    Network net = random_dense_net({3, 4, 2}, 99, {Activation::tanh(), Activation::identity()});
    Rng rng(100);
    Matrix x = Matrix::gaussian(5, 3, rng);
    Matrix logits = forward_logits(net, x);

    const DenseLayer& l0 = std::get<DenseLayer>(net.layers[0]);
    const DenseLayer& l1 = std::get<DenseLayer>(net.layers[1]);
    for (int b = 0; b < 5; ++b) {
        double hidden[4];
        for (int o = 0; o < 4; ++o) {
            double acc = (*l0.bias)[static_cast<std::size_t>(o)];
            for (int i = 0; i < 3; ++i) acc += l0.W(o, i) * x(b, i);
            hidden[o] = std::tanh(acc);
        }
        for (int o = 0; o < 2; ++o) {
            double acc = (*l1.bias)[static_cast<std::size_t>(o)];
            for (int i = 0; i < 4; ++i) acc += l1.W(o, i) * hidden[i];
            CHECK(std::abs(logits(b, o) - acc) < 1e-14);
        }
    }
}

TEST_CASE("forward is deterministic") {
    Network net = random_dense_net({4, 6, 3}, 5, {Activation::silu(), Activation::identity()});
    Rng rng(6);
    Matrix x = Matrix::gaussian(7, 4, rng);
    Matrix a = forward_logits(net, x);
    Matrix b = forward_logits(net, x);
    CHECK(max_abs(a - b) == 0.0);
}

TEST_CASE("cross entropy of all-zero logits is ln(num_classes)") {
    Matrix logits(4, 10);
    std::vector<int> labels{0, 3, 7, 9};
    LossGrad lg = cross_entropy(logits, labels);
    CHECK(lg.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy of confident correct logits tends to zero") {
    std::vector<int> labels{1, 0};
    double prev = 1e9;
    for (double scale : {1.0, 5.0, 25.0, 125.0}) {
        Matrix logits(2, 2);
        logits(0, 1) = scale;
        logits(1, 0) = scale;
        const double loss = cross_entropy_loss(logits, labels);
        CHECK(loss < prev);
        prev = loss;
    }
    CHECK(prev < 1e-10);
}

TEST_CASE("cross entropy rejects out-of-range labels") {
    Matrix logits(2, 3);
    CHECK_THROWS_AS(cross_entropy(logits, {0, 3}), DimensionError);
}

TEST_CASE("dlogits matches finite differences of the loss") {
    Rng rng(8);
    Matrix logits = Matrix::gaussian(3, 5, rng);
    std::vector<int> labels{1, 4, 0};
    LossGrad lg = cross_entropy(logits, labels);
    for (int i = 0; i < logits.rows; ++i) {
        for (int j = 0; j < logits.cols; ++j) {
            const double fd = oracles::central_diff([&](double v) {
                Matrix pert = logits;
                pert(i, j) = v;
                return cross_entropy_loss(pert, labels);
            }, logits(i, j), 1e-6);
            CHECK(oracles::rel_err(lg.dlogits(i, j), fd, 1e-7) < 1e-6);
        }
    }
}

TEST_CASE("backward with zero dlogits gives zero gradients") {
    Network net = random_dense_net({3, 4, 2}, 12, {Activation::sigmoid(), Activation::identity()});
    Rng rng(13);
    Matrix x = Matrix::gaussian(4, 3, rng);
    ForwardResult fwd = forward(net, x);
    BackwardResult grads = backward(net, fwd.trace, Matrix(4, 2));
    for (const LayerGrads& g : grads.layers) {
        CHECK(max_abs(g.grad_W) == 0.0);
        for (double b : g.grad_bias) CHECK(b == 0.0);
    }
    CHECK(max_abs(grads.grad_input) == 0.0);
}

TEST_CASE("linear identity net gradient is dlogits^T X") {
    Network net = tiny_identity_net(3);
    std::get<DenseLayer>(net.layers[0]).bias.reset();
    Rng rng(14);
    Matrix x = Matrix::gaussian(5, 3, rng);
    Matrix dlogits = Matrix::gaussian(5, 3, rng);
    ForwardResult fwd = forward(net, x);
    BackwardResult grads = backward(net, fwd.trace, dlogits);
    Matrix expected = oracles::matmul_triple_loop(transpose(dlogits), x);
    CHECK(max_abs(grads.layers[0].grad_W - expected) < 1e-14);
}

TEST_CASE("gradient check against central differences over 20 seeds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Network net = random_dense_net(
            {5, 6, 4, 3}, 1000 + seed,
            {Activation::tanh(), Activation::leaky_relu(0.3), Activation::identity()});
        Rng rng(2000 + seed);
        const int batch = 3;
        Matrix x = Matrix::gaussian(batch, 5, rng);
        std::vector<int> labels(batch);
        for (int i = 0; i < batch; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(3));

        ForwardResult fwd = forward(net, x);
        LossGrad lg = cross_entropy(fwd.logits, labels);
        BackwardResult grads = backward(net, fwd.trace, lg.dlogits);

        double worst = 0.0;
        const double h = 1e-5;
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            DenseLayer& d = std::get<DenseLayer>(net.layers[li]);
            for (std::size_t k = 0; k < d.W.data.size(); ++k) {
                const double keep = d.W.data[k];
                d.W.data[k] = keep + h;
                const double lp = cross_entropy_loss(forward_logits(net, x), labels);
                d.W.data[k] = keep - h;
                const double lm = cross_entropy_loss(forward_logits(net, x), labels);
                d.W.data[k] = keep;
                worst = std::max(worst, oracles::rel_err(grads.layers[li].grad_W.data[k],
                                                         (lp - lm) / (2 * h), 1e-6));
            }
            for (std::size_t k = 0; k < d.bias->size(); ++k) {
                const double keep = (*d.bias)[k];
                (*d.bias)[k] = keep + h;
                const double lp = cross_entropy_loss(forward_logits(net, x), labels);
                (*d.bias)[k] = keep - h;
                const double lm = cross_entropy_loss(forward_logits(net, x), labels);
                (*d.bias)[k] = keep;
                worst = std::max(worst, oracles::rel_err(grads.layers[li].grad_bias[k],
                                                         (lp - lm) / (2 * h), 1e-6));
            }
        }
        for (std::size_t k = 0; k < x.data.size(); ++k) {
            const double keep = x.data[k];
            x.data[k] = keep + h;
            const double lp = cross_entropy_loss(forward_logits(net, x), labels);
            x.data[k] = keep - h;
            const double lm = cross_entropy_loss(forward_logits(net, x), labels);
            x.data[k] = keep;
            worst = std::max(worst, oracles::rel_err(grads.grad_input.data[k], (lp - lm) / (2 * h), 1e-6));
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("three-layer seed-0 weight gradients at 1e-5 relative") {
    Network net = random_dense_net({5, 6, 4, 3}, 0,
                                   {Activation::tanh(), Activation::tanh(), Activation::identity()});
    Rng rng(1);
    Matrix x = Matrix::gaussian(4, 5, rng);
    std::vector<int> labels{0, 1, 2, 1};
    ForwardResult fwd = forward(net, x);
    LossGrad lg = cross_entropy(fwd.logits, labels);
    BackwardResult grads = backward(net, fwd.trace, lg.dlogits);

    const double h = 1e-5;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        DenseLayer& d = std::get<DenseLayer>(net.layers[li]);
        for (std::size_t k = 0; k < d.W.data.size(); ++k) {
            const double keep = d.W.data[k];
            d.W.data[k] = keep + h;
            const double lp = cross_entropy_loss(forward_logits(net, x), labels);
            d.W.data[k] = keep - h;
            const double lm = cross_entropy_loss(forward_logits(net, x), labels);
            d.W.data[k] = keep;
            CHECK(oracles::rel_err(grads.layers[li].grad_W.data[k], (lp - lm) / (2 * h), 1e-5) <= 1e-5);
        }
    }
}
