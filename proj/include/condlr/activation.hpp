#pragma once

#include <cmath>
#include <string>

#include "condlr/errors.hpp"

namespace condlr {

enum class ActKind { Identity, LeakyReLU, Tanh, HardTanh, Sigmoid, Softplus, SiLU };

// Entrywise activation. `param` is the LeakyReLU slope alpha or the HardTanh
// bound a; unused otherwise.
struct Activation {
    ActKind kind = ActKind::Identity;
    double param = 0.0;

    static Activation identity() { return {ActKind::Identity, 0.0}; }
    static Activation leaky_relu(double alpha) {
        if (alpha <= 0.0) throw DimensionError("LeakyReLU slope must be positive");
        return {ActKind::LeakyReLU, alpha};
    }
    static Activation tanh() { return {ActKind::Tanh, 0.0}; }
    static Activation hard_tanh(double bound) {
        if (bound <= 0.0) throw DimensionError("HardTanh bound must be positive");
        return {ActKind::HardTanh, bound};
    }
    static Activation sigmoid() { return {ActKind::Sigmoid, 0.0}; }
    static Activation softplus() { return {ActKind::Softplus, 0.0}; }
    static Activation silu() { return {ActKind::SiLU, 0.0}; }

    double operator()(double x) const {
        switch (kind) {
            case ActKind::Identity: return x;
            case ActKind::LeakyReLU: return x >= 0.0 ? x : param * x;
            case ActKind::Tanh: return std::tanh(x);
            case ActKind::HardTanh: return x > param ? param : (x < -param ? -param : x);
            case ActKind::Sigmoid: return stable_sigmoid(x);
            case ActKind::Softplus: return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
            case ActKind::SiLU: return x * stable_sigmoid(x);
        }
        return x;
    }

    // Training derivative. Kinks use a fixed Clarke selection: LeakyReLU at 0
    // takes slope 1, HardTanh at +-a takes 1, so steps are deterministic.
    double derivative(double x) const {
        switch (kind) {
            case ActKind::Identity: return 1.0;
            case ActKind::LeakyReLU: return x >= 0.0 ? 1.0 : param;
            case ActKind::Tanh: {
                const double t = std::tanh(x);
                return 1.0 - t * t;
            }
            case ActKind::HardTanh: return (x >= -param && x <= param) ? 1.0 : 0.0;
            case ActKind::Sigmoid: {
                const double s = stable_sigmoid(x);
                return s * (1.0 - s);
            }
            case ActKind::Softplus: return stable_sigmoid(x);
            case ActKind::SiLU: {
                const double s = stable_sigmoid(x);
                return s * (1.0 + x * (1.0 - s));
            }
        }
        return 1.0;
    }

    // One-sided derivatives; differ from derivative() only at kink points.
    double derivative_left(double x) const {
        if (kind == ActKind::LeakyReLU && x == 0.0) return param;
        if (kind == ActKind::HardTanh && x == -param) return 0.0;
        return derivative(x);
    }
    double derivative_right(double x) const {
        if (kind == ActKind::HardTanh && x == param) return 0.0;
        return derivative(x);
    }

    std::string name() const {
        switch (kind) {
            case ActKind::Identity: return "identity";
            case ActKind::LeakyReLU: return "leakyrelu";
            case ActKind::Tanh: return "tanh";
            case ActKind::HardTanh: return "hardtanh";
            case ActKind::Sigmoid: return "sigmoid";
            case ActKind::Softplus: return "softplus";
            case ActKind::SiLU: return "silu";
        }
        return "identity";
    }

    static Activation parse(const std::string& spec);

private:
    static double stable_sigmoid(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    }
};

} // namespace condlr
