#pragma once

#include <functional>
#include <string>

#include "condlr/nn.hpp"

namespace condlr {

// Feature-space domain an activation constant is claimed on.
struct Domain {
    enum class Kind { AllReals, NonNegative, Interval };
    Kind kind = Kind::AllReals;
    double lo = 0.0;
    double hi = 0.0;

    static Domain all_reals() { return {Kind::AllReals, 0.0, 0.0}; }
    static Domain nonnegative() { return {Kind::NonNegative, 0.0, 0.0}; }
    static Domain interval(double lo, double hi) { return {Kind::Interval, lo, hi}; }
    std::string describe() const;
};

// The constant C with sup_x cond(sigma; x) <= C on the declared domain.
struct CondConstant {
    Activation activation;
    Domain domain;
    double value = 0.0;
    std::string note; // e.g. the LeakyReLU alpha > 1 flag
};

// Closed-form table: LeakyReLU(alpha) on R -> max(alpha,1); Tanh on R -> 1;
// HardTanh(a) on [-a,a] -> a; Sigmoid on x>=0 -> 1/e; Softplus on x>=0 -> 1;
// SiLU on x>=0 -> 1+1/e; Identity -> 1. Unsupported pairs (unbounded
// constants) throw NumericalError.
CondConstant activation_cond_closed_form(const Activation& act, const Domain& domain);

struct EmpiricalSup {
    double value = 0.0;   // sup over the grid of |sigma'(x)| |x| / |sigma(x)|
    double arg_x = 0.0;   // grid point attaining it
    bool at_window_edge = false;
};

// Grid supremum of the local condition ratio. Unbounded domains are sampled
// on a window (default [-50,50] / [0,50]); one-sided derivative selections
// are both tested at kinks. The result is a lower bound of the true sup.
EmpiricalSup activation_cond_empirical(const Activation& act, const Domain& domain,
                                       int grid_size = 100001, double window = 50.0);

// Default claim domain per activation kind, matching the closed-form table.
Domain default_domain(const Activation& act);

// Product of activation constants and layer cond2 values (log-space).
// Throws when any activation lacks a supported constant on its default
// domain.
double network_cond_bound(const Network& net);

// Sampled lower bound of cond(f; x): max relative-error ratio over random
// unit perturbation directions of relative size epsilon.
struct EmpiricalCondEstimate {
    Vector x;
    double epsilon = 0.0;
    int num_directions = 0;
    double estimate = 0.0;
};

using VectorFn = std::function<Vector(const Vector&)>;

EmpiricalCondEstimate empirical_cond_at(const VectorFn& f, const Vector& x, double epsilon,
                                        int num_dirs, std::uint64_t seed);

// Wrap a network as a vector function for empirical conditioning probes.
VectorFn network_fn(const Network& net);

} // namespace condlr
