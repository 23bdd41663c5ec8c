#include "condlr/conditioning.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "condlr/robustness.hpp"

namespace condlr {

std::string Domain::describe() const {
    switch (kind) {
        case Kind::AllReals: return "R";
        case Kind::NonNegative: return "x>=0";
        case Kind::Interval: {
            std::ostringstream os;
            os << "[" << lo << "," << hi << "]";
            return os.str();
        }
    }
    return "R";
}

CondConstant activation_cond_closed_form(const Activation& act, const Domain& domain) {
    CondConstant out;
    out.activation = act;
    out.domain = domain;
    switch (act.kind) {
        case ActKind::Identity:
            out.value = 1.0;
            return out;
        case ActKind::LeakyReLU:
            if (domain.kind != Domain::Kind::AllReals)
                throw NumericalError("LeakyReLU constant is tabulated on all of R");
            out.value = std::max(act.param, 1.0);
            if (act.param > 1.0) out.note = "alpha > 1: constant exceeds 1";
            return out;
        case ActKind::Tanh:
            if (domain.kind != Domain::Kind::AllReals)
                throw NumericalError("Tanh constant is tabulated on all of R");
            out.value = 1.0;
            return out;
        case ActKind::HardTanh:
            if (domain.kind != Domain::Kind::Interval || domain.lo != -act.param || domain.hi != act.param)
                throw NumericalError("HardTanh(a) constant is tabulated on [-a, a]");
            out.value = act.param;
            return out;
        case ActKind::Sigmoid:
            if (domain.kind == Domain::Kind::AllReals)
                throw NumericalError("Sigmoid condition constant is unbounded on negative inputs");
            if (domain.kind == Domain::Kind::Interval && domain.lo < 0.0)
                throw NumericalError("Sigmoid condition constant is unbounded on negative inputs");
            out.value = 1.0 / std::exp(1.0);
            return out;
        case ActKind::Softplus:
            if (domain.kind == Domain::Kind::AllReals)
                throw NumericalError("Softplus condition constant is unbounded on negative inputs");
            if (domain.kind == Domain::Kind::Interval && domain.lo < 0.0)
                throw NumericalError("Softplus condition constant is unbounded on negative inputs");
            out.value = 1.0;
            return out;
        case ActKind::SiLU:
            if (domain.kind == Domain::Kind::AllReals)
                throw NumericalError("SiLU condition constant is unbounded on negative inputs");
            if (domain.kind == Domain::Kind::Interval && domain.lo < 0.0)
                throw NumericalError("SiLU condition constant is unbounded on negative inputs");
            out.value = 1.0 + 1.0 / std::exp(1.0);
            return out;
    }
    throw NumericalError("unsupported activation/domain pair");
}

EmpiricalSup activation_cond_empirical(const Activation& act, const Domain& domain,
                                       int grid_size, double window) {
    if (grid_size < 1000) throw DimensionError("empirical constant needs grid_size >= 1000");
    double lo, hi;
    switch (domain.kind) {
        case Domain::Kind::AllReals: lo = -window; hi = window; break;
        case Domain::Kind::NonNegative: lo = 0.0; hi = window; break;
        case Domain::Kind::Interval: lo = domain.lo; hi = domain.hi; break;
        default: lo = -window; hi = window; break;
    }

    EmpiricalSup sup;
    const double step = (hi - lo) / (grid_size - 1);
    for (int i = 0; i < grid_size; ++i) {
        const double x = lo + step * i;
        if (x == 0.0) continue; // ratio extends by continuity; neighbors cover the limit
        const double fx = act(x);
        const double num = std::max(std::abs(act.derivative_left(x)), std::abs(act.derivative_right(x)));
        if (fx == 0.0) {
            if (num * std::abs(x) != 0.0) {
                sup.value = std::numeric_limits<double>::infinity();
                sup.arg_x = x;
                return sup;
            }
            continue;
        }
        const double ratio = num * std::abs(x) / std::abs(fx);
        if (ratio > sup.value) {
            sup.value = ratio;
            sup.arg_x = x;
        }
    }
    sup.at_window_edge = std::abs(sup.arg_x - lo) < step || std::abs(hi - sup.arg_x) < step;
    return sup;
}

Domain default_domain(const Activation& act) {
    switch (act.kind) {
        case ActKind::HardTanh: return Domain::interval(-act.param, act.param);
        case ActKind::Sigmoid:
        case ActKind::Softplus:
        case ActKind::SiLU: return Domain::nonnegative();
        default: return Domain::all_reals();
    }
}

double network_cond_bound(const Network& net) {
    double log_acc = 0.0;
    for (const Layer& l : net.layers) {
        const Activation& act = layer_activation(l);
        CondConstant c = activation_cond_closed_form(act, default_domain(act));
        log_acc += std::log(c.value);
        log_acc += std::log(cond2_from_sigma(effective_singular_values(l)).value);
    }
    return std::exp(log_acc);
}

namespace {

double norm2(const Vector& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

} // namespace

EmpiricalCondEstimate empirical_cond_at(const VectorFn& f, const Vector& x, double epsilon,
                                        int num_dirs, std::uint64_t seed) {
    if (epsilon <= 0.0) throw DimensionError("empirical_cond_at: epsilon must be positive");
    if (num_dirs < 1) throw DimensionError("empirical_cond_at: need at least one direction");
    const double xn = norm2(x);
    if (xn == 0.0) throw DimensionError("empirical_cond_at: x must be nonzero");
    Vector fx = f(x);
    const double fn = norm2(fx);
    if (fn == 0.0) throw NumericalError("empirical_cond_at: f(x) = 0, relative error undefined");

    Rng rng(seed);
    EmpiricalCondEstimate out;
    out.x = x;
    out.epsilon = epsilon;
    out.num_directions = num_dirs;
    const double delta_norm = epsilon * xn;
    for (int d = 0; d < num_dirs; ++d) {
        Vector u(x.size());
        double un = 0.0;
        do {
            for (double& v : u) v = rng.normal();
            un = norm2(u);
        } while (un == 0.0);
        Vector xp = x;
        for (std::size_t i = 0; i < x.size(); ++i) xp[i] += delta_norm * u[i] / un;
        Vector fp = f(xp);
        double diff = 0.0;
        for (std::size_t i = 0; i < fp.size(); ++i) {
            const double dd = fp[i] - fx[i];
            diff += dd * dd;
        }
        const double ratio = (std::sqrt(diff) / fn) / (delta_norm / xn);
        out.estimate = std::max(out.estimate, ratio);
    }
    return out;
}

VectorFn network_fn(const Network& net) {
    return [net](const Vector& x) -> Vector {
        Matrix in(1, static_cast<int>(x.size()), x);
        Matrix logits = forward_logits(net, in);
        return logits.data;
    };
}

} // namespace condlr
