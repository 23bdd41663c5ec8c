#pragma once

#include <vector>

#include "condlr/data.hpp"
#include "condlr/nn.hpp"

namespace condlr {

// FGSM evaluation budgets. Epsilons ascending, 0 allowed (clean accuracy);
// inputs clamped back into [clamp_lo, clamp_hi].
struct AttackSpec {
    std::vector<double> epsilons{0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06};
    double clamp_lo = 0.0;
    double clamp_hi = 1.0;

    void validate() const;
};

struct RobustnessReport {
    std::vector<double> epsilons;
    std::vector<double> accuracies; // same length, values in [0, 1]
    int sample_count = 0;
};

// X_adv = clamp(X + eps * sign(grad_x L), 0, 1); sign(0) = 0.
Matrix fgsm(const Network& net, const Matrix& x, const std::vector<int>& labels, double eps,
            double clamp_lo = 0.0, double clamp_hi = 1.0);

// Fraction of samples still classified correctly per budget. Deterministic
// given the net and data order; warns (stderr) if accuracy ever increases
// with eps, which is possible but unusual.
RobustnessReport robust_accuracy(const Network& net, const Dataset& data, const AttackSpec& spec,
                                 int batch_size = 256);

// Per-layer cond2 of the effective weights and their product (accumulated in
// log space).
struct CondReport {
    std::vector<double> layer_cond;
    double product = 1.0;
    double log_product = 0.0;
    bool any_rank_deficient = false;
};

CondReport cond_report(const Network& net);

} // namespace condlr
