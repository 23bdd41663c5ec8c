#include "condlr/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace condlr {

void AttackSpec::validate() const {
    if (epsilons.empty()) throw DimensionError("attack spec needs at least one epsilon");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (epsilons[i] < 0.0) throw DimensionError("attack epsilons must be nonnegative");
        if (i > 0 && epsilons[i] < epsilons[i - 1])
            throw DimensionError("attack epsilons must be sorted ascending");
    }
    if (clamp_lo >= clamp_hi) throw DimensionError("attack clamp interval is empty");
}

Matrix fgsm(const Network& net, const Matrix& x, const std::vector<int>& labels, double eps,
            double clamp_lo, double clamp_hi) {
    if (eps < 0.0) throw DimensionError("fgsm: eps must be nonnegative");
    if (eps == 0.0) return x;

    ForwardResult fwd = forward(net, x);
    LossGrad lg = cross_entropy(fwd.logits, labels);
    Matrix grad = backward(net, fwd.trace, lg.dlogits).grad_input;

    Matrix adv = x;
    for (std::size_t i = 0; i < adv.data.size(); ++i) {
        const double g = grad.data[i];
        const double s = (g > 0.0) ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        adv.data[i] = std::clamp(adv.data[i] + eps * s, clamp_lo, clamp_hi);
    }
    return adv;
}

RobustnessReport robust_accuracy(const Network& net, const Dataset& data, const AttackSpec& spec,
                                 int batch_size) {
    spec.validate();
    if (data.size() == 0) throw DataError("robust_accuracy: empty dataset");

    RobustnessReport report;
    report.epsilons = spec.epsilons;
    report.accuracies.assign(spec.epsilons.size(), 0.0);
    report.sample_count = data.size();

    std::vector<std::size_t> hits(spec.epsilons.size(), 0);
    for (int start = 0; start < data.size(); start += batch_size) {
        const int end = std::min(start + batch_size, data.size());
        std::vector<int> idx(static_cast<std::size_t>(end - start));
        for (int i = start; i < end; ++i) idx[static_cast<std::size_t>(i - start)] = i;
        Matrix xb = gather_rows(data.features, idx);
        std::vector<int> yb = gather_labels(data.labels, idx);

        for (std::size_t e = 0; e < spec.epsilons.size(); ++e) {
            Matrix xadv = fgsm(net, xb, yb, spec.epsilons[e], spec.clamp_lo, spec.clamp_hi);
            std::vector<int> pred = predict(forward_logits(net, xadv));
            for (std::size_t i = 0; i < yb.size(); ++i)
                if (pred[i] == yb[i]) ++hits[e];
        }
    }
    for (std::size_t e = 0; e < hits.size(); ++e)
        report.accuracies[e] = static_cast<double>(hits[e]) / report.sample_count;

    for (std::size_t e = 1; e < report.accuracies.size(); ++e) {
        if (report.accuracies[e] > report.accuracies[e - 1] + 1e-12) {
            std::cerr << "warning: robust accuracy increased from eps=" << report.epsilons[e - 1]
                      << " to eps=" << report.epsilons[e] << " (" << report.accuracies[e - 1]
                      << " -> " << report.accuracies[e] << ")\n";
        }
    }
    return report;
}

CondReport cond_report(const Network& net) {
    CondReport report;
    report.layer_cond.reserve(net.layers.size());
    double log_acc = 0.0;
    for (const Layer& l : net.layers) {
        Cond2 c = cond2_from_sigma(effective_singular_values(l));
        report.layer_cond.push_back(c.value);
        report.any_rank_deficient = report.any_rank_deficient || c.rank_deficient;
        log_acc += std::log(c.value);
    }
    report.log_product = log_acc;
    report.product = std::exp(log_acc);
    return report;
}

} // namespace condlr
