#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "condlr/checkpoint.hpp"
#include "condlr/data.hpp"
#include "condlr/lowrank.hpp"
#include "condlr/robustness.hpp"

namespace condlr {

struct DataSpec {
    std::string source = "synth"; // synth | mnist
    std::string dir;              // IDX directory; CONDLR_DATA_DIR when empty
    int train_limit = 10000;      // deterministic prefix for mnist
    int test_limit = 2000;
    // synth parameters
    int classes = 10;
    int dim = 784;
    int train_per_class = 200;
    int test_per_class = 50;
    double separation = 3.0;
    std::uint64_t seed = 1234;
};

struct ArchSpec {
    std::vector<int> widths{784, 256, 128, 10};
    Activation hidden = Activation::leaky_relu(0.1);
    Activation final_act = Activation::identity();
    bool bias = true;
};

struct TrainConfig {
    DataSpec data;
    ArchSpec arch;
    TrainVariant variant = TrainVariant::CondLR;
    double tau = 0.1;
    double alpha = 0.5;          // target compression; ignored when ranks set
    std::vector<int> ranks;      // explicit per-layer ranks (optional)
    InitScheme init = InitScheme::SvdOfGaussian;
    double lr = 0.05;
    double momentum = 0.3;
    int epochs = 15;
    int batch_size = 128;
    std::vector<int> milestones; // epochs at which lr *= lr_factor
    double lr_factor = 0.4;
    std::uint64_t seed = 0;
    AttackSpec attack;
    std::string out_dir;         // empty: keep results in memory only
    bool record_timing = true;   // false writes secs as 0 for byte-stable output
    std::string label = "run";

    void validate() const;
};

// One metrics.csv row:
// epoch,loss,acc,racc_eps_<e>...,cond_layer_<i>...,cond_prod,secs
struct MetricsRecord {
    int epoch = 0;
    double loss = 0.0;
    double acc = 0.0;
    std::vector<double> robust_acc;
    std::vector<double> layer_cond;
    double cond_prod = 1.0;
    double secs = 0.0;
};

struct TrainResult {
    Network net;
    std::vector<MetricsRecord> metrics;
    std::vector<double> attack_epsilons;
    std::int64_t param_count = 0;
    std::int64_t dense_param_count = 0;
    double achieved_compression = 0.0;
    std::vector<int> layer_ranks; // -1 for dense layers
    int ridge_events = 0;
    std::string label;
    TrainVariant variant = TrainVariant::CondLR;
};

Dataset build_train_dataset(const DataSpec& spec);
Dataset build_test_dataset(const DataSpec& spec);
Network build_network(const TrainConfig& cfg, Rng& rng);

// Full training loop. Writes metrics.csv, summary.json and checkpoint.bin
// into cfg.out_dir when set. Deterministic given config and seeds.
TrainResult run_train(const TrainConfig& cfg);

// Runs several configs sharing dataset and architecture, writes a joined CSV
// plus cond-vs-epoch and robust-accuracy-vs-eps SVG charts.
std::vector<TrainResult> run_compare(const std::vector<TrainConfig>& cfgs, const std::string& out_dir);

// Conditioning audit of a checkpoint: per-layer cond2, activation constant
// and the cumulative bound. `bounded` is false when an activation has no
// tabulated constant on its default domain.
struct AuditRow {
    int layer = 0;
    std::string activation;
    double cond2 = 0.0;
    double act_constant = 0.0; // NaN when unbounded
    double cumulative = 0.0;   // NaN once unbounded
    bool bounded = true;
};

struct AuditReport {
    std::vector<AuditRow> rows;
    double network_bound = 0.0;
    bool bounded = true;
};

AuditReport run_audit(const Network& net);

// Verification suite entry: one pass/fail row per check.
struct VerifyRow {
    std::string name;
    bool pass = false;
    bool certified = true; // false: ran in report-only mode
    double observed = 0.0;
    double bound = 0.0;
    std::string detail;
};

std::vector<VerifyRow> run_verify(const std::vector<std::string>& selection, std::uint64_t seed);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& rows,
                       const std::vector<double>& epsilons);
void write_summary_json(const std::string& path, const TrainConfig& cfg, const TrainResult& res);

} // namespace condlr
