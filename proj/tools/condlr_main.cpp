#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "condlr/config.hpp"
#include "condlr/train.hpp"

namespace {

using namespace condlr;

// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

TrainConfig build_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    ConfigMap map;
    if (!config_path.empty()) map = load_config_file(config_path);
    apply_overrides(map, overrides);
    return train_config_from_map(map);
}

void print_final(const TrainResult& res) {
    const MetricsRecord& last = res.metrics.back();
    std::cout << res.label << " [" << variant_name(res.variant) << "] epoch " << last.epoch
              << ": loss " << last.loss << ", clean acc " << last.acc << ", cond prod "
              << last.cond_prod << ", params " << res.param_count << " ("
              << 100.0 * res.achieved_compression << "% compressed)\n";
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    TrainConfig cfg = build_config(config_path, overrides);
    if (cfg.out_dir.empty()) cfg.out_dir = "runs/" + cfg.label;
    TrainResult res = run_train(cfg);
    print_final(res);
    std::cout << "wrote " << cfg.out_dir << "/metrics.csv, summary.json, checkpoint.bin\n";
    return kExitOk;
}

int cmd_compare(const std::vector<std::string>& config_paths,
                const std::vector<std::string>& overrides, std::string out_dir) {
    std::vector<TrainConfig> cfgs;
    for (const std::string& path : config_paths) {
        TrainConfig cfg = build_config(path, overrides);
        if (cfg.label == "run")
            cfg.label = std::filesystem::path(path).stem().string();
        cfg.out_dir = (out_dir.empty() ? "runs/compare" : out_dir) + "/" + cfg.label;
        cfgs.push_back(std::move(cfg));
    }
    if (out_dir.empty()) out_dir = "runs/compare";
    std::vector<TrainResult> results = run_compare(cfgs, out_dir);
    for (const TrainResult& r : results) print_final(r);
    std::cout << "wrote " << out_dir << "/compare.csv and SVG charts\n";
    return kExitOk;
}

int cmd_attack(const std::string& checkpoint, const std::string& config_path,
               const std::vector<std::string>& overrides, const std::string& out_csv) {
    TrainConfig cfg = build_config(config_path, overrides);
    Network net = load_checkpoint(checkpoint);
    Dataset test = build_test_dataset(cfg.data);
    RobustnessReport rep = robust_accuracy(net, test, cfg.attack);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_csv.empty()) {
        file.open(out_csv);
        if (!file) throw DataError("cannot write " + out_csv);
        out = &file;
    }
    *out << "eps,robust_acc,samples\n";
    for (std::size_t i = 0; i < rep.epsilons.size(); ++i)
        *out << rep.epsilons[i] << ',' << std::setprecision(17) << rep.accuracies[i] << ','
             << rep.sample_count << '\n';
    return kExitOk;
}

int cmd_audit(const std::string& checkpoint, const std::string& out_csv) {
    Network net = load_checkpoint(checkpoint);
    AuditReport rep = run_audit(net);

    std::cout << "layer  activation  cond2        act_const    cumulative\n";
    for (const AuditRow& row : rep.rows) {
        std::cout << std::left << std::setw(7) << row.layer << std::setw(12) << row.activation
                  << std::setw(13) << row.cond2;
        if (row.bounded)
            std::cout << std::setw(13) << row.act_constant << row.cumulative << '\n';
        else
            std::cout << std::setw(13) << "unbounded" << "unbounded\n";
    }
    if (rep.bounded)
        std::cout << "network conditioning bound: " << rep.network_bound << '\n';
    else
        std::cout << "network conditioning bound: unbounded\n";

    if (!out_csv.empty()) {
        std::ofstream file(out_csv);
        if (!file) throw DataError("cannot write " + out_csv);
        file << "layer,activation,cond2,act_constant,cumulative\n";
        for (const AuditRow& row : rep.rows) {
            file << row.layer << ',' << row.activation << ',' << std::setprecision(17) << row.cond2 << ',';
            if (row.bounded) file << row.act_constant << ',' << row.cumulative << '\n';
            else file << "unbounded,unbounded\n";
        }
    }
    return kExitOk;
}

int cmd_verify(const std::vector<std::string>& selection, std::uint64_t seed,
               const std::string& out_csv) {
    std::vector<VerifyRow> rows = run_verify(selection, seed);
    bool all_pass = true;
    std::cout << std::left << std::setw(24) << "check" << std::setw(8) << "status"
              << std::setw(16) << "observed" << std::setw(16) << "bound" << "detail\n";
    for (const VerifyRow& r : rows) {
        const char* status = r.certified ? (r.pass ? "pass" : "FAIL") : "report";
        if (r.certified && !r.pass) all_pass = false;
        std::cout << std::left << std::setw(24) << r.name << std::setw(8) << status
                  << std::setw(16) << r.observed << std::setw(16) << r.bound << r.detail << '\n';
        if (!r.certified)
            std::cout << "warning: " << r.name << " ran in report-only mode (not certified)\n";
    }
    if (!out_csv.empty()) {
        std::ofstream file(out_csv);
        if (!file) throw DataError("cannot write " + out_csv);
        file << "check,status,observed,bound,detail\n";
        for (const VerifyRow& r : rows)
            file << r.name << ',' << (r.certified ? (r.pass ? "pass" : "fail") : "report") << ','
                 << std::setprecision(17) << r.observed << ',' << r.bound << ',' << r.detail << '\n';
    }
    return all_pass ? kExitOk : kExitNumerical;
}

int cmd_data_gen(int n_per_class, int classes, int dim, double separation, std::uint64_t seed,
                 const std::string& out_dir, int img_rows, int img_cols) {
    if (img_rows * img_cols != dim) {
        if (img_rows != 0 || img_cols != 0)
            throw DataError("image rows*cols must equal dim");
        img_rows = 1;
        img_cols = dim;
    }
    Dataset ds = synth_blobs(n_per_class, classes, dim, separation, seed);
    std::filesystem::create_directories(out_dir);
    write_idx_images(out_dir + "/train-images-idx3-ubyte", ds.features, img_rows, img_cols);
    write_idx_labels(out_dir + "/train-labels-idx1-ubyte", ds.labels);
    Dataset test = synth_blobs(std::max(1, n_per_class / 4), classes, dim, separation, seed + 1);
    write_idx_images(out_dir + "/t10k-images-idx3-ubyte", test.features, img_rows, img_cols);
    write_idx_labels(out_dir + "/t10k-labels-idx1-ubyte", test.labels);
    std::cout << "wrote IDX pairs (" << ds.size() << " train / " << test.size() << " test) to "
              << out_dir << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"condlr: condition-bounded low-rank network training"};
    app.require_subcommand(1);

    std::string config_path, out_dir, out_csv, checkpoint;
    std::vector<std::string> overrides, config_paths, selection;
    std::uint64_t seed = 0;
    int n_per_class = 200, classes = 10, dim = 784, img_rows = 28, img_cols = 28;
    double separation = 3.0;

    CLI::App* train = app.add_subcommand("train", "train one configuration");
    train->add_option("-c,--config", config_path, "config file (key = value with [sections])");
    train->add_option("-s,--set", overrides, "override entries, section.key=value");

    CLI::App* compare = app.add_subcommand("compare", "train several configs and join the metrics");
    compare->add_option("configs", config_paths, "config files")->required()->expected(-1);
    compare->add_option("-s,--set", overrides, "override entries applied to every config");
    compare->add_option("-o,--out", out_dir, "output directory (default runs/compare)");

    CLI::App* attack = app.add_subcommand("attack", "FGSM robust accuracy of a checkpoint");
    attack->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    attack->add_option("-c,--config", config_path, "config providing the dataset and epsilons");
    attack->add_option("-s,--set", overrides, "override entries");
    attack->add_option("-o,--out", out_csv, "CSV output path (default stdout)");

    CLI::App* audit = app.add_subcommand("audit", "conditioning report of a checkpoint");
    audit->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    audit->add_option("-o,--out", out_csv, "CSV output path");

    CLI::App* verify = app.add_subcommand("verify", "run the numerical verification suite");
    verify->add_option("suites", selection,
                       "subset of: activations composition curvature theorem2 gradients");
    verify->add_option("--seed", seed, "base seed");
    verify->add_option("-o,--out", out_csv, "CSV output path");

    CLI::App* data = app.add_subcommand("data", "dataset utilities");
    CLI::App* gen = data->add_subcommand("gen", "generate a synthetic blob dataset as IDX files");
    gen->add_option("-n,--per-class", n_per_class, "train samples per class");
    gen->add_option("-k,--classes", classes, "number of classes");
    gen->add_option("-d,--dim", dim, "feature dimension");
    gen->add_option("--separation", separation, "center separation vs unit noise");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--rows", img_rows, "image rows for the IDX header");
    gen->add_option("--cols", img_cols, "image cols for the IDX header");
    gen->add_option("-o,--out", out_dir, "output directory")->required();
    data->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train) return cmd_train(config_path, overrides);
        if (*compare) return cmd_compare(config_paths, overrides, out_dir);
        if (*attack) return cmd_attack(checkpoint, config_path, overrides, out_csv);
        if (*audit) return cmd_audit(checkpoint, out_csv);
        if (*verify) return cmd_verify(selection, seed, out_csv);
        if (*gen) return cmd_data_gen(n_per_class, classes, dim, separation, seed, out_dir,
                                      img_rows, img_cols);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
