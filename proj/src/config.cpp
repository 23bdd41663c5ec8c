#include "condlr/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace condlr {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Activation Activation::parse(const std::string& spec) {
    std::string name = spec;
    double param = 0.0;
    bool has_param = false;
    if (const std::size_t colon = spec.find(':'); colon != std::string::npos) {
        name = spec.substr(0, colon);
        param = std::stod(spec.substr(colon + 1));
        has_param = true;
    }
    if (name == "identity") return Activation::identity();
    if (name == "leakyrelu") return Activation::leaky_relu(has_param ? param : 0.01);
    if (name == "tanh") return Activation::tanh();
    if (name == "hardtanh") return Activation::hard_tanh(has_param ? param : 1.0);
    if (name == "sigmoid") return Activation::sigmoid();
    if (name == "softplus") return Activation::softplus();
    if (name == "silu") return Activation::silu();
    throw DimensionError("unknown activation: " + spec);
}

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const std::size_t hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                std::ostringstream msg;
                msg << "config line " << lineno << ": unterminated section header";
                throw DataError(msg.str());
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << "config line " << lineno << ": expected key = value";
            throw DataError(msg.str());
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            std::ostringstream msg;
            msg << "config line " << lineno << ": empty key";
            throw DataError(msg.str());
        }
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_overrides(ConfigMap& cfg, const std::vector<std::string>& overrides) {
    for (const std::string& kv : overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw DataError("override must be section.key=value: " + kv);
        cfg[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

namespace {

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw DataError("expected a boolean, got: " + v);
}

template <typename F>
void with(const ConfigMap& cfg, const std::string& key, F&& f) {
    if (auto it = cfg.find(key); it != cfg.end()) f(it->second);
}

} // namespace

TrainConfig train_config_from_map(const ConfigMap& cfg) {
    TrainConfig out;
    try {
        with(cfg, "data.source", [&](const std::string& v) { out.data.source = v; });
        with(cfg, "data.dir", [&](const std::string& v) { out.data.dir = v; });
        with(cfg, "data.train_limit", [&](const std::string& v) { out.data.train_limit = std::stoi(v); });
        with(cfg, "data.test_limit", [&](const std::string& v) { out.data.test_limit = std::stoi(v); });
        with(cfg, "data.classes", [&](const std::string& v) { out.data.classes = std::stoi(v); });
        with(cfg, "data.dim", [&](const std::string& v) { out.data.dim = std::stoi(v); });
        with(cfg, "data.train_per_class", [&](const std::string& v) { out.data.train_per_class = std::stoi(v); });
        with(cfg, "data.test_per_class", [&](const std::string& v) { out.data.test_per_class = std::stoi(v); });
        with(cfg, "data.separation", [&](const std::string& v) { out.data.separation = std::stod(v); });
        with(cfg, "data.seed", [&](const std::string& v) { out.data.seed = std::stoull(v); });

        with(cfg, "model.widths", [&](const std::string& v) { out.arch.widths = parse_int_list(v); });
        with(cfg, "model.activation", [&](const std::string& v) { out.arch.hidden = Activation::parse(v); });
        with(cfg, "model.final_activation", [&](const std::string& v) { out.arch.final_act = Activation::parse(v); });
        with(cfg, "model.bias", [&](const std::string& v) { out.arch.bias = parse_bool(v); });

        with(cfg, "train.variant", [&](const std::string& v) { out.variant = parse_variant(v); });
        with(cfg, "train.tau", [&](const std::string& v) { out.tau = std::stod(v); });
        with(cfg, "train.alpha", [&](const std::string& v) { out.alpha = std::stod(v); });
        with(cfg, "train.ranks", [&](const std::string& v) { out.ranks = parse_int_list(v); });
        with(cfg, "train.init", [&](const std::string& v) {
            if (v == "svd_of_gaussian") out.init = InitScheme::SvdOfGaussian;
            else if (v == "exp_decay") out.init = InitScheme::ExpDecay;
            else throw DataError("unknown init scheme: " + v);
        });
        with(cfg, "train.lr", [&](const std::string& v) { out.lr = std::stod(v); });
        with(cfg, "train.momentum", [&](const std::string& v) { out.momentum = std::stod(v); });
        with(cfg, "train.epochs", [&](const std::string& v) { out.epochs = std::stoi(v); });
        with(cfg, "train.batch", [&](const std::string& v) { out.batch_size = std::stoi(v); });
        with(cfg, "train.milestones", [&](const std::string& v) { out.milestones = parse_int_list(v); });
        with(cfg, "train.factor", [&](const std::string& v) { out.lr_factor = std::stod(v); });
        with(cfg, "train.seed", [&](const std::string& v) { out.seed = std::stoull(v); });
        with(cfg, "train.out", [&](const std::string& v) { out.out_dir = v; });
        with(cfg, "train.label", [&](const std::string& v) { out.label = v; });
        with(cfg, "train.timing", [&](const std::string& v) {
            if (v == "wall") out.record_timing = true;
            else if (v == "none") out.record_timing = false;
            else throw DataError("train.timing must be wall or none");
        });

        with(cfg, "attack.epsilons", [&](const std::string& v) { out.attack.epsilons = parse_double_list(v); });
    } catch (const std::invalid_argument&) {
        throw DataError("config: malformed numeric value");
    } catch (const std::out_of_range&) {
        throw DataError("config: numeric value out of range");
    }
    return out;
}

} // namespace condlr
