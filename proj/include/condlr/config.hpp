#pragma once

#include <map>
#include <string>
#include <vector>

#include "condlr/train.hpp"

namespace condlr {

// Flat key=value config with [section] headers; keys are stored
// section-qualified ("train.lr"). '#' starts a comment. Later assignments and
// override entries win.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::string& path);
void apply_overrides(ConfigMap& cfg, const std::vector<std::string>& key_equals_value);

TrainConfig train_config_from_map(const ConfigMap& cfg);

std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

} // namespace condlr
