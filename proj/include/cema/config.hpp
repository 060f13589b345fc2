#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cema/trainer.hpp"

namespace cema {

// Full run description loaded from a flat key=value file with [section]
// headers. Unknown keys are rejected; keys left out fall back to defaults
// and are reported so the effective configuration is always visible.
struct CliConfig {
    RunConfig run;
    std::vector<std::size_t> hidden = {32};
    std::string out_dir = "out";
    // Keys that were not present in the parsed file.
    std::vector<std::string> defaulted_keys;
};

// The stock configuration: 6 rotated-Gaussian tasks, pi/6 drift, a single
// 32-unit tanh hidden layer, one epoch per task.
CliConfig default_config();

CliConfig parse_config(std::istream& is);
CliConfig parse_config_file(const std::string& path);

} // namespace cema
