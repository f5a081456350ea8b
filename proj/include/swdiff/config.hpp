#pragma once

#include "swdiff/lotka.hpp"
#include "swdiff/models.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace swdiff {

/// Flat key=value config with [section] headers; '#' starts a comment.
/// Unknown sections or keys are rejected at parse time.
struct Config {
    std::map<std::string, std::string> run;     // [run]
    std::string model_name;                     // [model] name=
    ParamMap model_params;                      // [model] other keys
    std::map<std::string, std::string> lotka;   // [lotka]
    std::vector<double> table_knots;            // [table] s=
    std::vector<Mat> table_values;              // [table] q=... rows (row-major per knot)
};

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);

std::vector<double> parse_double_list(const std::string& text);

/// LVSpec from the [lotka] section (defaults from default_lv_spec()).
LVSpec lv_spec_from_config(const Config& cfg);

}  // namespace swdiff
