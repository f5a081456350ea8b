#include "swdiff/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace swdiff {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

const std::vector<std::string> kRunKeys = {
    "seed", "threads", "paths",   "steps", "T",       "out",     "check", "x0",
    "i0",   "deltas",  "p",       "n",     "h",       "dt_list", "moment",
    "n_checks", "y0",  "offsets", "model", "direction"};

bool is_run_key(const std::string& key) {
    return std::find(kRunKeys.begin(), kRunKeys.end(), key) != kRunKeys.end();
}

bool is_lotka_key(const std::string& key, int max_regimes = 16) {
    if (key == "r" || key == "m0" || key == "rates" || key == "Q" || key == "M") return true;
    for (int k = 1; k <= max_regimes; ++k) {
        const std::string suffix = std::to_string(k);
        if (key == "b" + suffix || key == "A" + suffix || key == "sigma" + suffix) return true;
    }
    return false;
}

Mat parse_matrix(const std::string& text, int rows, int cols, const std::string& what) {
    const std::vector<double> vals = parse_double_list(text);
    if (static_cast<int>(vals.size()) != rows * cols)
        throw ConfigError(what + ": expected " + std::to_string(rows * cols) + " entries, got " +
                          std::to_string(vals.size()));
    Mat out(rows, cols);
    for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b) out(a, b) = vals[static_cast<std::size_t>(a * cols + b)];
    return out;
}

Vec parse_vector(const std::string& text, int len, const std::string& what) {
    const std::vector<double> vals = parse_double_list(text);
    if (static_cast<int>(vals.size()) != len)
        throw ConfigError(what + ": expected " + std::to_string(len) + " entries");
    Vec out(len);
    for (int a = 0; a < len; ++a) out[a] = vals[static_cast<std::size_t>(a)];
    return out;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in list: " + text);
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            throw ConfigError("not a number: " + item);
        }
        if (pos != item.size()) throw ConfigError("not a number: " + item);
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

Config parse_config_text(const std::string& text) {
    Config cfg;
    std::map<std::string, std::string> table_raw;
    std::istringstream in(text);
    std::string line;
    std::string section = "run";
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "model" && section != "lotka" && section != "table")
                throw ConfigError("unknown section: [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (section == "run") {
            if (!is_run_key(key)) throw ConfigError("unknown [run] key: " + key);
            cfg.run[key] = value;
        } else if (section == "model") {
            if (key == "name") {
                cfg.model_name = value;
            } else {
                try {
                    cfg.model_params[key] = std::stod(value);
                } catch (const std::exception&) {
                    throw ConfigError("[model] " + key + ": not a number: " + value);
                }
            }
        } else if (section == "lotka") {
            if (!is_lotka_key(key)) throw ConfigError("unknown [lotka] key: " + key);
            cfg.lotka[key] = value;
        } else {
            if (key != "s" && (key.size() < 2 || key[0] != 'q'))
                throw ConfigError("unknown [table] key: " + key);
            table_raw[key] = value;
        }
    }
    if (!table_raw.empty()) {
        const auto it = table_raw.find("s");
        if (it == table_raw.end()) throw ConfigError("[table]: missing knots key s");
        cfg.table_knots = parse_double_list(it->second);
        for (std::size_t k = 1; k + 1 <= cfg.table_knots.size(); ++k) {
            if (!(cfg.table_knots[k] > cfg.table_knots[k - 1]))
                throw ConfigError("[table]: knots must be strictly increasing");
        }
        const std::size_t n_knots = cfg.table_knots.size();
        for (std::size_t k = 1; k <= n_knots; ++k) {
            const auto qit = table_raw.find("q" + std::to_string(k));
            if (qit == table_raw.end()) throw ConfigError("[table]: missing q" + std::to_string(k));
            const std::vector<double> vals = parse_double_list(qit->second);
            const int m0 = static_cast<int>(std::lround(std::sqrt(static_cast<double>(vals.size()))));
            if (m0 * m0 != static_cast<int>(vals.size()))
                throw ConfigError("[table] q" + std::to_string(k) + ": entry count must be a square");
            cfg.table_values.push_back(parse_matrix(qit->second, m0, m0, "q" + std::to_string(k)));
        }
        if (table_raw.size() != n_knots + 1) throw ConfigError("[table]: extra q rows beyond the knot count");
    }
    return cfg;
}

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

LVSpec lv_spec_from_config(const Config& cfg) {
    LVSpec spec = default_lv_spec();
    const auto& kv = cfg.lotka;
    auto get = [&](const std::string& key) -> const std::string* {
        const auto it = kv.find(key);
        return (it == kv.end()) ? nullptr : &it->second;
    };
    if (const auto* v = get("r")) spec.r = std::stoi(*v);
    int m0 = spec.regimes.m0;
    if (const auto* v = get("m0")) m0 = std::stoi(*v);
    spec.regimes = RegimeSpace(m0);
    if (get("r") || get("m0")) {
        // dimensions changed: per-regime arrays must be supplied in full
        spec.growth.assign(static_cast<std::size_t>(m0), Vec::Zero(spec.r));
        spec.interaction.assign(static_cast<std::size_t>(m0), Mat::Identity(spec.r, spec.r));
        spec.noise.assign(static_cast<std::size_t>(m0), Vec::Zero(spec.r));
    }
    for (int k = 1; k <= m0; ++k) {
        const std::string suffix = std::to_string(k);
        if (const auto* v = get("b" + suffix))
            spec.growth[static_cast<std::size_t>(k - 1)] = parse_vector(*v, spec.r, "b" + suffix);
        if (const auto* v = get("A" + suffix))
            spec.interaction[static_cast<std::size_t>(k - 1)] =
                parse_matrix(*v, spec.r, spec.r, "A" + suffix);
        if (const auto* v = get("sigma" + suffix))
            spec.noise[static_cast<std::size_t>(k - 1)] = parse_vector(*v, spec.r, "sigma" + suffix);
    }
    Mat base = Mat::Zero(m0, m0);
    if (const auto* v = get("Q")) {
        base = parse_matrix(*v, m0, m0, "Q");
    } else if (m0 == 2) {
        base = spec.rates(Vec::Ones(spec.r));  // default spec's constant matrix
    }
    std::string family = "constant";
    if (const auto* v = get("rates")) family = *v;
    RateTable table;
    if (family == "table") {
        if (cfg.table_knots.empty()) throw ConfigError("[lotka] rates=table needs a [table] section");
        table.knots = cfg.table_knots;
        table.values = cfg.table_values;
        for (const Mat& q : table.values) {
            if (q.rows() != m0) throw ConfigError("[table]: matrix size does not match m0");
        }
    }
    spec.rates = make_lv_rates(family, base, table);
    double max_off = 0.0;
    for (int a = 0; a < m0; ++a)
        for (int b = 0; b < m0; ++b)
            if (a != b) max_off = std::max(max_off, std::abs(base(a, b)));
    if (family == "table") {
        for (const Mat& q : table.values)
            for (int a = 0; a < m0; ++a)
                for (int b = 0; b < m0; ++b)
                    if (a != b) max_off = std::max(max_off, std::abs(q(a, b)));
    }
    spec.rate_bound = max_off + 0.5;
    if (const auto* v = get("M")) spec.rate_bound = std::stod(*v);
    spec.validate();
    return spec;
}

}  // namespace swdiff
