#include "cema/config.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace cema {

namespace {

// Every recognized section.key, in the order defaults are reported.
const std::vector<std::string> kKnownKeys = {
    "tasks.kind",        "tasks.num_tasks",    "tasks.train_per_task",
    "tasks.test_per_task", "tasks.input_dim",  "tasks.num_classes",
    "tasks.seed",        "tasks.drift",        "net.hidden",
    "net.activation",    "net.init_seed",      "train.policy",
    "train.lr",          "train.batch_size",   "train.epochs_per_task",
    "train.beta",        "train.clamp",        "train.run_seed",
    "train.eval_both",   "train.beta_aggregate", "output.dir",
};

double parse_double(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw ConfigError("config: key '" + key + "': bad number '" + value + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw ConfigError("config: key '" + key + "': bad integer '" + value + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: key '" + key + "': bad boolean '" + value + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) {
            throw ConfigError("config: key '" + key + "': empty list element");
        }
        out.push_back(parse_count(key, item.substr(b, e - b + 1)));
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

} // namespace

CliConfig default_config() {
    CliConfig config;
    config.run.task_config = TaskConfig{};
    config.hidden = {32};
    config.run.net_spec = derive_net_spec(config.run.task_config, config.hidden,
                                          Activation::tanh, 1);
    config.run.lr = 0.1;
    config.run.batch_size = 16;
    config.run.epochs_per_task = 1;
    config.run.policy = Policy::llaca;
    config.run.fixed_beta = 0.99;
    config.run.clamp_value = 0.99;
    config.run.run_seed = 17;
    config.out_dir = "out";
    config.defaulted_keys = kKnownKeys;
    return config;
}

CliConfig parse_config(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ConfigError("config: line " + std::to_string(line_no) +
                                  ": unterminated section header");
            }
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = section + "." + trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        bool known = false;
        for (const auto& k : kKnownKeys) known = known || k == key;
        if (!known) {
            throw ConfigError("config: line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
        }
        if (!kv.emplace(key, value).second) {
            throw ConfigError("config: line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "'");
        }
    }

    CliConfig config = default_config();
    config.defaulted_keys.clear();

    Activation activation = Activation::tanh;
    std::uint64_t init_seed = 1;

    for (const auto& key : kKnownKeys) {
        auto it = kv.find(key);
        if (it == kv.end()) {
            config.defaulted_keys.push_back(key);
            continue;
        }
        const std::string& value = it->second;
        auto& tc = config.run.task_config;
        if (key == "tasks.kind") {
            if (value == "rotated_gaussians") tc.kind = TaskKind::rotated_gaussians;
            else if (value == "permuted_features") tc.kind = TaskKind::permuted_features;
            else if (value == "split_classes") tc.kind = TaskKind::split_classes;
            else throw ConfigError("config: unknown task kind '" + value + "'");
        } else if (key == "tasks.num_tasks") tc.num_tasks = parse_count(key, value);
        else if (key == "tasks.train_per_task") tc.train_per_task = parse_count(key, value);
        else if (key == "tasks.test_per_task") tc.test_per_task = parse_count(key, value);
        else if (key == "tasks.input_dim") tc.input_dim = parse_count(key, value);
        else if (key == "tasks.num_classes") tc.num_classes = parse_count(key, value);
        else if (key == "tasks.seed") tc.seed = parse_u64(key, value);
        else if (key == "tasks.drift") tc.drift = parse_double(key, value);
        else if (key == "net.hidden") config.hidden = parse_size_list(key, value);
        else if (key == "net.activation") {
            if (value == "relu") activation = Activation::relu;
            else if (value == "tanh") activation = Activation::tanh;
            else throw ConfigError("config: unknown activation '" + value + "'");
        } else if (key == "net.init_seed") init_seed = parse_u64(key, value);
        else if (key == "train.policy") {
            if (value == "plain") config.run.policy = Policy::plain;
            else if (value == "fixed" || value == "fixed_ema") config.run.policy = Policy::fixed_ema;
            else if (value == "llaca") config.run.policy = Policy::llaca;
            else throw ConfigError("config: unknown policy '" + value + "'");
        } else if (key == "train.lr") config.run.lr = parse_double(key, value);
        else if (key == "train.batch_size") config.run.batch_size = parse_count(key, value);
        else if (key == "train.epochs_per_task") config.run.epochs_per_task = parse_count(key, value);
        else if (key == "train.beta") config.run.fixed_beta = parse_double(key, value);
        else if (key == "train.clamp") config.run.clamp_value = parse_double(key, value);
        else if (key == "train.run_seed") config.run.run_seed = parse_u64(key, value);
        else if (key == "train.eval_both") config.run.eval_both = parse_bool(key, value);
        else if (key == "train.beta_aggregate") {
            if (value == "norm_ratio") config.run.beta_aggregate = BetaAggregate::norm_ratio;
            else if (value == "elementwise_mean") {
                config.run.beta_aggregate = BetaAggregate::elementwise_mean;
            } else {
                throw ConfigError("config: unknown beta_aggregate '" + value + "'");
            }
        } else if (key == "output.dir") config.out_dir = value;
    }

    config.run.net_spec =
        derive_net_spec(config.run.task_config, config.hidden, activation, init_seed);
    return config;
}

CliConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(is);
}

} // namespace cema
