#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cema/cli.hpp"

namespace {

cema::CliConfig load_config(const std::string& config_path) {
    return config_path.empty() ? cema::default_config()
                               : cema::parse_config_file(config_path);
}

void apply_policy_override(cema::CliConfig& config, const std::string& policy) {
    if (policy == "plain") config.run.policy = cema::Policy::plain;
    else if (policy == "fixed") config.run.policy = cema::Policy::fixed_ema;
    else if (policy == "llaca") config.run.policy = cema::Policy::llaca;
    else throw cema::ConfigError("unknown policy '" + policy + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continual-learning harness: dynamic-EMA training on synthetic "
                 "sequential tasks, plus the metric suite"};
    app.require_subcommand(1);

    std::string config_path;
    std::string policy;
    std::optional<double> beta;
    std::optional<std::uint64_t> seed;
    std::string out_dir;

    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value configuration file");
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "run seed (overrides config)");
    };

    auto* run_cmd = app.add_subcommand("run", "train one policy and write artifacts");
    add_run_options(run_cmd);
    run_cmd->add_option("--policy", policy, "plain | fixed | llaca");
    run_cmd->add_option("--beta", beta, "fixed-EMA weight (overrides config)");

    auto* ablate_cmd =
        app.add_subcommand("ablate", "run plain / fixed_ema / llaca with shared seeds");
    add_run_options(ablate_cmd);
    ablate_cmd->add_option("--beta", beta, "fixed-EMA arm weight");

    std::string matrix_path;
    auto* metrics_cmd =
        app.add_subcommand("metrics", "compute the metric suite from a matrix CSV");
    metrics_cmd->add_option("matrix", matrix_path, "accuracy-matrix CSV path")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cema::kExitOk : cema::kExitConfigError;
    }

    try {
        if (metrics_cmd->parsed()) {
            return cema::cmd_metrics(matrix_path, std::cout, std::cerr);
        }
        cema::CliConfig config = load_config(config_path);
        if (!policy.empty()) apply_policy_override(config, policy);
        if (beta) config.run.fixed_beta = *beta;
        if (seed) config.run.run_seed = *seed;
        if (!out_dir.empty()) config.out_dir = out_dir;
        return run_cmd->parsed() ? cema::cmd_run(config, std::cout, std::cerr)
                                 : cema::cmd_ablate(config, std::cout, std::cerr);
    } catch (const cema::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cema::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cema::kExitRuntimeError;
    }
}
