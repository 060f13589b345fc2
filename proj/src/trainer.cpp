#include "cema/trainer.hpp"

#include <cmath>
#include <iterator>
#include <string>

#include "cema/rng.hpp"

namespace cema {

void validate_run_config(const RunConfig& config) {
    if (!(config.lr > 0.0)) throw ConfigError("RunConfig: lr must be > 0");
    if (config.epochs_per_task < 1) {
        throw ConfigError("RunConfig: epochs_per_task must be >= 1");
    }
    if (config.batch_size < 1) throw ConfigError("RunConfig: batch_size must be >= 1");
    if (config.policy == Policy::fixed_ema &&
        !(config.fixed_beta > 0.0 && config.fixed_beta < 1.0)) {
        throw ConfigError("RunConfig: fixed_ema beta must lie in (0,1)");
    }
    if (!(config.clamp_value > 0.0 && config.clamp_value < 1.0)) {
        throw ConfigError("RunConfig: clamp_value must lie in (0,1)");
    }
    if (config.net_spec.layer_sizes.size() < 2) {
        throw ConfigError("RunConfig: net_spec needs input and output sizes");
    }
    if (config.net_spec.layer_sizes.front() != config.task_config.input_dim) {
        throw ConfigError("RunConfig: net input size must equal task input_dim");
    }
    if (config.net_spec.layer_sizes.back() != output_classes(config.task_config)) {
        throw ConfigError("RunConfig: net output size must equal the task class count");
    }
}

NetSpec derive_net_spec(const TaskConfig& tasks, const std::vector<std::size_t>& hidden,
                        Activation activation, std::uint64_t init_seed) {
    NetSpec spec;
    spec.layer_sizes.push_back(tasks.input_dim);
    spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
    spec.layer_sizes.push_back(output_classes(tasks));
    spec.activation = activation;
    spec.init_seed = init_seed;
    return spec;
}

std::vector<double> evaluate_all(const ParamVector& params, const NetSpec& spec,
                                 const TaskSequence& tasks, std::size_t upto) {
    if (upto >= tasks.tasks.size()) {
        throw ConfigError("evaluate_all: upto exceeds the task count");
    }
    const auto expected = make_net_layout(spec);
    if (!params.layout() || !(*params.layout() == *expected)) {
        throw IncompatibleLayoutError("evaluate_all: params do not fit the net spec");
    }
    Model model{spec, params};
    std::vector<double> accs;
    accs.reserve(upto + 1);
    for (std::size_t i = 0; i <= upto; ++i) {
        accs.push_back(accuracy(model, tasks.tasks[i].test));
    }
    return accs;
}

RunArtifacts train_continual(const RunConfig& config) {
    validate_run_config(config);

    const TaskSequence tasks = generate(config.task_config);
    Model model = init_model(config.net_spec);

    const bool use_ema = config.policy != Policy::plain;
    EmaOptions ema_options;
    ema_options.mode = config.policy == Policy::fixed_ema ? BetaMode::fixed
                                                          : BetaMode::practical_layerwise;
    ema_options.clamp_value = config.clamp_value;
    ema_options.fixed_beta = config.fixed_beta;
    ema_options.aggregate = config.beta_aggregate;
    EmaState ema = use_ema ? init_ema(model.params, ema_options) : EmaState{};

    RunArtifacts artifacts;
    artifacts.accuracy_matrix = AccuracyMatrix(AccuracyUnit::fraction);
    if (config.eval_both && use_ema) {
        artifacts.alt_matrix = AccuracyMatrix(AccuracyUnit::fraction);
    }
    artifacts.loss_curves.resize(tasks.tasks.size());

    for (std::size_t k = 0; k < tasks.tasks.size(); ++k) {
        for (std::size_t epoch = 0; epoch < config.epochs_per_task; ++epoch) {
            const std::uint64_t epoch_seed =
                mix_seed(config.run_seed, k * 1000003 + epoch);
            for (const Batch& batch :
                 batches(tasks.tasks[k].train, config.batch_size, epoch_seed)) {
                LossGrad lg = loss_and_grad(model, batch);
                if (!std::isfinite(lg.loss)) {
                    throw NumericError("train_continual: non-finite loss at task " +
                                       std::to_string(k + 1) + ", iteration " +
                                       std::to_string(artifacts.loss_curves[k].size() + 1));
                }
                artifacts.loss_curves[k].push_back(lg.loss);
                sgd_step(model, lg.grads, config.lr);
                if (use_ema) {
                    auto records = step(ema, model.params, lg.grads);
                    artifacts.beta_trace.insert(artifacts.beta_trace.end(),
                                                std::make_move_iterator(records.begin()),
                                                std::make_move_iterator(records.end()));
                }
            }
        }

        // Dataset boundary: save the deployed parameters and fill the next
        // accuracy-matrix row from them.
        if (use_ema) {
            DatasetHandoff handoff = finish_dataset(ema);
            artifacts.checkpoints.push_back(handoff.checkpoint);
            artifacts.accuracy_matrix.append_row(
                evaluate_all(handoff.checkpoint, config.net_spec, tasks, k));
            if (artifacts.alt_matrix) {
                // Live weights as they stand before any handoff.
                artifacts.alt_matrix->append_row(
                    evaluate_all(model.params, config.net_spec, tasks, k));
            }
            if (config.policy == Policy::llaca) {
                model.params = handoff.next_init;
            }
        } else {
            artifacts.checkpoints.push_back(model.params);
            artifacts.accuracy_matrix.append_row(
                evaluate_all(model.params, config.net_spec, tasks, k));
        }
    }
    return artifacts;
}

} // namespace cema
