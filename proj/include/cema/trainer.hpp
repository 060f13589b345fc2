#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cema/ema_policy.hpp"
#include "cema/metrics.hpp"
#include "cema/tasks.hpp"
#include "cema/tinynet.hpp"

namespace cema {

// plain: gradient updates only, deployed parameters are the live weights.
// fixed_ema: a constant-weight moving average shadows training and is the
// deployed/evaluated parameter set; the live weights train on undisturbed.
// llaca: the dynamic layer-wise weight, plus the dataset-boundary handoff
// that restarts the next task's live weights from the averaged ones.
enum class Policy { plain, fixed_ema, llaca };

struct RunConfig {
    TaskConfig task_config;
    NetSpec net_spec;
    double lr = 0.1;
    std::size_t batch_size = 16;
    std::size_t epochs_per_task = 1;
    Policy policy = Policy::llaca;
    double fixed_beta = 0.99;
    double clamp_value = 0.99;
    std::uint64_t run_seed = 0;
    // Diagnostic: also evaluate the non-deployed parameter set each
    // boundary (live weights for EMA policies, nothing extra for plain).
    bool eval_both = false;
    BetaAggregate beta_aggregate = BetaAggregate::norm_ratio;
};

// Throws ConfigError when fields are inconsistent (also checks the net's
// input/output sizes against the task configuration).
void validate_run_config(const RunConfig& config);

// Hidden sizes + task config -> full NetSpec layer sizes.
NetSpec derive_net_spec(const TaskConfig& tasks, const std::vector<std::size_t>& hidden,
                        Activation activation, std::uint64_t init_seed);

struct RunArtifacts {
    AccuracyMatrix accuracy_matrix;
    BetaTrace beta_trace;                      // empty for plain
    std::vector<ParamVector> checkpoints;      // deployed params per task
    std::vector<std::vector<double>> loss_curves;
    std::optional<AccuracyMatrix> alt_matrix;  // only when eval_both
};

// The sequential tuning loop: per task, stream shuffled mini-batches
// through gradient updates (with the selected moving-average policy
// folding in after each update), then evaluate the deployed parameters on
// every task seen so far. Fully deterministic in the config. Throws
// NumericError when the loss turns non-finite.
RunArtifacts train_continual(const RunConfig& config);

// Accuracy of a model built from params on the test split of tasks
// 0..upto inclusive.
std::vector<double> evaluate_all(const ParamVector& params, const NetSpec& spec,
                                 const TaskSequence& tasks, std::size_t upto);

} // namespace cema
