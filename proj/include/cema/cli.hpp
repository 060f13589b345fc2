#pragma once

#include <iosfwd>
#include <string>

#include "cema/config.hpp"
#include "cema/metrics.hpp"

namespace cema {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

// Headline + key=value metric block. The same printer backs `run` and
// `metrics`, so re-reading an emitted matrix reproduces the exact output.
void print_metrics_summary(std::ostream& os, const MetricsReport& report);

// Execute one configured run and write every artifact into the output
// directory: accuracy_matrix.csv, metrics.txt, metrics.csv,
// loss_curves.csv, per-task checkpoint_task_<k>.bin, beta_trace.csv for
// the EMA policies, accuracy_matrix_alt.csv when eval_both is set.
int cmd_run(const CliConfig& config, std::ostream& out, std::ostream& err);

// Run the plain / fixed_ema / llaca arms with shared seeds and print a
// three-row Avg.ACC / Forgetting / New.ACC table. Per-arm artifacts land
// in <out_dir>/<arm>/, the table also in <out_dir>/ablation.csv.
int cmd_ablate(const CliConfig& config, std::ostream& out, std::ostream& err);

// Compute and print the metric suite for a stored accuracy-matrix CSV
// (run output or a hand-entered fixtures table).
int cmd_metrics(const std::string& matrix_csv_path, std::ostream& out,
                std::ostream& err);

} // namespace cema
