#include "cema/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "cema/checkpoint.hpp"
#include "cema/io.hpp"

namespace cema {

namespace {

namespace fs = std::filesystem;

// Table-style rounding: half away from zero, 2 decimals for percent
// matrices, 4 for fractions. The nudge lets values sitting a hair under a
// .5 boundary only through accumulated decimal-parse error round the way
// the source table did.
std::string rounded(double v, AccuracyUnit unit) {
    const int decimals = unit == AccuracyUnit::percent ? 2 : 4;
    const double scale = unit == AccuracyUnit::percent ? 100.0 : 10000.0;
    const double nudge = v >= 0.0 ? 1e-7 : -1e-7;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals,
                  std::round(v * scale + nudge) / scale);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return os;
}

void write_loss_curves_csv(std::ostream& os,
                           const std::vector<std::vector<double>>& curves) {
    os << "task,iteration,loss\n";
    for (std::size_t k = 0; k < curves.size(); ++k) {
        for (std::size_t i = 0; i < curves[k].size(); ++i) {
            os << (k + 1) << ',' << (i + 1) << ',' << format_double(curves[k][i]) << '\n';
        }
    }
}

void write_run_artifacts(const fs::path& dir, const RunConfig& run,
                         const RunArtifacts& artifacts) {
    fs::create_directories(dir);
    {
        auto os = open_out(dir / "accuracy_matrix.csv");
        write_matrix_csv(os, artifacts.accuracy_matrix);
    }
    const MetricsReport report = compute_metrics(artifacts.accuracy_matrix);
    {
        auto os = open_out(dir / "metrics.txt");
        write_metrics_txt(os, report);
    }
    {
        auto os = open_out(dir / "metrics.csv");
        write_metrics_csv(os, report);
    }
    {
        auto os = open_out(dir / "loss_curves.csv");
        write_loss_curves_csv(os, artifacts.loss_curves);
    }
    if (run.policy != Policy::plain) {
        auto os = open_out(dir / "beta_trace.csv");
        write_beta_trace_csv(os, artifacts.beta_trace);
    }
    if (artifacts.alt_matrix) {
        auto os = open_out(dir / "accuracy_matrix_alt.csv");
        write_matrix_csv(os, *artifacts.alt_matrix);
    }
    for (std::size_t k = 0; k < artifacts.checkpoints.size(); ++k) {
        write_checkpoint_file(
            (dir / ("checkpoint_task_" + std::to_string(k + 1) + ".bin")).string(),
            artifacts.checkpoints[k]);
    }
}

void print_defaults_notice(std::ostream& out, const CliConfig& config) {
    if (config.defaulted_keys.empty()) return;
    out << "note: defaults used for:";
    for (const auto& k : config.defaulted_keys) out << ' ' << k;
    out << '\n';
}

const char* policy_name(Policy p) {
    switch (p) {
    case Policy::plain: return "plain";
    case Policy::fixed_ema: return "fixed_ema";
    case Policy::llaca: return "llaca";
    }
    return "?";
}

template <typename Fn>
int run_guarded(std::ostream& err, Fn&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
}

} // namespace

void print_metrics_summary(std::ostream& os, const MetricsReport& report) {
    os << "Avg.ACC / Forgetting / New.ACC: " << rounded(report.avg_acc, report.unit)
       << " / " << (report.forgetting ? rounded(*report.forgetting, report.unit) : "n/a")
       << " / " << rounded(report.new_acc, report.unit) << '\n';
    write_metrics_txt(os, report);
}

int cmd_run(const CliConfig& config, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        print_defaults_notice(out, config);
        validate_run_config(config.run);
        const RunArtifacts artifacts = train_continual(config.run);
        write_run_artifacts(config.out_dir, config.run, artifacts);
        out << "policy=" << policy_name(config.run.policy)
            << " tasks=" << config.run.task_config.num_tasks
            << " out=" << config.out_dir << '\n';
        print_metrics_summary(out, compute_metrics(artifacts.accuracy_matrix));
        return kExitOk;
    });
}

int cmd_ablate(const CliConfig& config, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        print_defaults_notice(out, config);
        const Policy arms[] = {Policy::plain, Policy::fixed_ema, Policy::llaca};

        fs::create_directories(config.out_dir);
        auto table = open_out(fs::path(config.out_dir) / "ablation.csv");
        table << "arm,avg_acc,forgetting,new_acc\n";

        char line[160];
        std::snprintf(line, sizeof(line), "%-10s %12s %12s %12s", "Arm", "Avg.ACC",
                      "Forgetting", "New.ACC");
        out << line << '\n';

        for (Policy arm : arms) {
            RunConfig run = config.run;
            run.policy = arm;
            validate_run_config(run);
            const RunArtifacts artifacts = train_continual(run);
            write_run_artifacts(fs::path(config.out_dir) / policy_name(arm), run,
                                artifacts);
            const MetricsReport report = compute_metrics(artifacts.accuracy_matrix);
            const std::string forgetting =
                report.forgetting ? rounded(*report.forgetting, report.unit) : "n/a";
            std::snprintf(line, sizeof(line), "%-10s %12s %12s %12s", policy_name(arm),
                          rounded(report.avg_acc, report.unit).c_str(), forgetting.c_str(),
                          rounded(report.new_acc, report.unit).c_str());
            out << line << '\n';
            table << policy_name(arm) << ',' << format_double(report.avg_acc) << ','
                  << (report.forgetting ? format_double(*report.forgetting) : "n/a") << ','
                  << format_double(report.new_acc) << '\n';
        }
        return kExitOk;
    });
}

int cmd_metrics(const std::string& matrix_csv_path, std::ostream& out,
                std::ostream& err) {
    return run_guarded(err, [&]() {
        const AccuracyMatrix m = read_matrix_csv_file(matrix_csv_path);
        print_metrics_summary(out, compute_metrics(m));
        return kExitOk;
    });
}

} // namespace cema
