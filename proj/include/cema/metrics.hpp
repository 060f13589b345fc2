#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cema {

enum class AccuracyUnit { fraction, percent };

// Lower-triangular record A[j][i] = accuracy on task i measured after
// training task j (zero-based). Row j holds exactly j + 1 entries. The
// sole input of the metric suite.
class AccuracyMatrix {
public:
    AccuracyMatrix() = default;
    explicit AccuracyMatrix(AccuracyUnit unit) : unit_(unit) {}

    // Row length must be current task_count() + 1.
    void append_row(std::vector<double> row);

    std::size_t task_count() const noexcept { return rows_.size(); }
    double at(std::size_t after_task, std::size_t task) const;
    const std::vector<double>& row(std::size_t j) const { return rows_.at(j); }

    AccuracyUnit unit() const noexcept { return unit_; }

    // Optional column labels; defaults to task_1..task_T when empty.
    const std::vector<std::string>& task_names() const noexcept { return task_names_; }
    void set_task_names(std::vector<std::string> names);

private:
    std::vector<std::vector<double>> rows_;
    std::vector<std::string> task_names_;
    AccuracyUnit unit_ = AccuracyUnit::fraction;
};

// The five continual-learning summary metrics. forgetting is absent for a
// single task; adf[t] is absent for the last task. Values carry the
// matrix's unit.
struct MetricsReport {
    AccuracyUnit unit = AccuracyUnit::fraction;
    double avg_acc = 0.0;
    double new_acc = 0.0;
    std::optional<double> forgetting;
    std::vector<double> ada;
    std::vector<std::optional<double>> adf;
};

// avg_acc: mean of the final row. new_acc: mean of the diagonal.
// forgetting: mean over earlier tasks of (running-maximum accuracy minus
// final accuracy) — positive means forgetting. ada(t): mean of column t
// from its training row down. adf(t): mean over later rows of the drop
// from the column's running maximum.
MetricsReport compute_metrics(const AccuracyMatrix& m);

// CSV formats. Lines beginning with '#' are comments; "# unit=percent" or
// "# unit=fraction" declares the unit (default fraction). Two layouts are
// accepted: the run format, whose header starts with "after_task" followed
// by task labels and whose rows carry a leading 1-based row index; and the
// fixtures format, whose header is just the task labels and whose rows are
// the accuracies, trailing cells left empty.
AccuracyMatrix read_matrix_csv(std::istream& is);
AccuracyMatrix read_matrix_csv_file(const std::string& path);

// Writes the run format with full unit declaration.
void write_matrix_csv(std::ostream& os, const AccuracyMatrix& m);

// key=value lines, one metric per line.
void write_metrics_txt(std::ostream& os, const MetricsReport& r);

// metric,task,value rows; task is empty for the scalar metrics.
void write_metrics_csv(std::ostream& os, const MetricsReport& r);

} // namespace cema
