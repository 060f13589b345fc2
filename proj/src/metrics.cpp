#include "cema/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cema/errors.hpp"
#include "cema/io.hpp"

namespace cema {

void AccuracyMatrix::append_row(std::vector<double> row) {
    if (row.size() != rows_.size() + 1) {
        throw ConfigError("AccuracyMatrix: row " + std::to_string(rows_.size()) +
                          " must have " + std::to_string(rows_.size() + 1) + " entries");
    }
    for (double v : row) {
        if (!std::isfinite(v)) throw ConfigError("AccuracyMatrix: non-finite entry");
    }
    rows_.push_back(std::move(row));
}

double AccuracyMatrix::at(std::size_t after_task, std::size_t task) const {
    if (after_task >= rows_.size() || task > after_task) {
        throw ConfigError("AccuracyMatrix: index outside lower triangle");
    }
    return rows_[after_task][task];
}

void AccuracyMatrix::set_task_names(std::vector<std::string> names) {
    task_names_ = std::move(names);
}

MetricsReport compute_metrics(const AccuracyMatrix& m) {
    const std::size_t t_count = m.task_count();
    if (t_count == 0) throw ConfigError("compute_metrics: empty matrix");

    MetricsReport r;
    r.unit = m.unit();

    const auto& final_row = m.row(t_count - 1);
    double avg = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < t_count; ++i) {
        avg += final_row[i];
        diag += m.at(i, i);
    }
    r.avg_acc = avg / static_cast<double>(t_count);
    r.new_acc = diag / static_cast<double>(t_count);

    if (t_count > 1) {
        // Drop from each column's running maximum to its final value,
        // averaged over the earlier tasks. The maximum ranges over the
        // whole column, so a column whose final value is its peak
        // contributes zero and the metric never goes negative.
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < t_count; ++i) {
            double peak = m.at(i, i);
            for (std::size_t j = i; j < t_count; ++j) {
                peak = std::max(peak, m.at(j, i));
            }
            total += peak - final_row[i];
        }
        r.forgetting = total / static_cast<double>(t_count - 1);
    }

    r.ada.resize(t_count);
    r.adf.resize(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        double sum = 0.0;
        for (std::size_t i = t; i < t_count; ++i) sum += m.at(i, t);
        r.ada[t] = sum / static_cast<double>(t_count - t);

        if (t + 1 < t_count) {
            double drop_sum = 0.0;
            double peak = m.at(t, t);
            for (std::size_t i = t + 1; i < t_count; ++i) {
                drop_sum += peak - m.at(i, t);
                peak = std::max(peak, m.at(i, t));
            }
            r.adf[t] = drop_sum / static_cast<double>(t_count - 1 - t);
        }
    }
    return r;
}

namespace {

const char* unit_name(AccuracyUnit u) {
    return u == AccuracyUnit::percent ? "percent" : "fraction";
}

double parse_cell(const std::string& field, std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v)) {
        throw ParseError("matrix csv: line " + std::to_string(line_no) +
                         ": bad numeric cell '" + field + "'");
    }
    return v;
}

} // namespace

AccuracyMatrix read_matrix_csv(std::istream& is) {
    AccuracyUnit unit = AccuracyUnit::fraction;
    std::vector<std::string> header;
    bool run_format = false;
    AccuracyMatrix m;
    std::vector<std::vector<double>> rows;

    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find("unit=");
            if (eq != std::string::npos) {
                const std::string u = line.substr(eq + 5);
                if (u == "percent") unit = AccuracyUnit::percent;
                else if (u == "fraction") unit = AccuracyUnit::fraction;
                else throw ParseError("matrix csv: line " + std::to_string(line_no) +
                                      ": unknown unit '" + u + "'");
            }
            continue;
        }
        auto fields = split_csv_line(line);
        if (!have_header) {
            have_header = true;
            run_format = !fields.empty() && fields[0] == "after_task";
            header.assign(fields.begin() + (run_format ? 1 : 0), fields.end());
            if (header.empty()) {
                throw ParseError("matrix csv: line " + std::to_string(line_no) +
                                 ": header has no task columns");
            }
            continue;
        }

        if (run_format) {
            if (fields.empty() || parse_cell(fields[0], line_no) !=
                                      static_cast<double>(rows.size() + 1)) {
                throw ParseError("matrix csv: line " + std::to_string(line_no) +
                                 ": expected after_task index " +
                                 std::to_string(rows.size() + 1));
            }
            fields.erase(fields.begin());
        }

        const std::size_t expected = rows.size() + 1;
        std::vector<double> row;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i < expected) {
                row.push_back(parse_cell(fields[i], line_no));
            } else if (!fields[i].empty()) {
                throw ParseError("matrix csv: line " + std::to_string(line_no) +
                                 ": unexpected value above the diagonal");
            }
        }
        if (row.size() != expected) {
            throw ParseError("matrix csv: line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected) + " accuracies, got " +
                             std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (!have_header || rows.empty()) {
        throw ParseError("matrix csv: no matrix rows found");
    }
    if (rows.size() > header.size()) {
        throw ParseError("matrix csv: more rows than task columns");
    }

    AccuracyMatrix out(unit);
    for (auto& row : rows) out.append_row(std::move(row));
    header.resize(out.task_count());
    out.set_task_names(std::move(header));
    return out;
}

AccuracyMatrix read_matrix_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("matrix csv: cannot open '" + path + "'");
    return read_matrix_csv(is);
}

void write_matrix_csv(std::ostream& os, const AccuracyMatrix& m) {
    os << "# unit=" << unit_name(m.unit()) << '\n';
    os << "after_task";
    for (std::size_t i = 0; i < m.task_count(); ++i) {
        if (i < m.task_names().size() && !m.task_names()[i].empty()) {
            os << ',' << m.task_names()[i];
        } else {
            os << ",task_" << (i + 1);
        }
    }
    os << '\n';
    for (std::size_t j = 0; j < m.task_count(); ++j) {
        os << (j + 1);
        for (std::size_t i = 0; i < m.task_count(); ++i) {
            os << ',';
            if (i <= j) os << format_double(m.at(j, i));
        }
        os << '\n';
    }
}

void write_metrics_txt(std::ostream& os, const MetricsReport& r) {
    os << "unit=" << unit_name(r.unit) << '\n';
    os << "avg_acc=" << format_double(r.avg_acc) << '\n';
    os << "new_acc=" << format_double(r.new_acc) << '\n';
    os << "forgetting=" << (r.forgetting ? format_double(*r.forgetting) : "n/a") << '\n';
    for (std::size_t t = 0; t < r.ada.size(); ++t) {
        os << "ada_" << (t + 1) << '=' << format_double(r.ada[t]) << '\n';
    }
    for (std::size_t t = 0; t < r.adf.size(); ++t) {
        os << "adf_" << (t + 1) << '='
           << (r.adf[t] ? format_double(*r.adf[t]) : "n/a") << '\n';
    }
}

void write_metrics_csv(std::ostream& os, const MetricsReport& r) {
    os << "metric,task,value\n";
    os << "avg_acc,," << format_double(r.avg_acc) << '\n';
    os << "new_acc,," << format_double(r.new_acc) << '\n';
    if (r.forgetting) os << "forgetting,," << format_double(*r.forgetting) << '\n';
    for (std::size_t t = 0; t < r.ada.size(); ++t) {
        os << "ada," << (t + 1) << ',' << format_double(r.ada[t]) << '\n';
    }
    for (std::size_t t = 0; t < r.adf.size(); ++t) {
        if (r.adf[t]) os << "adf," << (t + 1) << ',' << format_double(*r.adf[t]) << '\n';
    }
}

} // namespace cema
