#include "cema/tasks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "cema/errors.hpp"
#include "cema/io.hpp"
#include "cema/rng.hpp"

namespace cema {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kClusterRadius = 2.0;
constexpr double kNoiseSigma = 0.6;

void validate_config(const TaskConfig& c) {
    if (c.num_tasks < 1) throw ConfigError("TaskConfig: num_tasks must be >= 1");
    if (c.input_dim < 1) throw ConfigError("TaskConfig: input_dim must be >= 1");
    if (c.num_classes < 1) throw ConfigError("TaskConfig: num_classes must be >= 1");
    if (c.train_per_task < 1 || c.test_per_task < 1) {
        throw ConfigError("TaskConfig: sample counts must be >= 1");
    }
    if (c.kind == TaskKind::split_classes && c.num_classes % c.num_tasks != 0) {
        throw ConfigError("TaskConfig: split_classes needs num_classes divisible "
                          "by num_tasks");
    }
    if (c.kind == TaskKind::rotated_gaussians && c.input_dim < 2) {
        throw ConfigError("TaskConfig: rotated_gaussians needs input_dim >= 2");
    }
}

// Balanced class-conditional Gaussian draw around the given per-class
// means. Labels cycle deterministically so every class is equally
// represented.
Dataset sample_gaussians(const std::vector<std::vector<double>>& means,
                         std::size_t n, std::size_t dim, Rng& rng) {
    Dataset d;
    d.dim = dim;
    d.features.resize(n * dim);
    d.labels.resize(n);
    const std::size_t classes = means.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % classes;
        d.labels[i] = static_cast<int>(c);
        for (std::size_t k = 0; k < dim; ++k) {
            d.features[i * dim + k] = means[c][k] + kNoiseSigma * rng.normal();
        }
    }
    return d;
}

// Class means on a circle of radius kClusterRadius in the first two
// dimensions, zero elsewhere. For two classes this puts them symmetric
// about the origin.
std::vector<std::vector<double>> circle_means(std::size_t classes, std::size_t dim) {
    std::vector<std::vector<double>> means(classes, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < classes; ++c) {
        const double angle = kTwoPi * static_cast<double>(c) / static_cast<double>(classes);
        means[c][0] = kClusterRadius * std::cos(angle);
        means[c][1] = kClusterRadius * std::sin(angle);
    }
    return means;
}

Dataset rotate_first_two(const Dataset& base, double angle) {
    Dataset d = base;
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x0 = base.features[i * d.dim];
        const double x1 = base.features[i * d.dim + 1];
        d.features[i * d.dim] = ca * x0 - sa * x1;
        d.features[i * d.dim + 1] = sa * x0 + ca * x1;
    }
    return d;
}

Dataset permute_features(const Dataset& base, const std::vector<std::size_t>& perm) {
    Dataset d = base;
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t k = 0; k < d.dim; ++k) {
            d.features[i * d.dim + k] = base.features[i * d.dim + perm[k]];
        }
    }
    return d;
}

} // namespace

std::size_t output_classes(const TaskConfig& config) {
    validate_config(config);
    return config.kind == TaskKind::split_classes
               ? config.num_classes / config.num_tasks
               : config.num_classes;
}

TaskSequence generate(const TaskConfig& config) {
    validate_config(config);
    TaskSequence seq;
    seq.provenance = config;
    seq.tasks.reserve(config.num_tasks);

    switch (config.kind) {
    case TaskKind::rotated_gaussians: {
        const auto means = circle_means(config.num_classes, config.input_dim);
        Rng train_rng(mix_seed(config.seed, 0));
        Rng test_rng(mix_seed(config.seed, 1));
        const Dataset base_train =
            sample_gaussians(means, config.train_per_task, config.input_dim, train_rng);
        const Dataset base_test =
            sample_gaussians(means, config.test_per_task, config.input_dim, test_rng);
        for (std::size_t k = 0; k < config.num_tasks; ++k) {
            const double angle = static_cast<double>(k) * config.drift;
            seq.tasks.push_back({rotate_first_two(base_train, angle),
                                 rotate_first_two(base_test, angle)});
        }
        break;
    }
    case TaskKind::permuted_features: {
        const auto means = circle_means(config.num_classes,
                                        std::max<std::size_t>(config.input_dim, 2));
        Rng train_rng(mix_seed(config.seed, 0));
        Rng test_rng(mix_seed(config.seed, 1));
        const Dataset base_train =
            sample_gaussians(means, config.train_per_task, config.input_dim, train_rng);
        const Dataset base_test =
            sample_gaussians(means, config.test_per_task, config.input_dim, test_rng);
        const std::uint64_t drift_bits = std::bit_cast<std::uint64_t>(config.drift);
        for (std::size_t k = 0; k < config.num_tasks; ++k) {
            if (k == 0) {
                seq.tasks.push_back({base_train, base_test});
                continue;
            }
            Rng perm_rng(mix_seed(mix_seed(config.seed, drift_bits), 100 + k));
            const auto perm = perm_rng.permutation(config.input_dim);
            seq.tasks.push_back({permute_features(base_train, perm),
                                 permute_features(base_test, perm)});
        }
        break;
    }
    case TaskKind::split_classes: {
        const std::size_t per_task = config.num_classes / config.num_tasks;
        // Random class means spread through the whole input space.
        std::vector<std::vector<double>> means(config.num_classes,
                                               std::vector<double>(config.input_dim));
        Rng mean_rng(mix_seed(config.seed, 2));
        for (auto& m : means) {
            for (auto& v : m) v = mean_rng.uniform(-3.0, 3.0);
        }
        for (std::size_t k = 0; k < config.num_tasks; ++k) {
            std::vector<std::vector<double>> task_means(
                means.begin() + static_cast<std::ptrdiff_t>(k * per_task),
                means.begin() + static_cast<std::ptrdiff_t>((k + 1) * per_task));
            Rng train_rng(mix_seed(config.seed, 10 + 2 * k));
            Rng test_rng(mix_seed(config.seed, 11 + 2 * k));
            seq.tasks.push_back(
                {sample_gaussians(task_means, config.train_per_task, config.input_dim,
                                  train_rng),
                 sample_gaussians(task_means, config.test_per_task, config.input_dim,
                                  test_rng)});
        }
        break;
    }
    }
    return seq;
}

std::vector<Batch> batches(const Dataset& train, std::size_t batch_size,
                           std::uint64_t epoch_seed) {
    if (train.size() == 0) throw ConfigError("batches: empty train set");
    if (batch_size == 0) throw ConfigError("batches: batch_size must be >= 1");

    Rng rng(epoch_seed);
    auto order = rng.permutation(train.size());

    std::vector<Batch> out;
    const std::size_t n = train.size();
    out.reserve((n + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t count = std::min(batch_size, n - start);
        Batch b;
        b.dim = train.dim;
        b.features.resize(count * train.dim);
        b.labels.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t src = order[start + i];
            b.labels[i] = train.labels[src];
            const auto row = train.row(src);
            std::copy(row.begin(), row.end(), b.features.begin() +
                                                  static_cast<std::ptrdiff_t>(i * train.dim));
        }
        out.push_back(std::move(b));
    }
    return out;
}

void export_task_sequence_csv(const std::string& dir, const TaskSequence& seq) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < seq.tasks.size(); ++k) {
        const std::string stem = dir + "/task_" + std::to_string(k + 1);
        for (const auto& [suffix, split] :
             {std::pair{"_train.csv", &seq.tasks[k].train},
              std::pair{"_test.csv", &seq.tasks[k].test}}) {
            std::ofstream os(stem + suffix);
            if (!os) throw ConfigError("export_task_sequence_csv: cannot write " +
                                       stem + suffix);
            write_dataset_csv(os, *split);
        }
    }
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
    for (std::size_t k = 0; k < data.dim; ++k) os << 'f' << k << ',';
    os << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t k = 0; k < data.dim; ++k) {
            os << format_double(data.features[i * data.dim + k]) << ',';
        }
        os << data.labels[i] << '\n';
    }
}

} // namespace cema
