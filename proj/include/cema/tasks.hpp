#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cema/dataset.hpp"

namespace cema {

enum class TaskKind { rotated_gaussians, permuted_features, split_classes };

// Synthetic sequential-task generator configuration.
//
// drift controls the per-task shift: the rotation-angle increment in
// radians for rotated_gaussians, and a reseed ingredient for the per-task
// permutation in permuted_features (unused by split_classes).
struct TaskConfig {
    TaskKind kind = TaskKind::rotated_gaussians;
    std::size_t num_tasks = 6;
    std::size_t train_per_task = 2000;
    std::size_t test_per_task = 500;
    std::size_t input_dim = 16;
    std::size_t num_classes = 4;
    std::uint64_t seed = 7;
    double drift = 0.5235987755982988; // pi / 6
};

struct Task {
    Dataset train;
    Dataset test;
};

struct TaskSequence {
    std::vector<Task> tasks;
    TaskConfig provenance;
};

// Number of model outputs the sequence requires: num_classes, except for
// split_classes where labels are remapped to num_classes / num_tasks
// shared outputs.
std::size_t output_classes(const TaskConfig& config);

// Deterministic generation; identical config -> identical sequence.
//
// rotated_gaussians: class-conditional Gaussian clusters on a circle in the
// first two feature dimensions (remaining dimensions pure noise); task k
// rotates those two dimensions of the shared base samples by k * drift.
// permuted_features: task 0 is the base task; each later task applies a
// fresh deterministic feature permutation. split_classes: classes are
// partitioned contiguously across tasks and remapped to a shared output
// range.
TaskSequence generate(const TaskConfig& config);

// Deterministic epoch shuffle partitioned into batches; the last batch may
// be short. Throws on an empty train set or batch_size == 0.
std::vector<Batch> batches(const Dataset& train, std::size_t batch_size,
                           std::uint64_t epoch_seed);

// CSV dump of one split: f0..f{dim-1},label.
void write_dataset_csv(std::ostream& os, const Dataset& data);

// Writes task_<k>_train.csv / task_<k>_test.csv (1-based) into dir.
void export_task_sequence_csv(const std::string& dir, const TaskSequence& seq);

} // namespace cema
