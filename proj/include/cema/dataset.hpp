#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cema {

// Row-major sample store: one (feature vector, class index) pair per row.
struct Dataset {
    std::size_t dim = 0;
    std::vector<double> features; // size() * dim
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }
};

// A materialized mini-batch in the same layout.
struct Batch {
    std::size_t dim = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

} // namespace cema
