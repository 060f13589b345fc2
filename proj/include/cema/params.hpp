#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cema/errors.hpp"

namespace cema {

// One named, contiguous segment of a flat parameter vector. A segment is
// the unit the dynamic EMA weight is computed for (one weight matrix or
// one bias vector of the network).
struct LayerSegment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
};

// Immutable segment map shared by every vector of the same shape.
// Segments are contiguous, non-overlapping, cover the whole vector, and
// carry unique names.
class ParamLayout {
public:
    static std::shared_ptr<const ParamLayout>
    create(std::vector<std::pair<std::string, std::size_t>> named_lengths);

    const std::vector<LayerSegment>& segments() const noexcept { return segments_; }
    std::size_t total_size() const noexcept { return total_; }
    std::size_t segment_count() const noexcept { return segments_.size(); }

    const LayerSegment& segment(std::size_t idx) const { return segments_.at(idx); }
    // Throws ConfigError if no segment has that name.
    const LayerSegment& segment(std::string_view name) const;

    bool operator==(const ParamLayout& other) const noexcept;

private:
    ParamLayout() = default;
    std::vector<LayerSegment> segments_;
    std::size_t total_ = 0;
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;

// Read-only view of one segment.
struct LayerView {
    std::string_view layer_name;
    std::span<const double> values;
};

// Mutable counterpart, used by in-place updates.
struct LayerSpan {
    std::string_view layer_name;
    std::span<double> values;
};

// Flat, ordered collection of trainable parameters with named layer
// segments. Carrier of the live weights, the moving-average weights and
// gradients. Value semantics; copies are deep.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(LayoutPtr layout, double fill = 0.0);
    ParamVector(LayoutPtr layout, std::vector<double> values);

    const LayoutPtr& layout() const noexcept { return layout_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values_mut() noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    LayerView view(std::size_t segment_idx) const;
    LayerView view(std::string_view layer_name) const;
    LayerSpan span(std::size_t segment_idx);

    bool layout_compatible(const ParamVector& other) const noexcept;

    // In-place v += alpha * x. Layouts must match.
    void axpy(double alpha, const ParamVector& x);

    bool operator==(const ParamVector& other) const noexcept;

private:
    LayoutPtr layout_;
    std::vector<double> values_;
};

// Sum of absolute values; 0 for an empty view.
double l1_norm(std::span<const double> v);
inline double l1_norm(const LayerView& v) { return l1_norm(v.values); }

// result_i = beta * a_i + (1 - beta) * b_i.
ParamVector blend(const ParamVector& a, const ParamVector& b, double beta);

// In-place segment blend: out_i = beta * out_i + (1 - beta) * b_i over
// [offset, offset + length).
void blend_segment(ParamVector& out, const ParamVector& b, double beta,
                   std::size_t offset, std::size_t length);

// Elementwise a - b.
ParamVector sub(const ParamVector& a, const ParamVector& b);

// Elementwise a + b.
ParamVector add(const ParamVector& a, const ParamVector& b);

// Throws IncompatibleLayoutError unless a and b share the same layout.
void require_compatible(const ParamVector& a, const ParamVector& b,
                        std::string_view op);

} // namespace cema
