#include "cema/params.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace cema {

std::shared_ptr<const ParamLayout>
ParamLayout::create(std::vector<std::pair<std::string, std::size_t>> named_lengths) {
    auto layout = std::shared_ptr<ParamLayout>(new ParamLayout());
    std::unordered_set<std::string> seen;
    std::size_t offset = 0;
    layout->segments_.reserve(named_lengths.size());
    for (auto& [name, length] : named_lengths) {
        if (!seen.insert(name).second) {
            throw ConfigError("duplicate layer name in layout: " + name);
        }
        layout->segments_.push_back({std::move(name), offset, length});
        offset += length;
    }
    layout->total_ = offset;
    return layout;
}

const LayerSegment& ParamLayout::segment(std::string_view name) const {
    for (const auto& seg : segments_) {
        if (seg.name == name) return seg;
    }
    throw ConfigError("no layer segment named '" + std::string(name) + "'");
}

bool ParamLayout::operator==(const ParamLayout& other) const noexcept {
    if (this == &other) return true;
    if (total_ != other.total_ || segments_.size() != other.segments_.size()) return false;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& a = segments_[i];
        const auto& b = other.segments_[i];
        if (a.offset != b.offset || a.length != b.length || a.name != b.name) return false;
    }
    return true;
}

ParamVector::ParamVector(LayoutPtr layout, double fill)
    : layout_(std::move(layout)),
      values_(layout_ ? layout_->total_size() : 0, fill) {}

ParamVector::ParamVector(LayoutPtr layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
    if (!layout_ || layout_->total_size() != values_.size()) {
        throw ConfigError("ParamVector: value count does not match layout size");
    }
}

LayerView ParamVector::view(std::size_t segment_idx) const {
    const auto& seg = layout_->segment(segment_idx);
    return {seg.name, std::span<const double>(values_.data() + seg.offset, seg.length)};
}

LayerView ParamVector::view(std::string_view layer_name) const {
    const auto& seg = layout_->segment(layer_name);
    return {seg.name, std::span<const double>(values_.data() + seg.offset, seg.length)};
}

LayerSpan ParamVector::span(std::size_t segment_idx) {
    const auto& seg = layout_->segment(segment_idx);
    return {seg.name, std::span<double>(values_.data() + seg.offset, seg.length)};
}

bool ParamVector::layout_compatible(const ParamVector& other) const noexcept {
    if (layout_ == other.layout_) return true;
    if (!layout_ || !other.layout_) return false;
    return *layout_ == *other.layout_;
}

void ParamVector::axpy(double alpha, const ParamVector& x) {
    require_compatible(*this, x, "axpy");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] += alpha * x.values_[i];
    }
}

bool ParamVector::operator==(const ParamVector& other) const noexcept {
    return layout_compatible(other) && values_ == other.values_;
}

double l1_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += std::abs(x);
    return sum;
}

void require_compatible(const ParamVector& a, const ParamVector& b,
                        std::string_view op) {
    if (!a.layout_compatible(b)) {
        throw IncompatibleLayoutError(std::string(op) +
                                      ": operands have incompatible layouts");
    }
}

ParamVector blend(const ParamVector& a, const ParamVector& b, double beta) {
    require_compatible(a, b, "blend");
    std::vector<double> out(a.size());
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = beta * av[i] + (1.0 - beta) * bv[i];
    }
    return ParamVector(a.layout(), std::move(out));
}

void blend_segment(ParamVector& out, const ParamVector& b, double beta,
                   std::size_t offset, std::size_t length) {
    require_compatible(out, b, "blend_segment");
    auto ov = out.values_mut();
    const auto bv = b.values();
    for (std::size_t i = offset; i < offset + length; ++i) {
        ov[i] = beta * ov[i] + (1.0 - beta) * bv[i];
    }
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
    require_compatible(a, b, "sub");
    std::vector<double> out(a.size());
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return ParamVector(a.layout(), std::move(out));
}

ParamVector add(const ParamVector& a, const ParamVector& b) {
    require_compatible(a, b, "add");
    std::vector<double> out(a.size());
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return ParamVector(a.layout(), std::move(out));
}

} // namespace cema
