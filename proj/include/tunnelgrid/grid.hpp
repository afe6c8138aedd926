#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"

namespace tunnelgrid {

inline constexpr std::size_t max_active_dimension = 5;

/// One grid axis in mass-weighted units. A frozen axis has count 1 and
/// min == max == the pinned coordinate.
struct AxisSpec {
    std::string label;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 1;

    static AxisSpec pinned(std::string label, double value) { return {std::move(label), value, value, 1}; }

    bool frozen() const noexcept { return count == 1; }
    double spacing() const noexcept { return frozen() ? 0.0 : (max - min) / static_cast<double>(count - 1); }
    double coordinate(std::size_t i) const noexcept {
        if (frozen()) return min;
        // pin the last node exactly on max
        return i + 1 == count ? max : min + static_cast<double>(i) * spacing();
    }
};

/// Rectangular grid, row-major with the last axis varying fastest.
class GridSpec {
public:
    GridSpec() = default;
    explicit GridSpec(std::vector<AxisSpec> axes) : axes_(std::move(axes)) { validate(); }

    const std::vector<AxisSpec>& axes() const noexcept { return axes_; }
    const AxisSpec& axis(std::size_t d) const { return axes_.at(d); }
    std::size_t dimension() const noexcept { return axes_.size(); }

    std::vector<std::size_t> active_axes() const {
        std::vector<std::size_t> out;
        for (std::size_t d = 0; d < axes_.size(); ++d)
            if (!axes_[d].frozen()) out.push_back(d);
        return out;
    }
    std::size_t active_dimension() const { return active_axes().size(); }

    std::size_t point_count() const noexcept {
        std::size_t n = 1;
        for (const auto& a : axes_) n *= a.count;
        return n;
    }

    /// Stride of axis d in the flat row-major index.
    std::size_t stride(std::size_t d) const noexcept {
        std::size_t s = 1;
        for (std::size_t e = d + 1; e < axes_.size(); ++e) s *= axes_[e].count;
        return s;
    }

    std::size_t axis_index(const std::string& label) const {
        for (std::size_t d = 0; d < axes_.size(); ++d)
            if (axes_[d].label == label) return d;
        throw Error(ErrorCode::DomainMismatch, "grid has no axis '" + label + "'");
    }
    bool has_axis(const std::string& label) const noexcept {
        for (const auto& a : axes_)
            if (a.label == label) return true;
        return false;
    }

    void unravel(std::size_t flat, std::vector<std::size_t>& idx) const {
        idx.resize(axes_.size());
        for (std::size_t d = axes_.size(); d-- > 0;) {
            idx[d] = flat % axes_[d].count;
            flat /= axes_[d].count;
        }
    }

    std::size_t ravel(const std::vector<std::size_t>& idx) const {
        std::size_t flat = 0;
        for (std::size_t d = 0; d < axes_.size(); ++d) flat = flat * axes_[d].count + idx[d];
        return flat;
    }

    void node(std::size_t flat, std::vector<double>& x) const {
        x.resize(axes_.size());
        for (std::size_t d = axes_.size(); d-- > 0;) {
            x[d] = axes_[d].coordinate(flat % axes_[d].count);
            flat /= axes_[d].count;
        }
    }

    /// Multiplies the number of intervals on every active axis by `factor`,
    /// so the refined grid contains the original nodes.
    GridSpec refined(std::size_t factor) const {
        if (factor == 0) throw Error(ErrorCode::InvalidGrid, "refinement factor must be >= 1");
        auto axes = axes_;
        for (auto& a : axes)
            if (!a.frozen()) a.count = (a.count - 1) * factor + 1;
        return GridSpec(std::move(axes));
    }

private:
    void validate() const {
        std::set<std::string> seen;
        for (const auto& a : axes_) {
            if (!seen.insert(a.label).second) throw Error(ErrorCode::InvalidGrid, "duplicate axis label '" + a.label + "'");
            if (!std::isfinite(a.min) || !std::isfinite(a.max)) throw Error(ErrorCode::InvalidGrid, "non-finite bounds on axis " + a.label);
            if (a.count == 0) throw Error(ErrorCode::InvalidGrid, "axis " + a.label + " has zero points");
            if (a.frozen()) {
                if (a.min != a.max) throw Error(ErrorCode::InvalidGrid, "frozen axis " + a.label + " must have min == max");
            } else if (!(a.min < a.max)) {
                throw Error(ErrorCode::InvalidGrid, "axis " + a.label + " requires min < max");
            }
        }
        const auto active = active_axes().size();
        if (active < 1 || active > max_active_dimension) {
            throw Error(ErrorCode::InvalidGrid, "active dimension must be in 1..5, got " + std::to_string(active));
        }
    }

    std::vector<AxisSpec> axes_;
};

}  // namespace tunnelgrid
