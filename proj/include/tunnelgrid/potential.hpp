#pragma once

// Potential-energy fields over mass-weighted coordinates (meV).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/frame.hpp"
#include "tunnelgrid/grid.hpp"

namespace tunnelgrid {

struct Interval {
    double min = 0.0;
    double max = 0.0;
    double span() const noexcept { return max - min; }
};

/// Immutable evaluator over a rectangular domain box. Copies share the
/// underlying closure; concurrent evaluation is safe as long as the closure
/// itself is read-only (all closures built in this library are).
class PotentialField {
public:
    using Evaluator = std::function<double(std::span<const double>)>;

    PotentialField() = default;
    PotentialField(std::vector<std::string> labels, std::vector<Interval> domain, Evaluator f)
        : labels_(std::move(labels)), domain_(std::move(domain)), f_(std::make_shared<const Evaluator>(std::move(f))) {
        if (labels_.size() != domain_.size()) throw Error(ErrorCode::LengthMismatch, "one label per domain axis");
        for (const auto& d : domain_) {
            if (!(d.min <= d.max)) throw Error(ErrorCode::InvalidGrid, "field domain interval is empty");
        }
    }

    std::size_t dimension() const noexcept { return domain_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::vector<Interval>& domain() const noexcept { return domain_; }

    bool has_axis(const std::string& label) const noexcept {
        return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
    }
    std::size_t axis(const std::string& label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) throw Error(ErrorCode::DomainMismatch, "field has no axis '" + label + "'");
        return static_cast<std::size_t>(it - labels_.begin());
    }

    bool contains(std::span<const double> x) const noexcept {
        if (x.size() != domain_.size()) return false;
        for (std::size_t d = 0; d < x.size(); ++d) {
            const double slack = 1e-9 * std::max(1.0, domain_[d].span());
            if (!(x[d] >= domain_[d].min - slack && x[d] <= domain_[d].max + slack)) return false;
        }
        return true;
    }

    double eval(std::span<const double> x) const {
        if (x.size() != domain_.size()) {
            throw Error(ErrorCode::LengthMismatch, "point has dimension " + std::to_string(x.size()) + ", field has " +
                                                       std::to_string(domain_.size()));
        }
        if (!contains(x)) throw Error(ErrorCode::OutOfDomain, "point outside the field domain");
        const double v = (*f_)(x);
        if (!std::isfinite(v)) throw Error(ErrorCode::OutOfDomain, "field returned a non-finite energy");
        return v;
    }
    double eval(const MassWeightedVector& x) const { return eval(x.components()); }

    /// Hot-loop evaluation; caller guarantees dimension and domain.
    double eval_unchecked(std::span<const double> x) const { return (*f_)(x); }

    PotentialField shifted(double constant) const {
        auto f = f_;
        return PotentialField(labels_, domain_, [f, constant](std::span<const double> x) { return (*f)(x) + constant; });
    }

private:
    std::vector<std::string> labels_;
    std::vector<Interval> domain_;
    std::shared_ptr<const Evaluator> f_;
};

/// Node values of a field on a grid whose axes match the field's labels.
inline std::vector<double> sample_on(const PotentialField& field, const GridSpec& grid) {
    if (grid.dimension() != field.dimension()) throw Error(ErrorCode::DomainMismatch, "grid and field dimensions differ");
    for (std::size_t d = 0; d < grid.dimension(); ++d) {
        if (grid.axis(d).label != field.labels()[d]) {
            throw Error(ErrorCode::DomainMismatch, "grid axis '" + grid.axis(d).label + "' does not match field axis '" +
                                                       field.labels()[d] + "'");
        }
        const auto& a = grid.axis(d);
        const auto& dom = field.domain()[d];
        const double slack = 1e-9 * std::max(1.0, dom.span());
        if (a.min < dom.min - slack || a.max > dom.max + slack) {
            throw Error(ErrorCode::DomainMismatch, "grid axis '" + a.label + "' extends outside the field domain");
        }
    }
    std::vector<double> values(grid.point_count());
    std::vector<double> x;
    for (std::size_t p = 0; p < values.size(); ++p) {
        grid.node(p, x);
        values[p] = field.eval_unchecked(x);
        if (!std::isfinite(values[p])) throw Error(ErrorCode::OutOfDomain, "non-finite field value at grid node");
    }
    return values;
}

// ---------------------------------------------------------------------------
// Local minimization

struct Minimum {
    std::vector<double> x;
    double energy = 0.0;
};

/// Coordinate-wise Brent minimization over the `free` axes, bounded by `box`.
inline Minimum polish_minimum(const PotentialField& f, std::vector<double> x, const std::vector<bool>& free,
                              std::vector<double> step, const std::vector<Interval>& box) {
    double e = f.eval_unchecked(x);
    for (int sweep = 0; sweep < 500; ++sweep) {
        const double e_start = e;
        double max_move = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) {
            if (!free[d]) continue;
            const double lo = std::max(box[d].min, x[d] - step[d]);
            const double hi = std::min(box[d].max, x[d] + step[d]);
            if (!(hi > lo)) continue;
            auto line = [&](double t) {
                auto y = x;
                y[d] = t;
                return f.eval_unchecked(y);
            };
            const auto [t, v] = boost::math::tools::brent_find_minima(line, lo, hi, 26);
            const double move = std::abs(t - x[d]);
            if (v < e) {
                x[d] = t;
                e = v;
                max_move = std::max(max_move, move / std::max(1.0, box[d].span()));
            }
            const bool hit_edge = (t - lo < 1e-6 * step[d] && lo > box[d].min) || (hi - t < 1e-6 * step[d] && hi < box[d].max);
            step[d] = hit_edge ? 2.0 * step[d] : std::max(4.0 * move, 1e-7 * std::max(1.0, box[d].span()));
        }
        if (e_start - e < 1e-13 && max_move < 1e-10) break;
    }
    return {std::move(x), e};
}

/// Local minima of `field` restricted to the grid hyperplane: discrete
/// descent on node values, continuous polish over active axes, duplicates
/// and box-boundary points removed. Sorted by energy.
inline std::vector<Minimum> grid_minima(const PotentialField& field, const GridSpec& grid, std::span<const double> values) {
    const auto active = grid.active_axes();
    const std::size_t n = grid.point_count();
    std::vector<std::size_t> idx;
    std::vector<std::size_t> candidates;
    for (std::size_t p = 0; p < n; ++p) {
        grid.unravel(p, idx);
        bool is_min = true;
        for (std::size_t d : active) {
            const std::size_t s = grid.stride(d);
            if (idx[d] > 0 && values[p - s] < values[p]) is_min = false;
            if (idx[d] + 1 < grid.axis(d).count && values[p + s] < values[p]) is_min = false;
            if (!is_min) break;
        }
        if (is_min) candidates.push_back(p);
    }
    std::sort(candidates.begin(), candidates.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    if (candidates.size() > 64) candidates.resize(64);

    std::vector<Interval> box(grid.dimension());
    std::vector<bool> free(grid.dimension(), false);
    std::vector<double> step(grid.dimension(), 0.0);
    double min_h = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < grid.dimension(); ++d) {
        box[d] = {grid.axis(d).min, grid.axis(d).max};
        if (!grid.axis(d).frozen()) {
            free[d] = true;
            step[d] = 2.0 * grid.axis(d).spacing();
            min_h = std::min(min_h, grid.axis(d).spacing());
        }
    }

    std::vector<Minimum> found;
    std::vector<double> x;
    for (std::size_t p : candidates) {
        grid.node(p, x);
        Minimum m = polish_minimum(field, x, free, step, box);
        bool on_boundary = false;
        for (std::size_t d : active) {
            const double tol = 1e-6 * grid.axis(d).spacing();
            if (m.x[d] - box[d].min < tol || box[d].max - m.x[d] < tol) on_boundary = true;
        }
        if (on_boundary) continue;
        bool duplicate = false;
        for (auto& other : found) {
            double dist2 = 0.0;
            for (std::size_t d = 0; d < x.size(); ++d) dist2 += (other.x[d] - m.x[d]) * (other.x[d] - m.x[d]);
            if (std::sqrt(dist2) < 0.25 * min_h) {
                duplicate = true;
                if (m.energy < other.energy) other = m;
                break;
            }
        }
        if (!duplicate) found.push_back(std::move(m));
    }
    std::sort(found.begin(), found.end(), [](const Minimum& a, const Minimum& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.x < b.x;
    });
    return found;
}

inline std::vector<Minimum> grid_minima(const PotentialField& field, const GridSpec& grid) {
    const auto values = sample_on(field, grid);
    return grid_minima(field, grid, values);
}

/// Minima over the whole field domain, probed on `probe_count` points per axis.
inline std::vector<Minimum> find_minima(const PotentialField& field, std::size_t probe_count = 11) {
    std::vector<AxisSpec> axes;
    for (std::size_t d = 0; d < field.dimension(); ++d) {
        const auto& dom = field.domain()[d];
        if (dom.min == dom.max) axes.push_back(AxisSpec::pinned(field.labels()[d], dom.min));
        else axes.push_back({field.labels()[d], dom.min, dom.max, probe_count});
    }
    return grid_minima(field, GridSpec(std::move(axes)));
}

}  // namespace tunnelgrid
