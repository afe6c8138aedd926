#pragma once

// Landscape scalars of a double-well field: coincidence point (Q_c, E_c')
// and the symmetric barrier height V.

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/frame.hpp"
#include "tunnelgrid/potential.hpp"

namespace tunnelgrid {

struct WellPair {
    Minimum first;   // lower energy (ties: lower coordinates)
    Minimum second;
    double v_min = 0.0;
};

/// The two deepest local minima of the field.
inline WellPair locate_wells(const PotentialField& field, std::size_t probe_count = 15) {
    auto minima = find_minima(field, probe_count);
    if (minima.size() < 2) throw Error(ErrorCode::SingleWell, "field has " + std::to_string(minima.size()) + " local minima");
    return {minima[0], minima[1], minima[0].energy};
}

struct Coincidence {
    double q_c = 0.0;        // lattice coordinate where the two well curves cross
    double e_c_prime = 0.0;  // their common energy above the well minimum, meV
};

/// Solves V(q_1, Q) = V(q_2, Q) for Q between the two wells' Q values, with
/// the light-particle coordinates held at each well's position.
inline Coincidence coincidence(const PotentialField& field, const CoordinateFrame& frame, const WellPair& wells) {
    (void)frame;
    if (!field.has_axis("Q")) throw Error(ErrorCode::MissingQAxis, "field has no Q axis");
    const std::size_t qa = field.axis("Q");
    auto curve = [&](const Minimum& m, double q) {
        auto x = m.x;
        x[qa] = q;
        return field.eval_unchecked(x);
    };
    auto diff = [&](double q) { return curve(wells.first, q) - curve(wells.second, q); };
    double lo = std::min(wells.first.x[qa], wells.second.x[qa]);
    double hi = std::max(wells.first.x[qa], wells.second.x[qa]);
    if (hi - lo < 1e-12) throw Error(ErrorCode::NoCrossing, "both wells share the same Q");
    const double f_lo = diff(lo), f_hi = diff(hi);
    double q_c;
    if (f_lo == 0.0) {
        q_c = lo;
    } else if (f_hi == 0.0) {
        q_c = hi;
    } else {
        if ((f_lo > 0.0) == (f_hi > 0.0)) throw Error(ErrorCode::NoCrossing, "well curves do not intersect between the wells");
        std::uintmax_t iters = 200;
        auto [a, b] = boost::math::tools::toms748_solve(diff, lo, hi, f_lo, f_hi,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
        q_c = 0.5 * (a + b);
    }
    return {q_c, curve(wells.first, q_c) - wells.v_min};
}

inline Coincidence coincidence(const PotentialField& field, const CoordinateFrame& frame) {
    return coincidence(field, frame, locate_wells(field));
}

namespace detail {

/// Index of the axis (excluding `skip`) along which two points differ most.
inline std::size_t separation_axis(const std::vector<double>& a, const std::vector<double>& b, std::optional<std::size_t> skip) {
    std::size_t best = 0;
    double best_sep = -1.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        if (skip && *skip == d) continue;
        const double s = std::abs(a[d] - b[d]);
        if (s > best_sep) {
            best_sep = s;
            best = d;
        }
    }
    return best;
}

}  // namespace detail

/// Barrier along the site-to-site coordinate on the Q = Q_c slice, with the
/// remaining coordinates relaxed at each point; measured from the deeper
/// slice minimum. Fields without a Q axis use the full landscape.
inline double barrier_height(const PotentialField& field, const CoordinateFrame& frame, const WellPair& wells) {
    std::optional<std::size_t> qa;
    double q_c = 0.0;
    if (field.has_axis("Q")) {
        qa = field.axis("Q");
        q_c = coincidence(field, frame, wells).q_c;
    }
    const std::size_t path = field.has_axis("q_y") ? field.axis("q_y") : detail::separation_axis(wells.first.x, wells.second.x, qa);
    const std::size_t dims = field.dimension();
    const auto& box = field.domain();

    std::vector<bool> transverse(dims, true);
    transverse[path] = false;
    if (qa) transverse[*qa] = false;
    const bool any_transverse = std::find(transverse.begin(), transverse.end(), true) != transverse.end();
    std::vector<double> steps(dims);
    for (std::size_t d = 0; d < dims; ++d) steps[d] = 0.05 * std::max(box[d].span(), 1e-6);

    std::vector<double> warm;
    auto relaxed = [&](const std::vector<double>& start, double p) {
        auto x = start;
        x[path] = p;
        if (qa) x[*qa] = q_c;
        if (!any_transverse) return Minimum{x, field.eval_unchecked(x)};
        return polish_minimum(field, x, transverse, steps, box);
    };

    // slice minima: relax everything except Q, starting from each well
    std::vector<bool> slice_free(dims, true);
    if (qa) slice_free[*qa] = false;
    double slice_min = std::numeric_limits<double>::infinity();
    std::array<double, 2> ends{};
    for (int k = 0; k < 2; ++k) {
        auto x = (k == 0 ? wells.first : wells.second).x;
        if (qa) x[*qa] = q_c;
        const auto m = polish_minimum(field, x, slice_free, steps, box);
        slice_min = std::min(slice_min, m.energy);
        ends[k] = m.x[path];
    }
    warm = wells.first.x;
    auto profile = [&](double p) {
        const auto m = relaxed(warm, p);
        warm = m.x;
        return -m.energy;
    };
    const double lo = std::min(ends[0], ends[1]), hi = std::max(ends[0], ends[1]);
    if (hi - lo < 1e-12) throw Error(ErrorCode::NoBarrier, "wells coincide on the slice");
    const auto [p_top, neg_top] = boost::math::tools::brent_find_minima(profile, lo, hi, 26);
    const double width = hi - lo;
    if (p_top - lo < 1e-6 * width || hi - p_top < 1e-6 * width) {
        throw Error(ErrorCode::NoBarrier, "energy is monotone along the site-to-site path");
    }
    const double top = -neg_top;
    if (!(top > slice_min)) throw Error(ErrorCode::NoBarrier, "no energy rise between the wells");
    return top - slice_min;
}

inline double barrier_height(const PotentialField& field, const CoordinateFrame& frame) {
    return barrier_height(field, frame, locate_wells(field));
}

}  // namespace tunnelgrid
