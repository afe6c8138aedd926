#pragma once

// Four-level system from a grid solve of a four-well landscape.

#include <algorithm>
#include <array>
#include <string>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/grid.hpp"
#include "tunnelgrid/lanczos.hpp"
#include "tunnelgrid/operator.hpp"
#include "tunnelgrid/potential.hpp"
#include "tunnelgrid/spectra.hpp"
#include "tunnelgrid/strain.hpp"

namespace tunnelgrid {

struct FlsGridResult {
    std::array<double, 4> levels{};       // referenced to (E1 + E2) / 2
    double j = 0.0;                       // effective nearest-neighbour splitting, -E0
    double next_nearest = 0.0;            // E3 - J; zero for a pure nearest-neighbour ring
    std::array<double, 4> ring{};         // ring-model levels for the same J
    std::vector<Minimum> wells;
    EigenResult eigen;
};

/// Four lowest levels of the landscape on `grid`, compared with the
/// nearest-neighbour ring of the same J.
inline FlsGridResult fls_from_grid(const PotentialField& field, const GridSpec& grid, LanczosOptions opt = {}, int order = 2,
                                   double hbar2 = units::hbar2) {
    FlsGridResult r;
    r.wells = well_centers(field, grid);
    if (r.wells.size() != 4) {
        throw Error(ErrorCode::FourWellsNotFound, "found " + std::to_string(r.wells.size()) + " well(s) on the grid");
    }
    opt.k = std::max<std::size_t>(opt.k, 4);
    r.eigen = lowest(assemble(field, grid, order, hbar2), opt);
    if (!r.eigen.converged) throw Error(ErrorCode::NoConvergence, "four-level solve did not converge");
    const auto& e = r.eigen.eigenvalues;
    const double ref = 0.5 * (e[1] + e[2]);
    for (std::size_t i = 0; i < 4; ++i) r.levels[i] = e[i] - ref;
    r.j = -r.levels[0];
    r.next_nearest = r.levels[3] - r.j;
    r.ring = fls_levels(SiteNetwork::ring(4, r.j));
    return r;
}

}  // namespace tunnelgrid
