#pragma once

// From eigenpairs to physics: well partition, occupations, parity, harmonic
// quantum-number labels, splittings and transition tables.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/grid.hpp"
#include "tunnelgrid/lanczos.hpp"
#include "tunnelgrid/potential.hpp"
#include "tunnelgrid/units.hpp"

namespace tunnelgrid {

/// Well centres on a grid hyperplane, ordered lexicographically by coordinates.
inline std::vector<Minimum> well_centers(const PotentialField& field, const GridSpec& grid) {
    auto minima = grid_minima(field, grid);
    std::sort(minima.begin(), minima.end(), [](const Minimum& a, const Minimum& b) { return a.x < b.x; });
    return minima;
}

struct WellPartition {
    GridSpec grid;
    std::vector<Minimum> centers;
    std::vector<std::size_t> well;  // per grid node

    std::size_t well_count() const noexcept { return centers.size(); }
};

/// Voronoi cells of the centres in the mass-weighted metric; exact ties go to
/// the lower-index centre.
inline WellPartition partition_from_centers(const GridSpec& grid, std::vector<Minimum> centers) {
    if (centers.empty()) throw Error(ErrorCode::SingleWell, "no well centres");
    WellPartition p{grid, std::move(centers), std::vector<std::size_t>(grid.point_count())};
    double span = 0.0;
    for (const auto& a : grid.axes()) span = std::max(span, a.max - a.min);
    const double tie = 1e-9 * span * span;
    std::vector<double> x;
    for (std::size_t n = 0; n < grid.point_count(); ++n) {
        grid.node(n, x);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < p.centers.size(); ++c) {
            double d2 = 0.0;
            for (std::size_t d = 0; d < x.size(); ++d) d2 += (x[d] - p.centers[c].x[d]) * (x[d] - p.centers[c].x[d]);
            if (d2 < best_d - tie) {
                best_d = d2;
                best = c;
            }
        }
        p.well[n] = best;
    }
    return p;
}

inline WellPartition partition_wells(const PotentialField& field, const GridSpec& grid) {
    auto centers = well_centers(field, grid);
    if (centers.size() < 2) throw Error(ErrorCode::SingleWell, "found " + std::to_string(centers.size()) + " well(s) on the grid");
    return partition_from_centers(grid, std::move(centers));
}

/// Trapezoid weight of every node over the active axes.
inline std::vector<double> trapezoid_weights(const GridSpec& grid) {
    std::vector<double> w(grid.point_count(), 1.0);
    std::vector<std::size_t> idx;
    for (std::size_t p = 0; p < w.size(); ++p) {
        grid.unravel(p, idx);
        for (std::size_t d = 0; d < grid.dimension(); ++d) {
            const auto& a = grid.axis(d);
            if (a.frozen()) continue;
            w[p] *= (idx[d] == 0 || idx[d] + 1 == a.count) ? 0.5 * a.spacing() : a.spacing();
        }
    }
    return w;
}

/// Probability in each well, normalized by the total quadrature weight.
inline std::vector<double> occupations(std::span<const double> state, const WellPartition& partition) {
    if (state.size() != partition.well.size()) throw Error(ErrorCode::LengthMismatch, "state does not match the partition grid");
    double norm2 = 0.0;
    for (double v : state) norm2 += v * v;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6) {
        throw Error(ErrorCode::UnnormalizedState, "state norm " + std::to_string(std::sqrt(norm2)));
    }
    const auto w = trapezoid_weights(partition.grid);
    std::vector<double> occ(partition.well_count(), 0.0);
    double total = 0.0;
    for (std::size_t p = 0; p < state.size(); ++p) {
        const double m = state[p] * state[p] * w[p];
        occ[partition.well[p]] += m;
        total += m;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::UnnormalizedState, "state has no weight on the grid interior");
    for (double& o : occ) o /= total;
    return occ;
}

enum class Parity { Symmetric, Antisymmetric, Unassigned };

inline const char* parity_name(Parity p) {
    switch (p) {
        case Parity::Symmetric: return "symmetric";
        case Parity::Antisymmetric: return "antisymmetric";
        case Parity::Unassigned: return "unassigned";
    }
    return "unassigned";
}

struct ParityResult {
    Parity parity = Parity::Unassigned;
    double overlap = 0.0;  // <psi | R psi> or the well-sum correlation
};

/// Parity of a state under exchange of the two wells of a partition. When
/// the grid is symmetric about the well midpoint, the reflection of every
/// axis on which the centres differ is applied directly; otherwise the sign
/// relation of the well-summed amplitudes decides.
inline ParityResult parity(std::span<const double> state, const WellPartition& partition) {
    if (partition.well_count() != 2) return {};
    const auto& g = partition.grid;
    const auto& c0 = partition.centers[0].x;
    const auto& c1 = partition.centers[1].x;
    std::vector<bool> mirror(g.dimension(), false);
    bool symmetric_grid = true;
    for (std::size_t d = 0; d < g.dimension(); ++d) {
        const auto& a = g.axis(d);
        if (a.frozen()) continue;
        const double tol = 1e-3 * a.spacing();
        if (std::abs(c0[d] - c1[d]) > tol) {
            mirror[d] = true;
            const double mid = 0.5 * (c0[d] + c1[d]);
            if (std::abs(0.5 * (a.min + a.max) - mid) > tol) symmetric_grid = false;
        }
    }
    if (symmetric_grid) {
        double overlap = 0.0;
        std::vector<std::size_t> idx;
        for (std::size_t p = 0; p < state.size(); ++p) {
            g.unravel(p, idx);
            for (std::size_t d = 0; d < idx.size(); ++d)
                if (mirror[d]) idx[d] = g.axis(d).count - 1 - idx[d];
            overlap += state[p] * state[g.ravel(idx)];
        }
        if (overlap > 0.5) return {Parity::Symmetric, overlap};
        if (overlap < -0.5) return {Parity::Antisymmetric, overlap};
        return {Parity::Unassigned, overlap};
    }
    std::array<double, 2> sum{0.0, 0.0}, abs_sum{0.0, 0.0};
    for (std::size_t p = 0; p < state.size(); ++p) {
        sum[partition.well[p]] += state[p];
        abs_sum[partition.well[p]] += std::abs(state[p]);
    }
    const double corr = sum[0] * sum[1] / std::max(abs_sum[0] * abs_sum[1], std::numeric_limits<double>::min());
    if (std::abs(corr) < 1e-3) return {Parity::Unassigned, corr};
    return {corr > 0.0 ? Parity::Symmetric : Parity::Antisymmetric, corr};
}

/// Sign changes of the state along lines of `axis`, weighted by the line's
/// probability and rounded to the dominant count.
inline int nodal_count(std::span<const double> state, const GridSpec& grid, std::size_t axis) {
    const std::size_t n = grid.axis(axis).count;
    const std::size_t stride = grid.stride(axis);
    double amax = 0.0;
    for (double v : state) amax = std::max(amax, std::abs(v));
    const double floor = 1e-8 * amax;
    std::map<int, double> weight;
    for (std::size_t p = 0; p < state.size(); ++p) {
        if ((p / stride) % n != 0) continue;  // line start
        int changes = 0;
        double last = 0.0, mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = state[p + i * stride];
            mass += v * v;
            if (std::abs(v) <= floor) continue;
            if (last != 0.0 && (v > 0.0) != (last > 0.0)) ++changes;
            last = v;
        }
        weight[changes] += mass;
    }
    int best = 0;
    double best_w = -1.0;
    for (const auto& [c, w] : weight) {
        if (w > best_w) {
            best_w = w;
            best = c;
        }
    }
    return best;
}

struct StateLabel {
    std::vector<int> quanta;  // per grid axis; frozen axes are 0
    Parity parity = Parity::Unassigned;
    double overlap = 0.0;     // norm of the projection onto the assigned product functions
    bool assigned = false;

    std::string text(const GridSpec& grid) const {
        if (!assigned) return "unassigned";
        std::string s = "(";
        bool first = true;
        for (std::size_t d = 0; d < quanta.size(); ++d) {
            if (grid.axis(d).frozen()) continue;
            s += (first ? "" : ",") + std::to_string(quanta[d]);
            first = false;
        }
        return s + ")";
    }
};

namespace detail {

/// Unnormalized Hermite function H_n(xi) exp(-xi^2/2).
inline double hermite_function(int n, double xi) {
    double h0 = 1.0, h1 = 2.0 * xi;
    double h = n == 0 ? h0 : h1;
    for (int k = 2; k <= n; ++k) {
        h = 2.0 * xi * h1 - 2.0 * (k - 1) * h0;
        h0 = h1;
        h1 = h;
    }
    return h * std::exp(-0.5 * xi * xi);
}

inline void quanta_up_to(std::size_t axes, int total, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (cur.size() == axes) {
        out.push_back(cur);
        return;
    }
    const int used = std::accumulate(cur.begin(), cur.end(), 0);
    for (int q = 0; q + used <= total; ++q) {
        cur.push_back(q);
        quanta_up_to(axes, total, cur, out);
        cur.pop_back();
    }
}

}  // namespace detail

/// Harmonic length s = sqrt(hbar^2 / hbar w) per active axis at a well,
/// from second differences of the field. Non-positive curvature gives 0.
inline std::vector<double> harmonic_lengths(const PotentialField& field, const GridSpec& grid, const Minimum& well,
                                            double hbar2 = units::hbar2) {
    std::vector<double> s(grid.dimension(), 0.0);
    for (std::size_t d = 0; d < grid.dimension(); ++d) {
        const auto& a = grid.axis(d);
        if (a.frozen()) continue;
        const auto& dom = field.domain()[d];
        double h = 0.25 * a.spacing();
        h = std::min({h, well.x[d] - dom.min, dom.max - well.x[d]});
        if (!(h > 0.0)) continue;
        auto xp = well.x, xm = well.x;
        xp[d] += h;
        xm[d] -= h;
        const double k = (field.eval_unchecked(xp) - 2.0 * field.eval_unchecked(well.x) + field.eval_unchecked(xm)) / (h * h);
        if (k > 0.0) s[d] = std::sqrt(hbar2 / std::sqrt(hbar2 * k));
    }
    return s;
}

/// Labels each state by its best-matching product of per-axis harmonic
/// functions centred in the wells (total quanta <= 3). The overlap is the
/// norm of the state's projection on the span of that product placed in
/// every well; below 0.4 the state stays unassigned.
inline std::vector<StateLabel> assign_states(const EigenResult& result, const PotentialField& field, const GridSpec& grid,
                                             double hbar2 = units::hbar2) {
    auto centers = well_centers(field, grid);
    if (centers.empty()) throw Error(ErrorCode::SingleWell, "no well minimum on the grid");
    std::optional<WellPartition> partition;
    if (centers.size() >= 2) partition = partition_from_centers(grid, centers);

    const auto active = grid.active_axes();
    std::vector<std::vector<int>> candidates;
    {
        std::vector<int> cur;
        detail::quanta_up_to(active.size(), 3, cur, candidates);
    }
    std::vector<std::vector<double>> lengths;
    for (const auto& c : centers) lengths.push_back(harmonic_lengths(field, grid, c, hbar2));

    // per well, per active axis, per quantum: 1-D factor on the axis nodes
    const std::size_t points = grid.point_count();
    std::vector<std::vector<std::vector<std::vector<double>>>> factor(centers.size());
    for (std::size_t w = 0; w < centers.size(); ++w) {
        factor[w].resize(active.size());
        for (std::size_t ai = 0; ai < active.size(); ++ai) {
            const std::size_t d = active[ai];
            const auto& a = grid.axis(d);
            for (int q = 0; q <= 3; ++q) {
                std::vector<double> f(a.count, 0.0);
                const double s = lengths[w][d];
                for (std::size_t i = 0; i < a.count; ++i) {
                    f[i] = s > 0.0 ? detail::hermite_function(q, (a.coordinate(i) - centers[w].x[d]) / s) : 0.0;
                }
                factor[w][ai].push_back(std::move(f));
            }
        }
    }

    std::vector<StateLabel> labels(result.size());
    std::vector<std::size_t> idx;
    std::vector<std::vector<double>> basis(centers.size(), std::vector<double>(points));
    std::vector<std::vector<double>> best_overlap(result.size(), std::vector<double>(1, -1.0));
    for (const auto& cand : candidates) {
        for (std::size_t w = 0; w < centers.size(); ++w) {
            double n2 = 0.0;
            for (std::size_t p = 0; p < points; ++p) {
                grid.unravel(p, idx);
                double v = 1.0;
                for (std::size_t ai = 0; ai < active.size(); ++ai) v *= factor[w][ai][cand[ai]][idx[active[ai]]];
                basis[w][p] = v;
                n2 += v * v;
            }
            const double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
            for (double& v : basis[w]) v *= inv;
        }
        // orthonormalize the well copies (they overlap slightly through the barrier)
        for (std::size_t w = 1; w < centers.size(); ++w) {
            for (std::size_t u = 0; u < w; ++u) {
                const double c = std::inner_product(basis[w].begin(), basis[w].end(), basis[u].begin(), 0.0);
                for (std::size_t p = 0; p < points; ++p) basis[w][p] -= c * basis[u][p];
            }
            const double n2 = std::inner_product(basis[w].begin(), basis[w].end(), basis[w].begin(), 0.0);
            const double inv = n2 > 1e-12 ? 1.0 / std::sqrt(n2) : 0.0;
            for (double& v : basis[w]) v *= inv;
        }
        for (std::size_t s = 0; s < result.size(); ++s) {
            const auto& psi = result.eigenvectors[s];
            double proj2 = 0.0;
            for (std::size_t w = 0; w < centers.size(); ++w) {
                const double a = std::inner_product(psi.begin(), psi.end(), basis[w].begin(), 0.0);
                proj2 += a * a;
            }
            const double ov = std::sqrt(proj2);
            if (ov > best_overlap[s][0]) {
                best_overlap[s][0] = ov;
                labels[s].quanta.assign(grid.dimension(), 0);
                for (std::size_t ai = 0; ai < active.size(); ++ai) labels[s].quanta[active[ai]] = cand[ai];
                labels[s].overlap = std::min(ov, 1.0);
            }
        }
    }
    for (std::size_t s = 0; s < result.size(); ++s) {
        labels[s].assigned = labels[s].overlap >= 0.4;
        if (partition && partition->well_count() == 2) labels[s].parity = parity(result.eigenvectors[s], *partition).parity;
    }
    return labels;
}

/// Ground-doublet splitting E_1 - E_0 of a labelled result.
inline double tunnel_splitting(const EigenResult& result, std::span<const StateLabel> labels) {
    if (result.size() < 2 || labels.size() < 2) throw Error(ErrorCode::DoubletNotFound, "need at least two states");
    const auto& a = labels[0];
    const auto& b = labels[1];
    const bool pair = a.assigned && b.assigned && a.quanta == b.quanta && a.parity != Parity::Unassigned &&
                      b.parity != Parity::Unassigned && a.parity != b.parity;
    if (!pair) throw Error(ErrorCode::DoubletNotFound, "lowest two states are not a parity pair with matching labels");
    const double j = std::max(0.0, result.eigenvalues[1] - result.eigenvalues[0]);
    if (!(result.residuals[0] < j / 100.0 && result.residuals[1] < j / 100.0)) {
        throw Error(ErrorCode::SplittingUnresolved, "doublet residuals exceed J/100 (J = " + std::to_string(j) + " meV)");
    }
    return j;
}

struct Transition {
    std::vector<int> quanta;
    double hbar_omega = 0.0;  // mean of the group minus mean of the ground group, meV
    double splitting = 0.0;   // intra-group gap, meV
    std::size_t members = 0;
};

/// Groups states by identical labels and reports the three lowest
/// single-quantum excitations along non-lattice axes. J_i is the gap within
/// each excited group.
inline std::vector<Transition> transition_table(const EigenResult& result, std::span<const StateLabel> labels, const GridSpec& grid,
                                                std::size_t want = 3) {
    std::map<std::vector<int>, std::vector<double>> groups;
    for (std::size_t s = 0; s < std::min(result.size(), labels.size()); ++s) {
        if (labels[s].assigned) groups[labels[s].quanta].push_back(result.eigenvalues[s]);
    }
    const std::vector<int> ground(grid.dimension(), 0);
    auto git = groups.find(ground);
    if (git == groups.end()) throw Error(ErrorCode::InsufficientAssignedStates, "ground state is unassigned");
    auto mean = [](const std::vector<double>& e) { return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size()); };
    const double e0 = mean(git->second);
    std::vector<Transition> out;
    for (const auto& [q, e] : groups) {
        int total = 0;
        bool lattice = false;
        for (std::size_t d = 0; d < q.size(); ++d) {
            total += q[d];
            const auto& l = grid.axis(d).label;
            if (q[d] != 0 && (l == "Q" || l == "P" || l == "S" || l == "T")) lattice = true;
        }
        if (total != 1 || lattice) continue;
        const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
        out.push_back({q, mean(e) - e0, *hi - *lo, e.size()});
    }
    std::sort(out.begin(), out.end(), [](const Transition& a, const Transition& b) { return a.hbar_omega < b.hbar_omega; });
    if (out.size() < want) {
        throw Error(ErrorCode::InsufficientAssignedStates,
                    "found " + std::to_string(out.size()) + " assigned fundamental(s), need " + std::to_string(want));
    }
    out.resize(want);
    return out;
}

inline double zero_point_energy(const EigenResult& result, double v_min) {
    if (result.size() == 0) throw Error(ErrorCode::NoConvergence, "no eigenvalues");
    return result.eigenvalues[0] - v_min;
}

/// Everything reported for one solve.
struct SpectrumResult {
    EigenResult eigen;
    std::vector<StateLabel> labels;
    std::vector<std::vector<double>> occupations;  // per state, per well
    double v_min = 0.0;
    double zpe = 0.0;
    std::optional<double> splitting;               // ground doublet J
    std::string splitting_status;                  // "ok" or the error code name
    std::vector<Transition> transitions;
};

/// Labels, occupations, ZPE, J and (when possible) the transition table.
inline SpectrumResult analyze(EigenResult eigen, const PotentialField& field, const GridSpec& grid, double hbar2 = units::hbar2) {
    SpectrumResult s;
    s.labels = assign_states(eigen, field, grid, hbar2);
    const auto centers = well_centers(field, grid);
    s.v_min = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) s.v_min = std::min(s.v_min, c.energy);
    const auto partition = partition_from_centers(grid, centers);
    for (const auto& v : eigen.eigenvectors) s.occupations.push_back(occupations(v, partition));
    s.zpe = zero_point_energy(eigen, s.v_min);
    try {
        s.splitting = tunnel_splitting(eigen, s.labels);
        s.splitting_status = "ok";
    } catch (const Error& e) {
        s.splitting_status = std::string(code_name(e.code()));
    }
    try {
        s.transitions = transition_table(eigen, s.labels, grid);
    } catch (const Error&) {
        s.transitions.clear();
    }
    s.eigen = std::move(eigen);
    return s;
}

}  // namespace tunnelgrid
