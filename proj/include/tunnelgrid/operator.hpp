#pragma once

// Finite-difference Hamiltonian on a rectangular grid,
//   H = sum_d -(hbar^2 / 2 mu_d) d^2/dx_d^2 + V(x),
// with Dirichlet-zero values just outside the node box. mu_d is a
// dimensionless mass factor per axis (1 for ordinary mass-weighted axes).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <tuple>
#include <vector>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/grid.hpp"
#include "tunnelgrid/potential.hpp"
#include "tunnelgrid/units.hpp"

namespace tunnelgrid {

class GridOperator {
public:
    GridOperator(GridSpec grid, std::vector<double> potential, int order = 2, double hbar2 = units::hbar2)
        : grid_(std::move(grid)), potential_(std::move(potential)), order_(order), hbar2_(hbar2),
          mass_factor_(grid_.dimension(), 1.0) {
        if (order != 2 && order != 4) throw Error(ErrorCode::OrderUnsupported, "stencil order " + std::to_string(order));
        if (potential_.size() != grid_.point_count()) {
            throw Error(ErrorCode::LengthMismatch, "potential has " + std::to_string(potential_.size()) + " values for " +
                                                       std::to_string(grid_.point_count()) + " nodes");
        }
        if (!(hbar2_ >= 0.0)) throw Error(ErrorCode::InvalidModel, "hbar^2 must be non-negative");
        rebuild();
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return potential_.size(); }
    int order() const noexcept { return order_; }
    double hbar2() const noexcept { return hbar2_; }
    const std::vector<double>& potential() const noexcept { return potential_; }
    double mass_factor(std::size_t d) const { return mass_factor_.at(d); }

    /// Divides the kinetic coefficient of axis d by `mu`.
    GridOperator with_mass_factor(std::size_t d, double mu) const {
        if (d >= grid_.dimension()) throw Error(ErrorCode::DomainMismatch, "axis index out of range");
        if (grid_.axis(d).frozen()) throw Error(ErrorCode::AxisInactive, "axis " + grid_.axis(d).label + " is frozen");
        if (!(mu > 0.0)) throw Error(ErrorCode::NonPositiveMass, "mass factor must be positive");
        GridOperator op = *this;
        op.mass_factor_[d] = mu;
        op.rebuild();
        return op;
    }

    /// Same operator with a constant added to the potential.
    GridOperator shifted(double c) const {
        GridOperator op = *this;
        for (double& v : op.potential_) v += c;
        op.rebuild();
        return op;
    }

    /// Diagonal of H (potential plus the kinetic centre weights).
    const std::vector<double>& diagonal() const noexcept { return diag_; }

    void apply(std::span<const double> x, std::span<double> y) const {
        if (x.size() != size() || y.size() != size()) throw Error(ErrorCode::LengthMismatch, "state length does not match grid");
        apply_unchecked(x.data(), y.data());
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(size());
        apply(x, y);
        return y;
    }

    /// y = H x. Each output node is computed independently, so results do not
    /// depend on the thread count. Work proceeds in lines along the last active
    /// axis (stride 1: frozen axes have count 1); every node accumulates its
    /// terms in the same fixed order (diagonal, then axes in order).
    void apply_unchecked(const double* x, double* y) const {
        if (terms_.empty()) {
            for (std::size_t p = 0; p < size(); ++p) y[p] = diag_[p] * x[p];
            return;
        }
        const std::size_t axes = terms_.size();
        const AxisTerm& line = terms_.back();
        const std::size_t len = line.count;
        const auto lines = static_cast<std::ptrdiff_t>(size() / len);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t sl = 0; sl < lines; ++sl) {
            const std::size_t base = static_cast<std::size_t>(sl) * len;
            const double* xl = x + base;
            double* yl = y + base;
            const double* dl = diag_.data() + base;
            for (std::size_t j = 0; j < len; ++j) yl[j] = dl[j] * xl[j];
            for (std::size_t a = 0; a + 1 < axes; ++a) {
                const AxisTerm& t = terms_[a];
                const std::size_t i = (base / t.stride) % t.count;
                for (std::size_t r = 1; r <= t.reach; ++r) {
                    const double w = t.off[r - 1];
                    const bool lo = i >= r, hi = i + r < t.count;
                    const double* xm = lo ? xl - r * t.stride : nullptr;
                    const double* xp = hi ? xl + r * t.stride : nullptr;
                    if (lo && hi) {
                        for (std::size_t j = 0; j < len; ++j) yl[j] = (yl[j] + w * xm[j]) + w * xp[j];
                    } else if (lo) {
                        for (std::size_t j = 0; j < len; ++j) yl[j] += w * xm[j];
                    } else if (hi) {
                        for (std::size_t j = 0; j < len; ++j) yl[j] += w * xp[j];
                    }
                }
            }
            // along the line: interior nodes, then the edge nodes that have one neighbour
            for (std::size_t r = 1; r <= line.reach; ++r) {
                const double w = line.off[r - 1];
                for (std::size_t j = r; j + r < len; ++j) yl[j] = (yl[j] + w * xl[j - r]) + w * xl[j + r];
                for (std::size_t j = 0; j < r && j + r < len; ++j) yl[j] += w * xl[j + r];
                for (std::size_t j = std::max(r, len > r ? len - r : 0); j < len; ++j) yl[j] += w * xl[j - r];
            }
        }
    }

    /// Coordinate-list form (row, col, value), rows ascending.
    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets() const {
        std::vector<std::tuple<std::size_t, std::size_t, double>> out;
        std::vector<std::size_t> idx;
        for (std::size_t p = 0; p < size(); ++p) {
            out.emplace_back(p, p, diag_[p]);
            for (const auto& t : terms_) {
                const std::size_t i = (p / t.stride) % t.count;
                for (std::size_t r = 1; r <= t.reach; ++r) {
                    if (i >= r) out.emplace_back(p, p - r * t.stride, t.off[r - 1]);
                    if (i + r < t.count) out.emplace_back(p, p + r * t.stride, t.off[r - 1]);
                }
            }
        }
        return out;
    }

    void dump_triplets(std::ostream& os) const {
        const auto prec = os.precision(17);
        for (const auto& [r, c, v] : triplets()) os << r << ' ' << c << ' ' << v << '\n';
        os.precision(prec);
    }

    /// Gershgorin bounds on the spectrum.
    std::pair<double, double> spectral_bounds() const {
        double off = 0.0;
        for (const auto& t : terms_)
            for (std::size_t r = 0; r < t.reach; ++r) off += 2.0 * std::abs(t.off[r]);
        double lo = diag_.empty() ? 0.0 : diag_[0], hi = lo;
        for (double d : diag_) {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        return {lo - off, hi + off};
    }

private:
    struct AxisTerm {
        std::size_t stride = 1;
        std::size_t count = 1;
        std::size_t reach = 1;
        std::array<double, 2> off{};  // off-diagonal weights at distance 1, 2
    };

    void rebuild() {
        terms_.clear();
        diag_ = potential_;
        for (std::size_t d = 0; d < grid_.dimension(); ++d) {
            const auto& a = grid_.axis(d);
            if (a.frozen()) continue;
            const double h = a.spacing();
            const double c = hbar2_ / (2.0 * mass_factor_[d] * h * h);
            AxisTerm t;
            t.stride = grid_.stride(d);
            t.count = a.count;
            double centre;
            if (order_ == 2) {
                t.reach = 1;
                t.off = {-c, 0.0};
                centre = 2.0 * c;
            } else {
                t.reach = 2;
                t.off = {-4.0 / 3.0 * c, 1.0 / 12.0 * c};
                centre = 2.5 * c;
            }
            for (double& v : diag_) v += centre;
            terms_.push_back(t);
        }
    }

    GridSpec grid_;
    std::vector<double> potential_;
    int order_;
    double hbar2_;
    std::vector<double> mass_factor_;
    std::vector<double> diag_;
    std::vector<AxisTerm> terms_;
};

/// Samples `field` on `grid` and builds the Hamiltonian.
inline GridOperator assemble(const PotentialField& field, const GridSpec& grid, int order = 2, double hbar2 = units::hbar2) {
    if (order != 2 && order != 4) throw Error(ErrorCode::OrderUnsupported, "stencil order " + std::to_string(order));
    return GridOperator(grid, sample_on(field, grid), order, hbar2);
}

}  // namespace tunnelgrid
