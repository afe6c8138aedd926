#pragma once

// Renormalization studies: reduced-dimension subspaces, lattice-mass
// rescaling with log-linear sweep fits, and the harmonic amplitude estimate.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/grid.hpp"
#include "tunnelgrid/lanczos.hpp"
#include "tunnelgrid/operator.hpp"
#include "tunnelgrid/potential.hpp"
#include "tunnelgrid/units.hpp"

namespace tunnelgrid {

/// Active axes plus pinned values for every other axis (unlisted pins
/// default to 0).
struct SubspaceSelection {
    std::vector<std::string> active;
    std::map<std::string, double> pins;

    double pin(const std::string& label) const {
        auto it = pins.find(label);
        return it == pins.end() ? 0.0 : it->second;
    }
};

namespace detail {

inline void check_selection(const std::vector<std::string>& labels, const std::vector<Interval>& domain, const SubspaceSelection& sel) {
    if (sel.active.empty()) throw Error(ErrorCode::NoActiveAxis, "subspace has no active axis");
    for (const auto& a : sel.active) {
        if (std::find(labels.begin(), labels.end(), a) == labels.end()) throw Error(ErrorCode::DomainMismatch, "unknown axis '" + a + "'");
    }
    for (const auto& [label, _] : sel.pins) {
        if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
            throw Error(ErrorCode::DomainMismatch, "pin on unknown axis '" + label + "'");
        }
    }
    for (std::size_t d = 0; d < labels.size(); ++d) {
        if (std::find(sel.active.begin(), sel.active.end(), labels[d]) != sel.active.end()) continue;
        const double v = sel.pin(labels[d]);
        const double slack = 1e-9 * std::max(1.0, domain[d].span());
        if (v < domain[d].min - slack || v > domain[d].max + slack) {
            throw Error(ErrorCode::PinnedOutOfDomain, labels[d] + " = " + std::to_string(v) + " lies outside the domain");
        }
    }
}

}  // namespace detail

/// Restriction of `field` to the hyperplane through the pins; the result is
/// a field over the active axes only (in the field's axis order).
inline PotentialField subspace(const PotentialField& field, const SubspaceSelection& sel) {
    detail::check_selection(field.labels(), field.domain(), sel);
    std::vector<std::string> labels;
    std::vector<Interval> domain;
    std::vector<int> slot(field.dimension(), -1);
    std::vector<double> base(field.dimension(), 0.0);
    for (std::size_t d = 0; d < field.dimension(); ++d) {
        const auto& l = field.labels()[d];
        if (std::find(sel.active.begin(), sel.active.end(), l) != sel.active.end()) {
            slot[d] = static_cast<int>(labels.size());
            labels.push_back(l);
            domain.push_back(field.domain()[d]);
        } else {
            base[d] = std::clamp(sel.pin(l), field.domain()[d].min, field.domain()[d].max);
        }
    }
    return PotentialField(std::move(labels), std::move(domain), [field, slot, base](std::span<const double> x) {
        thread_local std::vector<double> y;
        y = base;
        for (std::size_t d = 0; d < slot.size(); ++d)
            if (slot[d] >= 0) y[d] = x[static_cast<std::size_t>(slot[d])];
        return field.eval_unchecked(y);
    });
}

/// The same restriction expressed as a grid with frozen axes, for solving on
/// the full field.
inline GridSpec subspace_grid(const GridSpec& grid, const SubspaceSelection& sel) {
    std::vector<std::string> labels;
    std::vector<Interval> domain;
    for (const auto& a : grid.axes()) {
        labels.push_back(a.label);
        domain.push_back({a.min, a.max});
    }
    detail::check_selection(labels, domain, sel);
    std::vector<AxisSpec> axes;
    for (const auto& a : grid.axes()) {
        if (std::find(sel.active.begin(), sel.active.end(), a.label) != sel.active.end()) {
            if (a.frozen()) throw Error(ErrorCode::AxisInactive, "axis " + a.label + " is frozen in the source grid");
            axes.push_back(a);
        } else {
            axes.push_back(AxisSpec::pinned(a.label, sel.pin(a.label)));
        }
    }
    return GridSpec(std::move(axes));
}

struct MassRescale {
    double m = units::mass_nb;
    double m_ref = units::mass_nb;

    MassRescale(double mass, double reference = units::mass_nb) : m(mass), m_ref(reference) {
        if (!(m > 0.0) || !(m_ref > 0.0)) throw Error(ErrorCode::NonPositiveMass, "rescale masses must be positive");
    }
    double ratio() const noexcept { return m / m_ref; }
    double factor() const noexcept { return std::sqrt(m / m_ref); }
};

/// Kinetic form: the axis' kinetic coefficient is divided by m / m_ref.
inline GridOperator mass_rescale(const GridOperator& op, const MassRescale& r, const std::string& axis = "Q") {
    if (!op.grid().has_axis(axis)) throw Error(ErrorCode::AxisInactive, "grid has no axis '" + axis + "'");
    const std::size_t d = op.grid().axis_index(axis);
    if (op.grid().axis(d).frozen()) throw Error(ErrorCode::AxisInactive, "axis '" + axis + "' is frozen");
    return op.with_mass_factor(d, op.mass_factor(d) * r.ratio());
}

struct StretchedProblem {
    PotentialField field;
    GridSpec grid;
};

/// Coordinate form: the axis is replaced by Q' = sqrt(m / m_ref) Q with the
/// same node count, so the kinetic coefficient stays untouched.
inline StretchedProblem mass_rescale(const PotentialField& field, const GridSpec& grid, const MassRescale& r,
                                     const std::string& axis = "Q") {
    if (!grid.has_axis(axis)) throw Error(ErrorCode::AxisInactive, "grid has no axis '" + axis + "'");
    const std::size_t d = grid.axis_index(axis);
    if (grid.axis(d).frozen()) throw Error(ErrorCode::AxisInactive, "axis '" + axis + "' is frozen");
    const std::size_t fd = field.axis(axis);
    const double f = r.factor();
    auto domain = field.domain();
    domain[fd] = {domain[fd].min * f, domain[fd].max * f};
    PotentialField stretched(field.labels(), domain, [field, fd, f](std::span<const double> x) {
        thread_local std::vector<double> y;
        y.assign(x.begin(), x.end());
        y[fd] /= f;
        return field.eval_unchecked(y);
    });
    auto axes = grid.axes();
    axes[d].min *= f;
    axes[d].max *= f;
    return {std::move(stretched), GridSpec(std::move(axes))};
}

struct SweepPoint {
    double mass = 0.0;
    double factor = 0.0;     // sqrt(m / m_ref)
    double splitting = 0.0;  // J, meV
    bool converged = false;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // ascending mass
    std::size_t duplicates = 0;      // masses dropped as repeats
    double slope = 0.0;              // d ln J / d factor
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t fitted = 0;
    bool partial = false;            // some points excluded from the fit
};

/// Ground doublet gap from the two lowest eigenpairs; converged only when
/// both residuals are below J / 100.
inline SweepPoint splitting_point(const GridOperator& op, const LanczosOptions& opt) {
    auto o = opt;
    o.k = std::max<std::size_t>(2, opt.k);
    const auto r = lowest(op, o);
    SweepPoint p;
    p.splitting = r.eigenvalues[1] - r.eigenvalues[0];
    p.converged = r.converged && p.splitting > 0.0 && r.residuals[0] < p.splitting / 100.0 && r.residuals[1] < p.splitting / 100.0;
    return p;
}

struct LogLinearFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

/// Unweighted least squares of y on x.
inline LogLinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2) throw Error(ErrorCode::InsufficientPoints, "need at least two points to fit");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::InsufficientPoints, "fit abscissae are identical");
    LogLinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

/// Fits ln J against sqrt(m / m_ref) over the converged points.
inline void fit_sweep(SweepResult& s) {
    std::vector<double> x, y;
    for (const auto& p : s.points) {
        if (p.converged && p.splitting > 0.0) {
            x.push_back(p.factor);
            y.push_back(std::log(p.splitting));
        }
    }
    s.fitted = x.size();
    s.partial = s.fitted < s.points.size();
    if (x.size() < 3) throw Error(ErrorCode::InsufficientPoints, std::to_string(x.size()) + " converged point(s); need 3");
    const auto f = fit_line(x, y);
    s.slope = f.slope;
    s.intercept = f.intercept;
    s.r2 = f.r2;
}

/// Sorted, de-duplicated mass list; throws when fewer than three remain.
inline std::vector<double> sweep_masses(std::vector<double> masses, std::size_t* duplicates = nullptr) {
    for (double m : masses)
        if (!(m > 0.0)) throw Error(ErrorCode::NonPositiveMass, "sweep mass " + std::to_string(m));
    std::sort(masses.begin(), masses.end());
    const auto before = masses.size();
    masses.erase(std::unique(masses.begin(), masses.end()), masses.end());
    if (duplicates) *duplicates = before - masses.size();
    if (masses.size() < 3) throw Error(ErrorCode::InsufficientPoints, std::to_string(masses.size()) + " distinct mass(es); need 3");
    return masses;
}

/// J for each lattice mass on `axis`, then the log-linear fit.
inline SweepResult sweep_mass(const GridOperator& op, std::vector<double> masses, const LanczosOptions& opt = {},
                              double m_ref = units::mass_nb, const std::string& axis = "Q") {
    SweepResult s;
    for (double m : sweep_masses(std::move(masses), &s.duplicates)) {
        const MassRescale r(m, m_ref);
        auto p = splitting_point(mass_rescale(op, r, axis), opt);
        p.mass = m;
        p.factor = r.factor();
        s.points.push_back(p);
    }
    fit_sweep(s);
    return s;
}

struct HarmonicEstimate {
    double hbar_omega = 0.0;       // meV
    double amplitude_ratio = 0.0;  // psi(Q_c) / psi(0) of the Gaussian ground state
};

/// Lattice-mode frequency from the coincidence energy, w = sqrt(2 E_c) / Q_c
/// in mass-weighted units, and the Gaussian amplitude exp(-w Q_c^2 / 2 hbar).
inline HarmonicEstimate harmonic_estimate(double e_c, double q_c, double hbar2 = units::hbar2) {
    if (!(e_c > 0.0) || !(q_c > 0.0)) throw Error(ErrorCode::NonPositiveInput, "E_c and Q_c must be positive");
    if (!(hbar2 > 0.0)) throw Error(ErrorCode::NonPositiveInput, "hbar^2 must be positive");
    HarmonicEstimate h;
    h.hbar_omega = std::sqrt(hbar2 * 2.0 * e_c) / q_c;
    h.amplitude_ratio = std::exp(-h.hbar_omega * q_c * q_c / (2.0 * hbar2));
    return h;
}

}  // namespace tunnelgrid
