#pragma once

// Strain coupling of defect sites and the discrete multi-site tunneling
// Hamiltonians built on top of it.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/units.hpp"

namespace tunnelgrid {

namespace detail {

inline Eigen::Matrix3d from_voigt(const std::array<double, 6>& v) {
    Eigen::Matrix3d m;
    m << v[0], v[5], v[4],
         v[5], v[1], v[3],
         v[4], v[3], v[2];
    return m;
}

inline void require_symmetric(const Eigen::Matrix3d& m, const char* what) {
    if (!m.allFinite()) throw Error(ErrorCode::InvalidTensor, std::string(what) + " has non-finite components");
    if (m(0, 1) != m(1, 0) || m(0, 2) != m(2, 0) || m(1, 2) != m(2, 1)) {
        throw Error(ErrorCode::InvalidTensor, std::string(what) + " must be symmetric");
    }
}

}  // namespace detail

/// Elastic dipole tensor P of one defect orientation, eV.
class ElasticDipole {
public:
    explicit ElasticDipole(const Eigen::Matrix3d& p) : p_(p) { detail::require_symmetric(p_, "elastic dipole"); }
    /// Voigt order xx, yy, zz, yz, xz, xy.
    static ElasticDipole voigt(const std::array<double, 6>& v) { return ElasticDipole(detail::from_voigt(v)); }

    const Eigen::Matrix3d& tensor() const noexcept { return p_; }
    ElasticDipole operator-(const ElasticDipole& o) const { return ElasticDipole(p_ - o.p_); }

private:
    Eigen::Matrix3d p_;
};

/// Small symmetric strain, |eps_ij| < 0.1.
class StrainTensor {
public:
    explicit StrainTensor(const Eigen::Matrix3d& e) : e_(e) {
        detail::require_symmetric(e_, "strain");
        if (e_.cwiseAbs().maxCoeff() >= 0.1) throw Error(ErrorCode::InvalidTensor, "strain components must stay below 0.1");
    }
    /// Voigt order xx, yy, zz, yz, xz, xy (tensor shear components, not engineering).
    static StrainTensor voigt(const std::array<double, 6>& v) { return StrainTensor(detail::from_voigt(v)); }

    const Eigen::Matrix3d& tensor() const noexcept { return e_; }
    /// Same direction scaled to unit Frobenius norm (the sanity bound does not apply).
    Eigen::Matrix3d direction() const {
        const double n = e_.norm();
        return n > 0.0 ? Eigen::Matrix3d(e_ / n) : Eigen::Matrix3d::Zero();
    }

private:
    Eigen::Matrix3d e_;
};

/// Double contraction A:B.
inline double contract(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) { return (a.array() * b.array()).sum(); }

/// Energy of site j relative to site i under strain, meV.
inline double asymmetry(const ElasticDipole& p_i, const ElasticDipole& p_j, const StrainTensor& eps) {
    return contract(p_j.tensor() - p_i.tensor(), eps.tensor()) * units::mev_per_ev;
}

struct TwoSiteLevels {
    double lower = 0.0;  // meV
    double upper = 0.0;
    double splitting() const noexcept { return upper - lower; }
};

/// Biased two-site tunneling levels +-sqrt(J^2 + Delta^2)/2.
inline TwoSiteLevels two_site_levels(double j, double delta) {
    if (!(j >= 0.0)) throw Error(ErrorCode::NonPositiveInput, "tunnel splitting must be non-negative");
    const double half = 0.5 * std::hypot(j, delta);
    return {-half, half};
}

/// Sites with on-site asymmetries and symmetric couplings (meV). Couplings
/// are stored as matrix elements, so a ring with splitting J carries -J/2.
struct SiteNetwork {
    std::vector<double> asymmetry;
    std::vector<std::pair<std::size_t, std::size_t>> bonds;
    std::vector<double> coupling;

    std::size_t size() const noexcept { return asymmetry.size(); }

    /// Ring of n sites: -J/2 between neighbours, J'/2 across the diagonals
    /// (sites i and i + n/2 for even n).
    static SiteNetwork ring(std::size_t n, double j, double j_prime = 0.0, std::vector<double> delta = {}) {
        if (n < 2 || n > 24) throw Error(ErrorCode::InvalidModel, "site networks hold 2..24 sites");
        SiteNetwork s;
        s.asymmetry = delta.empty() ? std::vector<double>(n, 0.0) : std::move(delta);
        if (s.asymmetry.size() != n) throw Error(ErrorCode::LengthMismatch, "one asymmetry per site");
        const std::size_t nn = n == 2 ? 1 : n;
        for (std::size_t i = 0; i < nn; ++i) s.add(i, (i + 1) % n, -0.5 * j);
        if (j_prime != 0.0 && n % 2 == 0 && n > 2) {
            for (std::size_t i = 0; i < n / 2; ++i) s.add(i, i + n / 2, 0.5 * j_prime);
        }
        return s;
    }

    void add(std::size_t a, std::size_t b, double t) {
        if (a >= size() || b >= size() || a == b) throw Error(ErrorCode::InvalidModel, "bad bond");
        bonds.emplace_back(a, b);
        coupling.push_back(t);
    }

    Eigen::MatrixXd hamiltonian() const {
        const auto n = static_cast<Eigen::Index>(size());
        if (n < 1 || n > 24) throw Error(ErrorCode::InvalidModel, "site networks hold 1..24 sites");
        if (coupling.size() != bonds.size()) throw Error(ErrorCode::LengthMismatch, "one coupling per bond");
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) h(i, i) = asymmetry[static_cast<std::size_t>(i)];
        for (std::size_t b = 0; b < bonds.size(); ++b) {
            const auto i = static_cast<Eigen::Index>(bonds[b].first), k = static_cast<Eigen::Index>(bonds[b].second);
            h(i, k) += coupling[b];
            h(k, i) += coupling[b];
        }
        return h;
    }
};

/// All levels of the network, ascending.
inline std::vector<double> network_levels(const SiteNetwork& net) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(net.hamiltonian(), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

namespace detail {

/// Nearest-neighbour and diagonal couplings of an unbiased uniform 4-ring,
/// if `net` is one.
inline std::optional<std::pair<double, double>> uniform_ring(const SiteNetwork& net) {
    for (double d : net.asymmetry)
        if (d != 0.0) return std::nullopt;
    std::optional<double> t, tp;
    for (std::size_t b = 0; b < net.bonds.size(); ++b) {
        const auto [i, k] = std::minmax(net.bonds[b].first, net.bonds[b].second);
        auto& slot = (k - i == 2) ? tp : t;
        if (slot && *slot != net.coupling[b]) return std::nullopt;
        slot = net.coupling[b];
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [i, k] : net.bonds) seen.insert(std::minmax(i, k));
    const std::set<std::pair<std::size_t, std::size_t>> ring{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
    const std::set<std::pair<std::size_t, std::size_t>> full{{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 2}, {1, 3}};
    if (seen.size() != net.bonds.size() || (seen != ring && seen != full)) return std::nullopt;
    return std::pair{t.value_or(0.0), tp.value_or(0.0)};
}

}  // namespace detail

/// Four-site levels referenced to the mean of the middle pair. An unbiased
/// uniform ring is circulant and uses its closed-form levels 2t + t',
/// -t' (twice), -2t + t'; everything else goes through the dense solve.
inline std::array<double, 4> fls_levels(const SiteNetwork& net) {
    if (net.size() != 4) throw Error(ErrorCode::InvalidModel, "four-level system needs exactly 4 sites");
    if (const auto r = detail::uniform_ring(net)) {
        const auto [t, tp] = *r;
        std::array<double, 4> e{2.0 * t + tp, -tp, -tp, -2.0 * t + tp};
        std::sort(e.begin(), e.end());
        const double ref = 0.5 * (e[1] + e[2]);
        for (double& v : e) v -= ref;
        return e;
    }
    const auto e = network_levels(net);
    const double ref = 0.5 * (e[1] + e[2]);
    return {e[0] - ref, e[1] - ref, e[2] - ref, e[3] - ref};
}

/// Strain magnitude along `direction` at which the site asymmetry equals J.
inline double quench_strain(double j, const ElasticDipole& delta_p, const Eigen::Matrix3d& direction) {
    if (!(j >= 0.0)) throw Error(ErrorCode::NonPositiveInput, "tunnel splitting must be non-negative");
    const double n = direction.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::OrthogonalStrainDirection, "zero strain direction");
    const double coupling = std::abs(contract(delta_p.tensor(), direction / n)) * units::mev_per_ev;
    if (!(coupling > 0.0)) throw Error(ErrorCode::OrthogonalStrainDirection, "dipole difference is orthogonal to the strain direction");
    return j / coupling;
}

/// Two-level-system density 2 rho / (pi eps0), eV^-1 nm^-3 for rho in nm^-3
/// and eps0 in meV.
inline double tls_density(double rho, double eps0_mev) {
    if (!(eps0_mev > 0.0)) throw Error(ErrorCode::NonPositiveEpsilon, "eps0 must be positive");
    if (rho < 0.0) throw Error(ErrorCode::NonPositiveInput, "density must be non-negative");
    return 2.0 * rho / (std::numbers::pi * eps0_mev / units::mev_per_ev);
}

}  // namespace tunnelgrid
