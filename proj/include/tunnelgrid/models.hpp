#pragma once

// Analytic surrogate landscapes used as benchmarks and test fixtures.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/frame.hpp"
#include "tunnelgrid/grid.hpp"
#include "tunnelgrid/potential.hpp"
#include "tunnelgrid/units.hpp"

namespace tunnelgrid {

/// Grid counts of the reference production subgrid (q_x, q_y, q_z, Q).
inline constexpr std::array<std::size_t, 4> reference_subgrid_counts{7, 13, 7, 11};

/// Frame with one unit axis per label; used when a landscape is given
/// directly in mass-weighted coordinates.
inline CoordinateFrame axis_aligned_frame(std::vector<std::string> labels, double qy12, double q_lr) {
    CoordinateFrame f;
    const std::size_t n = labels.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> e(n, 0.0);
        e[i] = 1.0;
        f.axes.emplace_back(std::move(e));
    }
    f.labels = std::move(labels);
    f.qy12 = qy12;
    f.q_lr = q_lr;
    return f;
}

/// Separable harmonic well, V = sum_d (hbar w_d)^2 x_d^2 / (2 hbar^2).
class HarmonicModel {
public:
    HarmonicModel(std::vector<std::string> labels, std::vector<double> quanta_mev, double hbar2 = units::hbar2)
        : labels_(std::move(labels)), quanta_(std::move(quanta_mev)), hbar2_(hbar2) {
        if (labels_.size() != quanta_.size() || labels_.empty()) throw Error(ErrorCode::InvalidModel, "one quantum per axis");
        for (double w : quanta_)
            if (!(w > 0.0)) throw Error(ErrorCode::InvalidModel, "harmonic quanta must be positive");
    }

    double stiffness(std::size_t d) const { return quanta_[d] * quanta_[d] / hbar2_; }
    /// Classical turning length of the ground state, sqrt(hbar^2 / hbar w).
    double turning_length(std::size_t d) const { return std::sqrt(hbar2_ / quanta_[d]); }
    const std::vector<double>& quanta() const noexcept { return quanta_; }

    PotentialField field(double extent_in_turning_lengths = 6.0) const {
        std::vector<Interval> dom;
        std::vector<double> k;
        for (std::size_t d = 0; d < quanta_.size(); ++d) {
            const double l = extent_in_turning_lengths * turning_length(d);
            dom.push_back({-l, l});
            k.push_back(stiffness(d));
        }
        return PotentialField(labels_, dom, [k](std::span<const double> x) {
            double v = 0.0;
            for (std::size_t d = 0; d < k.size(); ++d) v += 0.5 * k[d] * x[d] * x[d];
            return v;
        });
    }

    GridSpec grid(std::size_t count, double extent_in_turning_lengths = 6.0) const {
        std::vector<AxisSpec> axes;
        for (std::size_t d = 0; d < quanta_.size(); ++d) {
            const double l = extent_in_turning_lengths * turning_length(d);
            axes.push_back({labels_[d], -l, l, count});
        }
        return GridSpec(std::move(axes));
    }

private:
    std::vector<std::string> labels_;
    std::vector<double> quanta_;
    double hbar2_;
};

/// Symmetric 1-D quartic double well V_b [(q/a)^2 - 1]^2, by default on
/// [-2.5a, 2.5a]: at 2a the ground doublet still feels the Dirichlet wall,
/// which spoils the h^2 convergence of J below h ~ a/100.
class QuarticDoubleWell {
public:
    QuarticDoubleWell(double v_b, double a, std::string label = "q_y") : v_b_(v_b), a_(a), label_(std::move(label)) {
        if (!(v_b > 0.0) || !(a > 0.0)) throw Error(ErrorCode::InvalidModel, "quartic well needs V_b > 0 and a > 0");
    }

    double operator()(double q) const {
        const double w = (q / a_) * (q / a_) - 1.0;
        return v_b_ * w * w;
    }
    double barrier() const noexcept { return v_b_; }
    double half_separation() const noexcept { return a_; }

    PotentialField field(double half_width = 0.0) const {
        const double l = half_width > 0.0 ? half_width : 2.5 * a_;
        auto self = *this;
        return PotentialField({label_}, {{-l, l}}, [self](std::span<const double> x) { return self(x[0]); });
    }
    GridSpec grid(std::size_t count, double half_width = 0.0) const {
        const double l = half_width > 0.0 ? half_width : 2.5 * a_;
        return GridSpec({{label_, -l, l, count}});
    }

private:
    double v_b_, a_;
    std::string label_;
};

/// Canonical coupled double well over (q_x, q_y, q_z, Q):
///   V = V_b w + k_Q u^2/2 + g q_y u + k_x q_x^2 (1 + b_x w)/2 + k_z q_z^2 (1 + b_z w)/2 - V_min
/// with w = [(q_y/a)^2 - 1]^2 and u = Q - Q0. The transverse stiffness grows
/// toward the barrier top (w = 1 at q_y = 0, w = 0 in the wells).
/// Q0 is placed at Q_lr / 2 so the left well sits at Q = 0.
class CoupledDoubleWell {
public:
    struct Params {
        double v_b = 153.0;   // meV
        double a = 0.552;     // amu^1/2 A
        double k_q = 60.0;    // meV / (amu A^2)
        double g = -70.0;     // meV / (amu A^2)
        double k_x = 5383.0;
        double k_z = 5748.0;
        double beta_x = 0.0;
        double beta_z = 0.0;
    };

    explicit CoupledDoubleWell(Params p) : p_(p) {
        if (!(p_.v_b > 0.0) || !(p_.a > 0.0) || !(p_.k_q > 0.0) || !(p_.k_x > 0.0) || !(p_.k_z > 0.0)) {
            throw Error(ErrorCode::InvalidModel, "V_b, a and all stiffnesses must be positive");
        }
        if (p_.beta_x < 0.0 || p_.beta_z < 0.0) throw Error(ErrorCode::InvalidModel, "quartic cross terms must be >= 0");
        gamma_ = p_.g * p_.g * p_.a * p_.a / (4.0 * p_.v_b * p_.k_q);
        q_star_ = p_.a * std::sqrt(1.0 + gamma_);
        u_star_ = std::abs(p_.g) * q_star_ / p_.k_q;
        q0_ = u_star_;
        offset_ = -p_.v_b * gamma_ * (2.0 + gamma_);
        verify();
    }

    const Params& params() const noexcept { return p_; }
    double q_star() const noexcept { return q_star_; }
    double qy12() const noexcept { return 2.0 * q_star_; }
    double q_lr() const noexcept { return 2.0 * u_star_; }
    double q0() const noexcept { return q0_; }

    double operator()(double qx, double qy, double qz, double q) const {
        const double r = qy / p_.a;
        const double w = (r * r - 1.0) * (r * r - 1.0);
        const double u = q - q0_;
        return p_.v_b * w + 0.5 * p_.k_q * u * u + p_.g * qy * u + 0.5 * p_.k_x * qx * qx * (1.0 + p_.beta_x * w) +
               0.5 * p_.k_z * qz * qz * (1.0 + p_.beta_z * w) - offset_;
    }

    /// Well minimum for side -1 (left, Q = 0) or +1 (right, Q = Q_lr).
    std::array<double, 4> well(int side) const {
        const double qy = side < 0 ? -q_star_ : q_star_;
        const double u = -p_.g * qy / p_.k_q;
        return {0.0, qy, 0.0, q0_ + u};
    }

    /// Reference subgrid box: q_x, q_z in [-q_y12/2, q_y12/2], q_y spanning half a
    /// site separation beyond each well, Q in [-2 Q_lr, 3 Q_lr].
    std::vector<Interval> default_domain() const {
        const double h = 0.5 * qy12();
        double q_lo = -2.0 * q_lr(), q_hi = 3.0 * q_lr();
        if (q_lr() == 0.0) {
            const double s = std::pow(units::hbar2 / p_.k_q, 0.25);
            q_lo = -5.0 * s;
            q_hi = 5.0 * s;
        }
        return {{-h, h}, {-q_star_ - h, q_star_ + h}, {-h, h}, {q_lo, q_hi}};
    }

    GridSpec grid(std::array<std::size_t, 4> counts = reference_subgrid_counts) const {
        const auto dom = default_domain();
        static const std::array<const char*, 4> labels{"q_x", "q_y", "q_z", "Q"};
        std::vector<AxisSpec> axes;
        for (std::size_t d = 0; d < 4; ++d) axes.push_back({labels[d], dom[d].min, dom[d].max, counts[d]});
        return GridSpec(std::move(axes));
    }

    PotentialField field() const {
        auto self = *this;
        return PotentialField({"q_x", "q_y", "q_z", "Q"}, default_domain(),
                              [self](std::span<const double> x) { return self(x[0], x[1], x[2], x[3]); });
    }

    CoordinateFrame frame() const { return axis_aligned_frame({"q_x", "q_y", "q_z", "Q"}, qy12(), q_lr()); }

    /// O-H-like surrogate: coincidence energy E_c' = 13.5 meV, barrier V = 153 meV.
    static Params oh_like() {
        Params p;
        p.v_b = 153.0;
        p.a = 0.552;
        p.k_x = 150.0 * 150.0 / units::hbar2;
        p.k_z = 155.0 * 155.0 / units::hbar2;
        p.beta_x = 0.25;
        p.beta_z = 0.25;
        // E_c' = g^2 q*^2 / (2 k_Q) = 2 V_b gamma (1 + gamma)
        const double target_ec = 13.5;
        const double gamma = 0.5 * (-1.0 + std::sqrt(1.0 + 2.0 * target_ec / p.v_b));
        p.k_q = 48.0;
        p.g = -std::sqrt(4.0 * p.v_b * p.k_q * gamma) / p.a;
        return p;
    }

private:
    void verify() const {
        for (int side : {-1, 1}) {
            const auto x = well(side);
            Eigen::Matrix4d h;
            const double eps = 1e-4;
            auto v = [&](std::array<double, 4> y) { return (*this)(y[0], y[1], y[2], y[3]); };
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) {
                    auto pp = x, pm = x, mp = x, mm = x;
                    pp[i] += eps; pp[j] += eps;
                    pm[i] += eps; pm[j] -= eps;
                    mp[i] -= eps; mp[j] += eps;
                    mm[i] -= eps; mm[j] -= eps;
                    h(i, j) = (v(pp) - v(pm) - v(mp) + v(mm)) / (4.0 * eps * eps);
                }
            }
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(h);
            if (es.eigenvalues().minCoeff() <= 0.0) throw Error(ErrorCode::InvalidModel, "well is not a strict minimum");
            if (std::abs(v(x)) > 1e-8) throw Error(ErrorCode::InvalidModel, "well minimum is not at zero energy");
        }
    }

    Params p_;
    double gamma_ = 0.0, q_star_ = 0.0, u_star_ = 0.0, q0_ = 0.0, offset_ = 0.0;
};

/// Four-well landscape over (q_x, q_y, q_z) and two lattice coordinates.
/// In the (Q, P) basis
///   V = V_b [(q_x/b)^2-1]^2 + V_b [(q_y/b)^2-1]^2 + k_L (Q^2+P^2)/2
///     + g (q_y Q + q_x P) + kappa [(1-(q_y/b)^2) q_x P + (1-(q_x/b)^2) q_y Q] + k_z q_z^2/2
/// which is invariant under the 90 degree rotation (q_x,q_y,Q,P) -> (-q_y,q_x,P,-Q).
/// The lattice pair (S, T) is related by Q = (S - T)/sqrt2, P = (S + T)/sqrt2.
/// kappa bends the site-to-site path through the spectator lattice mode.
class FourWellModel {
public:
    struct Params {
        double v_b = 300.0;
        double b = 0.6;
        double k_l = 60.0;
        double g = 60.0;
        double kappa = 120.0;
        double k_z = 5000.0;
    };

    explicit FourWellModel(Params p) : p_(p) {
        if (!(p_.v_b > 0.0) || !(p_.b > 0.0) || !(p_.k_l > 0.0) || !(p_.k_z > 0.0)) {
            throw Error(ErrorCode::InvalidModel, "V_b, b, k_L and k_z must be positive");
        }
        locate_sites();
    }

    const Params& params() const noexcept { return p_; }

    /// Unreferenced energy in the (Q, P) basis.
    double raw(double qx, double qy, double qz, double q, double pp) const {
        const double rx = qx / p_.b, ry = qy / p_.b;
        const double wx = rx * rx - 1.0, wy = ry * ry - 1.0;
        return p_.v_b * (wx * wx + wy * wy) + 0.5 * p_.k_l * (q * q + pp * pp) + p_.g * (qy * q + qx * pp) +
               p_.kappa * ((1.0 - ry * ry) * qx * pp + (1.0 - rx * rx) * qy * q) + 0.5 * p_.k_z * qz * qz;
    }
    double operator()(double qx, double qy, double qz, double q, double pp) const { return raw(qx, qy, qz, q, pp) - offset_; }

    /// Site positions (q_x, q_y, q_z, Q, P), ordered around the ring.
    const std::array<std::array<double, 5>, 4>& sites() const noexcept { return sites_; }
    double site_coordinate() const noexcept { return site_h_; }
    double site_lattice() const noexcept { return site_l_; }

    std::vector<Interval> default_domain_qp() const {
        const double h = 2.0 * site_h_;
        const double l = std::abs(site_l_) + 4.0 * std::pow(units::hbar2 / p_.k_l, 0.25);
        const double z = 5.0 * std::pow(units::hbar2 / p_.k_z, 0.25);
        return {{-h, h}, {-h, h}, {-z, z}, {-l, l}, {-l, l}};
    }

    PotentialField field_qp() const {
        auto self = *this;
        return PotentialField({"q_x", "q_y", "q_z", "Q", "P"}, default_domain_qp(),
                              [self](std::span<const double> x) { return self(x[0], x[1], x[2], x[3], x[4]); });
    }

    /// Same landscape with lattice axes S, T; domain is the box enclosing the
    /// rotated (Q, P) box.
    PotentialField field_st() const {
        auto self = *this;
        auto dom = default_domain_qp();
        const double l = dom[3].max * std::sqrt(2.0);
        dom[3] = {-l, l};
        dom[4] = {-l, l};
        return PotentialField({"q_x", "q_y", "q_z", "S", "T"}, dom, [self](std::span<const double> x) {
            const double q = (x[3] - x[4]) / std::sqrt(2.0);
            const double pp = (x[3] + x[4]) / std::sqrt(2.0);
            return self(x[0], x[1], x[2], q, pp);
        });
    }

    GridSpec grid_qp(std::size_t h_count, std::size_t z_count, std::size_t lattice_count) const {
        const auto dom = default_domain_qp();
        const std::array<const char*, 5> labels{"q_x", "q_y", "q_z", "Q", "P"};
        const std::array<std::size_t, 5> counts{h_count, h_count, z_count, lattice_count, lattice_count};
        std::vector<AxisSpec> axes;
        for (std::size_t d = 0; d < 5; ++d) {
            if (counts[d] == 1) axes.push_back(AxisSpec::pinned(labels[d], 0.0));
            else axes.push_back({labels[d], dom[d].min, dom[d].max, counts[d]});
        }
        return GridSpec(std::move(axes));
    }

    /// Frame in a 5-D configuration space: q_x, q_y, q_z, then S and T.
    CoordinateFrame frame_st() const {
        return axis_aligned_frame({"q_x", "q_y", "q_z", "S", "T"}, 2.0 * site_h_, 2.0 * std::abs(site_l_) * std::sqrt(2.0));
    }

private:
    void locate_sites() {
        // The sites sit on the diagonals; the remaining coordinates follow from
        // minimizing along (q, lattice) with the other pair tied by symmetry.
        PotentialField f({"q_x", "q_y", "q_z", "Q", "P"}, std::vector<Interval>(5, {-1e3, 1e3}),
                         [self = *this](std::span<const double> x) { return self.raw(x[0], x[1], x[2], x[3], x[4]); });
        std::vector<double> x0{p_.b, p_.b, 0.0, -p_.g * p_.b / p_.k_l, -p_.g * p_.b / p_.k_l};
        std::vector<bool> free{true, true, false, true, true};
        std::vector<Interval> box(5, {-1e3, 1e3});
        const auto m = polish_minimum(f, x0, free, std::vector<double>(5, 0.1), box);
        offset_ = m.energy;
        site_h_ = 0.5 * (std::abs(m.x[0]) + std::abs(m.x[1]));
        site_l_ = 0.5 * (m.x[3] + m.x[4]);
        if (std::abs(std::abs(m.x[0]) - std::abs(m.x[1])) > 1e-6 || !(site_h_ > 0.1 * p_.b)) {
            throw Error(ErrorCode::InvalidModel, "four-well landscape lost its diagonal minima");
        }
        // ring order: (+,+) -> (+,-) -> (-,-) -> (-,+)
        const std::array<std::array<int, 2>, 4> signs{{{1, 1}, {1, -1}, {-1, -1}, {-1, 1}}};
        for (std::size_t k = 0; k < 4; ++k) {
            const double sx = signs[k][0], sy = signs[k][1];
            sites_[k] = {sx * site_h_, sy * site_h_, 0.0, sy * site_l_, sx * site_l_};
        }
    }

    Params p_;
    double offset_ = 0.0;
    double site_h_ = 0.0;
    double site_l_ = 0.0;
    std::array<std::array<double, 5>, 4> sites_{};
};

}  // namespace tunnelgrid
