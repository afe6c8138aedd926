#pragma once

// Mass-weighted phonon coordinates, the composite lattice coordinate, and the
// orthonormal axis frame spanning a pair (or quartet) of degenerate wells.
//
// Configuration-space layout used by every MassWeightedVector built here:
// components 0..2 belong to the tunneling particle, followed by three
// components per lattice (non-hydrogen) atom in file order.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"

namespace tunnelgrid {

class MassWeightedVector {
public:
    MassWeightedVector() = default;
    explicit MassWeightedVector(std::vector<double> components) : c_(std::move(components)) {
        for (double v : c_) {
            if (!std::isfinite(v)) throw Error(ErrorCode::OutOfDomain, "non-finite mass-weighted component");
        }
    }

    std::size_t size() const noexcept { return c_.size(); }
    double operator[](std::size_t i) const { return c_[i]; }
    std::span<const double> components() const noexcept { return c_; }

    double dot(const MassWeightedVector& o) const {
        if (o.size() != size()) throw Error(ErrorCode::LengthMismatch, "dot of vectors with different dimension");
        double s = 0.0;
        for (std::size_t i = 0; i < c_.size(); ++i) s += c_[i] * o.c_[i];
        return s;
    }
    double norm() const { return std::sqrt(dot(*this)); }

private:
    std::vector<double> c_;
};

struct Atom {
    std::string element;
    double mass = 0.0;          // amu
    Eigen::Vector3d position;   // Angstrom
};

using Structure = std::vector<Atom>;

inline bool is_hydrogen(const Atom& a) {
    return a.element == "H" || a.element == "D" || a.element == "T";
}

/// Reads an atom list: `symbol mass x y z` per row, '#' starts a comment.
inline Structure read_structure(std::istream& in) {
    Structure atoms;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); })) continue;
        std::istringstream row(line);
        Atom a;
        double x, y, z;
        if (!(row >> a.element >> a.mass >> x >> y >> z)) {
            throw Error(ErrorCode::MalformedRow, "structure line " + std::to_string(lineno) + ": expected 'symbol mass x y z'");
        }
        std::string extra;
        if (row >> extra) throw Error(ErrorCode::MalformedRow, "structure line " + std::to_string(lineno) + ": trailing fields");
        if (!(a.mass > 0.0)) throw Error(ErrorCode::NonPositiveMass, "structure line " + std::to_string(lineno));
        a.position = {x, y, z};
        atoms.push_back(std::move(a));
    }
    return atoms;
}

inline Structure read_structure_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open structure file " + path);
    return read_structure(in);
}

/// q_i = sqrt(m_i) r_i per Cartesian component.
inline MassWeightedVector mass_weight(std::span<const Eigen::Vector3d> displacements, std::span<const double> masses) {
    if (displacements.size() != masses.size()) {
        throw Error(ErrorCode::LengthMismatch, "displacement and mass lists differ in length");
    }
    std::vector<double> q;
    q.reserve(3 * masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (!(masses[i] > 0.0)) throw Error(ErrorCode::NonPositiveMass, "atom " + std::to_string(i));
        const double s = std::sqrt(masses[i]);
        for (int c = 0; c < 3; ++c) q.push_back(s * displacements[i][c]);
    }
    return MassWeightedVector(std::move(q));
}

struct AtomDisplacement {
    std::size_t atom_index;
    double mass;
    Eigen::Vector3d displacement;
};

/// Collective lattice displacement between two relaxed configurations,
/// Q = M^(1/2) R over the non-hydrogen atoms.
struct CompositeMode {
    std::vector<AtomDisplacement> displacement_per_atom;
    double q_norm = 0.0;

    /// Lattice-only mass-weighted vector (3 components per lattice atom).
    MassWeightedVector lattice_vector() const {
        std::vector<Eigen::Vector3d> d;
        std::vector<double> m;
        for (const auto& a : displacement_per_atom) {
            d.push_back(a.displacement);
            m.push_back(a.mass);
        }
        return mass_weight(d, m);
    }
};

inline CompositeMode build_composite(std::span<const Atom> site1, std::span<const Atom> site2) {
    if (site1.size() != site2.size()) {
        throw Error(ErrorCode::AtomCountMismatch, std::to_string(site1.size()) + " vs " + std::to_string(site2.size()) + " atoms");
    }
    CompositeMode mode;
    double sum = 0.0;
    for (std::size_t i = 0; i < site1.size(); ++i) {
        if (site1[i].element != site2[i].element) {
            throw Error(ErrorCode::AtomCountMismatch, "atom " + std::to_string(i) + " changes element between configurations");
        }
        if (is_hydrogen(site1[i])) continue;
        if (!(site1[i].mass > 0.0)) throw Error(ErrorCode::NonPositiveMass, "atom " + std::to_string(i));
        const Eigen::Vector3d d = site2[i].position - site1[i].position;
        mode.displacement_per_atom.push_back({i, site1[i].mass, d});
        sum += site1[i].mass * d.squaredNorm();
    }
    mode.q_norm = std::sqrt(sum);
    return mode;
}

/// Mass-weighted distance between the tunneling-particle positions of two configurations.
inline double hydrogen_separation(std::span<const Atom> site1, std::span<const Atom> site2) {
    if (site1.size() != site2.size()) throw Error(ErrorCode::AtomCountMismatch, "site structures differ in size");
    for (std::size_t i = 0; i < site1.size(); ++i) {
        if (is_hydrogen(site1[i])) {
            return std::sqrt(site1[i].mass) * (site2[i].position - site1[i].position).norm();
        }
    }
    throw Error(ErrorCode::AtomCountMismatch, "no hydrogen atom in structure");
}

struct CoordinateFrame {
    std::vector<std::string> labels;          // q_x, q_y, q_z, then Q (or S, T)
    std::vector<MassWeightedVector> axes;     // unit vectors in configuration space
    double qy12 = 0.0;                        // site separation along q_y
    double q_lr = 0.0;                        // left/right lattice separation along Q

    std::size_t dimension() const noexcept { return axes.size(); }

    Eigen::MatrixXd gram() const {
        const auto n = static_cast<Eigen::Index>(axes.size());
        Eigen::MatrixXd g(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) g(i, j) = axes[i].dot(axes[j]);
        return g;
    }
};

namespace detail {

inline std::vector<double> embed_lattice(const MassWeightedVector& lattice, std::size_t total) {
    std::vector<double> v(total, 0.0);
    for (std::size_t i = 0; i < lattice.size(); ++i) v[3 + i] = lattice[i];
    return v;
}

inline std::vector<double> embed_particle(const Eigen::Vector3d& u, std::size_t total) {
    std::vector<double> v(total, 0.0);
    for (int c = 0; c < 3; ++c) v[c] = u[c];
    return v;
}

// Classical Gram-Schmidt applied twice.
inline void orthogonalize(std::vector<double>& v, const std::vector<MassWeightedVector>& basis) {
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) {
            double p = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) p += v[i] * b[i];
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * b[i];
        }
    }
}

}  // namespace detail

/// Builds (q_x, q_y, q_z, lattice...) with q_y along the site-to-site path,
/// q_z along the mirror normal and q_x = q_y x q_z. Each composite is
/// orthogonalized against all preceding axes.
inline CoordinateFrame build_frame(const Eigen::Vector3d& path_direction, const Eigen::Vector3d& mirror_normal,
                                   std::span<const CompositeMode> composites, double qy12,
                                   std::vector<std::string> lattice_labels = {"Q"}) {
    if (!(qy12 > 0.0)) throw Error(ErrorCode::DegenerateAxes, "q_y12 must be positive");
    if (path_direction.norm() == 0.0 || mirror_normal.norm() == 0.0) {
        throw Error(ErrorCode::DegenerateAxes, "zero path direction or mirror normal");
    }
    if (lattice_labels.size() != composites.size()) {
        throw Error(ErrorCode::LengthMismatch, "one label per composite coordinate required");
    }
    const Eigen::Vector3d y = path_direction.normalized();
    Eigen::Vector3d z = mirror_normal - mirror_normal.dot(y) * y;
    if (z.norm() < 1e-8 * mirror_normal.norm()) {
        throw Error(ErrorCode::DegenerateAxes, "mirror normal is parallel to the path direction");
    }
    z.normalize();
    const Eigen::Vector3d x = y.cross(z);

    std::size_t lattice_dim = 0;
    for (const auto& c : composites) lattice_dim = std::max(lattice_dim, 3 * c.displacement_per_atom.size());
    const std::size_t total = 3 + lattice_dim;

    CoordinateFrame f;
    f.qy12 = qy12;
    f.labels = {"q_x", "q_y", "q_z"};
    f.axes.emplace_back(detail::embed_particle(x, total));
    f.axes.emplace_back(detail::embed_particle(y, total));
    f.axes.emplace_back(detail::embed_particle(z, total));

    for (std::size_t k = 0; k < composites.size(); ++k) {
        const auto& c = composites[k];
        if (c.q_norm == 0.0) throw Error(ErrorCode::ZeroComposite, "composite '" + lattice_labels[k] + "' has zero norm");
        auto v = detail::embed_lattice(c.lattice_vector(), total);
        detail::orthogonalize(v, f.axes);
        double n = 0.0;
        for (double e : v) n += e * e;
        n = std::sqrt(n);
        if (n < 1e-12 * c.q_norm) {
            throw Error(ErrorCode::ZeroComposite, "composite '" + lattice_labels[k] + "' lies in the span of earlier axes");
        }
        for (double& e : v) e /= n;
        f.axes.emplace_back(std::move(v));
        f.labels.push_back(lattice_labels[k]);
    }
    f.q_lr = composites.empty() ? 0.0 : composites.front().q_norm;
    return f;
}

/// Frame from two relaxed site structures: path = H displacement, composite
/// from the lattice atoms, q_y12 from the mass-weighted H separation.
inline CoordinateFrame frame_from_structures(const Structure& site1, const Structure& site2,
                                             const Eigen::Vector3d& mirror_normal) {
    const double qy12 = hydrogen_separation(site1, site2);
    Eigen::Vector3d path = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < site1.size(); ++i) {
        if (is_hydrogen(site1[i])) {
            path = site2[i].position - site1[i].position;
            break;
        }
    }
    const CompositeMode q = build_composite(site1, site2);
    if (q.q_norm == 0.0) {
        return build_frame(path, mirror_normal, std::span<const CompositeMode>{}, qy12, {});
    }
    return build_frame(path, mirror_normal, std::span<const CompositeMode>(&q, 1), qy12);
}

}  // namespace tunnelgrid
