#pragma once

// Run configuration: INI sections with a closed key schema. Everything is
// parsed and validated before any computation starts.
//
//   [case]       name, out
//   [potential]  source (model|samples), model (harmonic|quartic|coupled|four_well),
//                preset, labels, quanta, extent, v_b, a, k_q, g, k_x, k_z,
//                beta_x, beta_z, b, k_l, kappa, sidecar, data
//   [frame]      site1, site2, mirror_normal
//   [grid]       counts, refine, order
//   [subspace]   active, pins (label:value,...)
//   [solver]     k, tol, max_restarts, seed, verify_degeneracy
//   [mass]       axis, reference, masses, lattice_mass, particle_factor
//   [reduce]     subspaces (name:axis,axis | name:axis ...)
//   [strain]     j, p_i, p_j, direction, magnitudes
//   [fls]        source (ring|grid), j, j_prime, delta
//   [density]    rho, eps0

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/lanczos.hpp"
#include "tunnelgrid/units.hpp"

namespace tunnelgrid::cli {

struct PotentialConfig {
    std::string source = "model";
    std::string model = "coupled";
    std::string preset = "oh_like";
    std::map<std::string, double> params;  // numeric model overrides
    std::vector<std::string> labels;
    std::vector<double> quanta;
    std::optional<double> extent;
    std::filesystem::path sidecar, data;
};

struct FrameConfig {
    std::filesystem::path site1, site2;
    std::array<double, 3> mirror_normal{0.0, 0.0, 1.0};
};

struct GridConfig {
    std::vector<std::size_t> counts;  // empty: the source's default grid
    std::size_t refine = 1;
    int order = 2;
};

struct SubspaceConfig {
    std::vector<std::string> active;  // empty: all axes
    std::map<std::string, double> pins;
};

struct MassConfig {
    std::string axis = "Q";
    double reference = units::mass_nb;
    std::vector<double> masses;
    std::optional<double> lattice_mass;
    double particle_factor = 1.0;
};

struct ReduceRow {
    std::string name;
    std::vector<std::string> active;
};

struct StrainConfig {
    double j = 0.0;
    std::array<double, 6> p_i{}, p_j{}, direction{};
    std::vector<double> magnitudes;
    bool present = false;
};

struct FlsConfig {
    std::string source = "ring";
    double j = 1.0;
    double j_prime = 0.0;
    std::vector<double> delta{0.0, 0.0, 0.0, 0.0};
};

struct DensityConfig {
    double rho = 0.0;
    double eps0 = 0.0;
    bool present = false;
};

struct RunConfig {
    std::string name = "case";
    std::optional<std::filesystem::path> out;
    std::string text;  // raw bytes, hashed into every output
    std::set<std::string> sections;
    PotentialConfig potential;
    std::optional<FrameConfig> frame;
    GridConfig grid;
    SubspaceConfig subspace;
    LanczosOptions solver;
    MassConfig mass;
    std::vector<ReduceRow> reduce;
    StrainConfig strain;
    FlsConfig fls;
    DensityConfig density;

    bool has(const std::string& section) const { return sections.count(section) != 0; }
};

namespace detail {

inline std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto p = s.find(sep, start);
        out.push_back(strip(s.substr(start, p - start)));
        if (p == std::string::npos) break;
        start = p + 1;
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
        throw Error(ErrorCode::ConfigError, key + ": '" + v + "' is not a finite number");
    }
    return x;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
    Int x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw Error(ErrorCode::ConfigError, key + ": '" + v + "' is not an integer");
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::ConfigError, key + ": expected true/false");
}

inline std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& f : split(v, ',')) out.push_back(to_double(key, f));
    return out;
}

inline std::array<double, 6> to_voigt(const std::string& key, const std::string& v) {
    const auto x = to_doubles(key, v);
    if (x.size() != 6) throw Error(ErrorCode::ConfigError, key + ": expected 6 Voigt components (xx,yy,zz,yz,xz,xy)");
    return {x[0], x[1], x[2], x[3], x[4], x[5]};
}

inline std::vector<std::string> to_labels(const std::string& key, const std::string& v) {
    auto out = split(v, ',');
    for (const auto& l : out)
        if (l.empty()) throw Error(ErrorCode::ConfigError, key + ": empty axis label");
    return out;
}

inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"case", {"name", "out"}},
        {"potential", {"source", "model", "preset", "labels", "quanta", "extent", "v_b", "a", "k_q", "g", "k_x", "k_z", "beta_x",
                       "beta_z", "b", "k_l", "kappa", "sidecar", "data"}},
        {"frame", {"site1", "site2", "mirror_normal"}},
        {"grid", {"counts", "refine", "order"}},
        {"subspace", {"active", "pins"}},
        {"solver", {"k", "tol", "max_restarts", "seed", "verify_degeneracy"}},
        {"mass", {"axis", "reference", "masses", "lattice_mass", "particle_factor"}},
        {"reduce", {"subspaces"}},
        {"strain", {"j", "p_i", "p_j", "direction", "magnitudes"}},
        {"fls", {"source", "j", "j_prime", "delta"}},
        {"density", {"rho", "eps0"}},
    };
    return s;
}

}  // namespace detail

/// Parses config text; relative paths resolve against `base_dir`.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
    using detail::strip;
    boost::property_tree::ptree pt;
    {
        std::istringstream in(text);
        try {
            boost::property_tree::read_ini(in, pt);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw Error(ErrorCode::ConfigError, "line " + std::to_string(e.line()) + ": " + e.message());
        }
    }
    RunConfig c;
    c.text = text;
    const auto& schema = detail::schema();
    for (const auto& [section, body] : pt) {
        auto it = schema.find(section);
        if (it == schema.end()) throw Error(ErrorCode::ConfigError, "unknown section [" + section + "]");
        if (body.empty() && !body.data().empty()) throw Error(ErrorCode::ConfigError, "key '" + section + "' outside any section");
        for (const auto& [key, _] : body) {
            if (!it->second.count(key)) throw Error(ErrorCode::ConfigError, "unknown key " + section + "." + key);
        }
        c.sections.insert(section);
    }
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        auto v = pt.get_optional<std::string>(boost::property_tree::ptree::path_type(path, '.'));
        if (!v) return std::nullopt;
        return strip(*v);
    };
    auto path_of = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };

    if (auto v = get("case.name")) c.name = *v;
    if (auto v = get("case.out")) c.out = path_of(*v);

    // potential
    auto& p = c.potential;
    if (auto v = get("potential.source")) p.source = *v;
    if (p.source != "model" && p.source != "samples") throw Error(ErrorCode::ConfigError, "potential.source must be model or samples");
    if (auto v = get("potential.model")) p.model = *v;
    if (auto v = get("potential.preset")) p.preset = *v;
    static const std::set<std::string> models{"harmonic", "quartic", "coupled", "four_well"};
    if (p.source == "model" && !models.count(p.model)) throw Error(ErrorCode::ConfigError, "unknown potential.model '" + p.model + "'");
    if (p.model == "coupled" && p.preset != "oh_like" && p.preset != "none") {
        throw Error(ErrorCode::ConfigError, "potential.preset must be oh_like or none");
    }
    static const std::map<std::string, std::set<std::string>> model_keys{
        {"harmonic", {"labels", "quanta", "extent"}},
        {"quartic", {"v_b", "a", "extent"}},
        {"coupled", {"v_b", "a", "k_q", "g", "k_x", "k_z", "beta_x", "beta_z"}},
        {"four_well", {"v_b", "b", "k_l", "g", "kappa", "k_z"}},
    };
    if (auto sec = pt.get_child_optional("potential")) {
        for (const auto& [key, node] : *sec) {
            if (key == "source" || key == "model" || key == "preset") continue;
            if (p.source == "samples") {
                if (key != "sidecar" && key != "data") throw Error(ErrorCode::ConfigError, "potential." + key + " does not apply to samples");
                continue;
            }
            if (!model_keys.at(p.model).count(key)) {
                throw Error(ErrorCode::ConfigError, "potential." + key + " does not apply to model " + p.model);
            }
            const std::string v = strip(node.data());
            if (key == "labels") p.labels = detail::to_labels("potential.labels", v);
            else if (key == "quanta") p.quanta = detail::to_doubles("potential.quanta", v);
            else if (key == "extent") p.extent = detail::to_double("potential.extent", v);
            else p.params[key] = detail::to_double("potential." + key, v);
        }
    }
    if (p.source == "samples") {
        auto s = get("potential.sidecar");
        auto d = get("potential.data");
        if (!s || !d) throw Error(ErrorCode::ConfigError, "samples source needs potential.sidecar and potential.data");
        p.sidecar = path_of(*s);
        p.data = path_of(*d);
    }
    if (p.source == "model" && p.model == "harmonic") {
        if (p.quanta.empty()) throw Error(ErrorCode::ConfigError, "harmonic model needs potential.quanta");
        if (p.labels.empty()) {
            static const std::array<const char*, 5> names{"q_x", "q_y", "q_z", "Q", "P"};
            if (p.quanta.size() > names.size()) throw Error(ErrorCode::ConfigError, "at most 5 harmonic axes");
            for (std::size_t i = 0; i < p.quanta.size(); ++i) p.labels.push_back(names[i]);
        }
        if (p.labels.size() != p.quanta.size()) throw Error(ErrorCode::ConfigError, "potential.labels and potential.quanta differ in length");
    }

    if (c.has("frame")) {
        FrameConfig f;
        auto s1 = get("frame.site1");
        auto s2 = get("frame.site2");
        if (!s1 || !s2) throw Error(ErrorCode::ConfigError, "frame needs site1 and site2");
        f.site1 = path_of(*s1);
        f.site2 = path_of(*s2);
        if (auto v = get("frame.mirror_normal")) {
            const auto n = detail::to_doubles("frame.mirror_normal", *v);
            if (n.size() != 3) throw Error(ErrorCode::ConfigError, "frame.mirror_normal needs 3 components");
            f.mirror_normal = {n[0], n[1], n[2]};
        }
        c.frame = f;
    }

    if (auto v = get("grid.counts")) {
        for (const auto& f : detail::split(*v, ',')) c.grid.counts.push_back(detail::to_int<std::size_t>("grid.counts", f));
    }
    if (auto v = get("grid.refine")) c.grid.refine = detail::to_int<std::size_t>("grid.refine", *v);
    if (c.grid.refine < 1) throw Error(ErrorCode::ConfigError, "grid.refine must be >= 1");
    if (auto v = get("grid.order")) c.grid.order = detail::to_int<int>("grid.order", *v);
    if (c.grid.order != 2 && c.grid.order != 4) throw Error(ErrorCode::ConfigError, "grid.order must be 2 or 4");

    if (auto v = get("subspace.active")) c.subspace.active = detail::to_labels("subspace.active", *v);
    if (auto v = get("subspace.pins")) {
        for (const auto& item : detail::split(*v, ',')) {
            const auto kv = detail::split(item, ':');
            if (kv.size() != 2 || kv[0].empty()) throw Error(ErrorCode::ConfigError, "subspace.pins entries look like label:value");
            c.subspace.pins[kv[0]] = detail::to_double("subspace.pins", kv[1]);
        }
    }

    if (auto v = get("solver.k")) c.solver.k = detail::to_int<std::size_t>("solver.k", *v);
    if (auto v = get("solver.tol")) c.solver.tol = detail::to_double("solver.tol", *v);
    if (auto v = get("solver.max_restarts")) c.solver.max_restarts = detail::to_int<std::size_t>("solver.max_restarts", *v);
    if (auto v = get("solver.seed")) c.solver.seed = detail::to_int<std::uint64_t>("solver.seed", *v);
    if (auto v = get("solver.verify_degeneracy")) c.solver.verify_degeneracy = detail::to_bool("solver.verify_degeneracy", *v);
    if (c.solver.k < 1) throw Error(ErrorCode::ConfigError, "solver.k must be >= 1");
    if (!(c.solver.tol > 0.0)) throw Error(ErrorCode::ConfigError, "solver.tol must be positive");

    if (auto v = get("mass.axis")) c.mass.axis = *v;
    if (auto v = get("mass.reference")) c.mass.reference = detail::to_double("mass.reference", *v);
    if (auto v = get("mass.masses")) c.mass.masses = detail::to_doubles("mass.masses", *v);
    if (auto v = get("mass.lattice_mass")) c.mass.lattice_mass = detail::to_double("mass.lattice_mass", *v);
    if (auto v = get("mass.particle_factor")) c.mass.particle_factor = detail::to_double("mass.particle_factor", *v);
    if (!(c.mass.reference > 0.0) || !(c.mass.particle_factor > 0.0) || (c.mass.lattice_mass && !(*c.mass.lattice_mass > 0.0))) {
        throw Error(ErrorCode::ConfigError, "masses and mass factors must be positive");
    }

    if (auto v = get("reduce.subspaces")) {
        for (const auto& item : detail::split(*v, '|')) {
            if (item.empty()) continue;
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, "reduce.subspaces entries look like name:axis,axis");
            c.reduce.push_back({strip(item.substr(0, colon)), detail::to_labels("reduce.subspaces", strip(item.substr(colon + 1)))});
        }
    }

    if (c.has("strain")) {
        auto& s = c.strain;
        s.present = true;
        auto need = [&](const std::string& k) {
            auto v = get("strain." + k);
            if (!v) throw Error(ErrorCode::ConfigError, "strain." + k + " is required");
            return *v;
        };
        s.j = detail::to_double("strain.j", need("j"));
        s.p_i = detail::to_voigt("strain.p_i", need("p_i"));
        s.p_j = detail::to_voigt("strain.p_j", need("p_j"));
        s.direction = detail::to_voigt("strain.direction", need("direction"));
        if (auto v = get("strain.magnitudes")) s.magnitudes = detail::to_doubles("strain.magnitudes", *v);
    }

    if (auto v = get("fls.source")) c.fls.source = *v;
    if (c.fls.source != "ring" && c.fls.source != "grid") throw Error(ErrorCode::ConfigError, "fls.source must be ring or grid");
    if (auto v = get("fls.j")) c.fls.j = detail::to_double("fls.j", *v);
    if (auto v = get("fls.j_prime")) c.fls.j_prime = detail::to_double("fls.j_prime", *v);
    if (auto v = get("fls.delta")) c.fls.delta = detail::to_doubles("fls.delta", *v);
    if (c.fls.delta.size() != 4) throw Error(ErrorCode::ConfigError, "fls.delta needs 4 values");

    if (c.has("density")) {
        auto r = get("density.rho");
        auto e = get("density.eps0");
        if (!r || !e) throw Error(ErrorCode::ConfigError, "density needs rho and eps0");
        c.density = {detail::to_double("density.rho", *r), detail::to_double("density.eps0", *e), true};
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

}  // namespace tunnelgrid::cli
