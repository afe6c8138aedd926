#pragma once

// Subcommand implementations. Each command validates, computes, then writes
// its files atomically next to a manifest; nothing is written on failure.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tunnelgrid/cli/config.hpp"
#include "tunnelgrid/cli/output.hpp"
#include "tunnelgrid/fls.hpp"
#include "tunnelgrid/frame.hpp"
#include "tunnelgrid/landscape.hpp"
#include "tunnelgrid/lanczos.hpp"
#include "tunnelgrid/models.hpp"
#include "tunnelgrid/operator.hpp"
#include "tunnelgrid/renorm.hpp"
#include "tunnelgrid/samples.hpp"
#include "tunnelgrid/spectra.hpp"
#include "tunnelgrid/strain.hpp"

namespace tunnelgrid::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "1.0.0";

struct RunOptions {
    std::filesystem::path out;
    bool force = false;
    std::size_t threads = 1;
    std::optional<std::uint64_t> seed;
};

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_unresolved = 2 };

// ---------------------------------------------------------------------------
// Problem assembly

struct Problem {
    PotentialField field;
    GridSpec grid;
    CoordinateFrame frame;
    std::string source;
    std::optional<Coincidence> coincidence;
    std::optional<double> barrier;
    std::optional<SampleMetadata> metadata;
};

namespace detail {

inline GridSpec with_counts(const GridSpec& base, const std::vector<std::size_t>& counts) {
    if (counts.empty()) return base;
    if (counts.size() != base.dimension()) {
        throw Error(ErrorCode::ConfigError, "grid.counts has " + std::to_string(counts.size()) + " entries for " +
                                                std::to_string(base.dimension()) + " axes");
    }
    auto axes = base.axes();
    for (std::size_t d = 0; d < axes.size(); ++d) {
        if (counts[d] == 0) throw Error(ErrorCode::ConfigError, "grid.counts entries must be positive");
        if (counts[d] == 1) axes[d] = AxisSpec::pinned(axes[d].label, 0.5 * (axes[d].min + axes[d].max));
        else axes[d].count = counts[d];
    }
    return GridSpec(std::move(axes));
}

inline double param(const PotentialConfig& p, const std::string& key, double fallback) {
    auto it = p.params.find(key);
    return it == p.params.end() ? fallback : it->second;
}

inline std::vector<std::size_t> default_counts(std::size_t dims) {
    return std::vector<std::size_t>(dims, dims == 1 ? 201 : dims == 2 ? 41 : 21);
}

}  // namespace detail

inline Problem build_problem(const RunConfig& cfg) {
    Problem pr;
    const auto& p = cfg.potential;
    GridSpec grid;
    if (p.source == "samples") {
        auto sampled = ingest(p.sidecar, p.data);
        pr.field = interpolate(sampled);
        grid = sampled.spec;
        pr.metadata = sampled.metadata;
        pr.source = "samples";
        pr.frame = axis_aligned_frame(pr.field.labels(), 0.0, 0.0);
    } else if (p.model == "harmonic") {
        HarmonicModel m(p.labels, p.quanta);
        const double extent = p.extent.value_or(6.0);
        pr.field = m.field(extent);
        grid = detail::with_counts(m.grid(2, extent), cfg.grid.counts.empty() ? detail::default_counts(p.labels.size()) : cfg.grid.counts);
        pr.frame = axis_aligned_frame(p.labels, 0.0, 0.0);
        pr.source = "model:harmonic";
    } else if (p.model == "quartic") {
        QuarticDoubleWell m(detail::param(p, "v_b", 150.0), detail::param(p, "a", 0.55));
        const double half = p.extent.value_or(2.5) * m.half_separation();
        pr.field = m.field(half);
        grid = detail::with_counts(m.grid(401, half), cfg.grid.counts);
        pr.frame = axis_aligned_frame({"q_y"}, 2.0 * m.half_separation(), 0.0);
        pr.source = "model:quartic";
    } else if (p.model == "coupled") {
        auto params = p.preset == "oh_like" ? CoupledDoubleWell::oh_like() : CoupledDoubleWell::Params{};
        params.v_b = detail::param(p, "v_b", params.v_b);
        params.a = detail::param(p, "a", params.a);
        params.k_q = detail::param(p, "k_q", params.k_q);
        params.g = detail::param(p, "g", params.g);
        params.k_x = detail::param(p, "k_x", params.k_x);
        params.k_z = detail::param(p, "k_z", params.k_z);
        params.beta_x = detail::param(p, "beta_x", params.beta_x);
        params.beta_z = detail::param(p, "beta_z", params.beta_z);
        CoupledDoubleWell m(params);
        pr.field = m.field();
        grid = detail::with_counts(m.grid(), cfg.grid.counts);
        pr.frame = m.frame();
        pr.source = "model:coupled";
    } else {
        FourWellModel::Params params;
        params.v_b = detail::param(p, "v_b", params.v_b);
        params.b = detail::param(p, "b", params.b);
        params.k_l = detail::param(p, "k_l", params.k_l);
        params.g = detail::param(p, "g", params.g);
        params.kappa = detail::param(p, "kappa", params.kappa);
        params.k_z = detail::param(p, "k_z", params.k_z);
        FourWellModel m(params);
        pr.field = m.field_qp();
        grid = detail::with_counts(m.grid_qp(15, 3, 13), cfg.grid.counts);
        pr.frame = axis_aligned_frame(pr.field.labels(), 2.0 * m.site_coordinate(), 2.0 * std::abs(m.site_lattice()));
        pr.source = "model:four_well";
    }
    if (cfg.frame) {
        const auto s1 = read_structure_file(cfg.frame->site1.string());
        const auto s2 = read_structure_file(cfg.frame->site2.string());
        const auto& n = cfg.frame->mirror_normal;
        auto f = frame_from_structures(s1, s2, Eigen::Vector3d(n[0], n[1], n[2]));
        if (p.source == "samples") pr.frame = std::move(f);
        else {
            pr.frame.qy12 = f.qy12;
            pr.frame.q_lr = f.q_lr;
        }
    }
    if (p.source == "samples" && !cfg.grid.counts.empty()) grid = detail::with_counts(grid, cfg.grid.counts);
    pr.grid = cfg.grid.refine > 1 ? grid.refined(cfg.grid.refine) : grid;

    if (pr.field.has_axis("Q")) {
        try {
            const auto wells = locate_wells(pr.field);
            pr.coincidence = coincidence(pr.field, pr.frame, wells);
            pr.barrier = barrier_height(pr.field, pr.frame, wells);
        } catch (const Error&) {
            // landscape scalars are reported only when defined
        }
    }
    return pr;
}

/// Pins for the frozen axes of a subspace: explicit pins win, Q defaults to
/// the coincidence point, everything else to 0.
inline SubspaceSelection selection_for(const Problem& pr, std::vector<std::string> active, const std::map<std::string, double>& pins) {
    SubspaceSelection sel;
    sel.active = active.empty() ? pr.field.labels() : std::move(active);
    for (const auto& l : pr.field.labels()) {
        if (std::find(sel.active.begin(), sel.active.end(), l) != sel.active.end()) continue;
        if (auto it = pins.find(l); it != pins.end()) sel.pins[l] = it->second;
        else if (l == "Q" && pr.coincidence) sel.pins[l] = pr.coincidence->q_c;
        else sel.pins[l] = 0.0;
    }
    for (const auto& [l, v] : pins) {
        if (!pr.field.has_axis(l)) throw Error(ErrorCode::DomainMismatch, "pin on unknown axis '" + l + "'");
        if (std::find(sel.active.begin(), sel.active.end(), l) != sel.active.end()) {
            throw Error(ErrorCode::ConfigError, "axis '" + l + "' is both active and pinned");
        }
    }
    return sel;
}

inline GridOperator build_operator(const Problem& pr, const GridSpec& grid, const RunConfig& cfg) {
    auto op = assemble(pr.field, grid, cfg.grid.order);
    if (cfg.mass.lattice_mass) op = mass_rescale(op, MassRescale(*cfg.mass.lattice_mass, cfg.mass.reference), cfg.mass.axis);
    if (cfg.mass.particle_factor != 1.0) {
        for (std::size_t d = 0; d < grid.dimension(); ++d) {
            const auto& l = grid.axis(d).label;
            if (!grid.axis(d).frozen() && (l == "q_x" || l == "q_y" || l == "q_z")) {
                op = op.with_mass_factor(d, op.mass_factor(d) * cfg.mass.particle_factor);
            }
        }
    }
    return op;
}

// ---------------------------------------------------------------------------
// Serialization helpers

namespace detail {

inline json number_or_null(std::optional<double> v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); }

inline std::string fmt(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

inline json grid_json(const GridSpec& g) {
    json axes = json::array();
    for (const auto& a : g.axes()) {
        axes.push_back({{"label", a.label}, {"min", a.min}, {"max", a.max}, {"count", a.count}, {"frozen", a.frozen()}});
    }
    return axes;
}

inline json header(const RunConfig& cfg, const std::string& command) {
    return {{"tool", "tunnelgrid"}, {"version", tool_version}, {"command", command}, {"case", cfg.name}, {"config_hash", sha256_hex(cfg.text)}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Runs fn(i) for i in [0, n) on up to `workers` threads; results are
/// stored by index so the order never depends on scheduling.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline void finish(const RunConfig& cfg, const RunOptions& opt, const std::string& command, OutputSet& files, json extra) {
    json manifest = header(cfg, command);
    for (auto& [k, v] : extra.items()) manifest[k] = v;
    json list = json::array();
    for (const auto& [name, content] : files.files()) list.push_back({{"file", name}, {"sha256", sha256_hex(content)}});
    manifest["outputs"] = list;
    files.add("manifest.json", dump(manifest));
    files.commit(opt.out);
}

inline LanczosOptions solver_options(const RunConfig& cfg, const RunOptions& opt) {
    auto s = cfg.solver;
    if (opt.seed) s.seed = *opt.seed;
    return s;
}

/// Largest probability a state keeps on the outermost node shell.
inline double boundary_probability(const std::vector<double>& psi, const GridSpec& grid) {
    double p = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t n = 0; n < psi.size(); ++n) {
        grid.unravel(n, idx);
        for (std::size_t d = 0; d < grid.dimension(); ++d) {
            if (grid.axis(d).frozen()) continue;
            if (idx[d] == 0 || idx[d] + 1 == grid.axis(d).count) {
                p += psi[n] * psi[n];
                break;
            }
        }
    }
    return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// solve

inline int cmd_solve(const RunConfig& cfg, const RunOptions& opt, std::ostream& log = std::cout) {
    OutputSet::guard(opt.out, {"spectrum.json", "spectrum.csv", "manifest.json"}, opt.force);
    const auto pr = build_problem(cfg);
    const auto sel = selection_for(pr, cfg.subspace.active, cfg.subspace.pins);
    const auto grid = subspace_grid(pr.grid, sel);
    const auto op = build_operator(pr, grid, cfg);
    const auto sopt = detail::solver_options(cfg, opt);
    auto eigen = lowest(op, sopt);
    const bool converged = eigen.converged;
    const auto spec = analyze(std::move(eigen), pr.field, grid);
    const auto& e = spec.eigen;
    const std::string hash = sha256_hex(cfg.text);

    double worst_boundary = 0.0;
    for (const auto& v : e.eigenvectors) worst_boundary = std::max(worst_boundary, detail::boundary_probability(v, grid));
    if (worst_boundary > 1e-6) log << "warning: boundary-shell probability " << worst_boundary << " exceeds 1e-6\n";

    const bool double_well = spec.occupations.empty() ? false : spec.occupations[0].size() >= 2;
    json j = detail::header(cfg, "solve");
    j["source"] = pr.source;
    j["grid"] = detail::grid_json(grid);
    j["stencil_order"] = cfg.grid.order;
    j["solver"] = {{"k", sopt.k}, {"tol", sopt.tol}, {"seed", sopt.seed}, {"iterations", e.iterations}, {"matvecs", e.matvecs},
                   {"converged", converged}};
    j["landscape"] = {{"v_min_meV", spec.v_min},
                      {"Q_c", detail::number_or_null(pr.coincidence ? std::optional(pr.coincidence->q_c) : std::nullopt)},
                      {"E_c_prime_meV", detail::number_or_null(pr.coincidence ? std::optional(pr.coincidence->e_c_prime) : std::nullopt)},
                      {"barrier_meV", detail::number_or_null(pr.barrier)},
                      {"q_y12", pr.frame.qy12},
                      {"Q_lr", pr.frame.q_lr}};
    json states = json::array();
    for (std::size_t i = 0; i < e.size(); ++i) {
        states.push_back({{"index", i},
                          {"energy_meV", e.eigenvalues[i]},
                          {"residual", e.residuals[i]},
                          {"label", spec.labels[i].text(grid)},
                          {"parity", parity_name(spec.labels[i].parity)},
                          {"overlap", spec.labels[i].overlap},
                          {"occupations", spec.occupations[i]}});
    }
    j["states"] = states;
    j["zpe_meV"] = spec.zpe;
    j["splitting"] = {{"J_meV", detail::number_or_null(spec.splitting)}, {"status", double_well ? spec.splitting_status : "single-well"}};
    json tr = json::array();
    for (const auto& t : spec.transitions) {
        std::vector<int> q;
        for (std::size_t d = 0; d < t.quanta.size(); ++d)
            if (!grid.axis(d).frozen()) q.push_back(t.quanta[d]);
        tr.push_back({{"quanta", q}, {"hbar_omega_meV", t.hbar_omega}, {"J_meV", t.splitting}, {"members", t.members}});
    }
    j["transitions"] = tr;
    j["notes"] = json::array({"transition J values are gaps within each excited label group",
                              "occupations use trapezoid weights on the solver grid"});
    j["boundary_probability_max"] = worst_boundary;

    std::ostringstream csv;
    csv << "# config_hash=" << hash << "\n";
    csv << "index,energy_meV,label,parity,occ_left,occ_right\n";
    for (std::size_t i = 0; i < e.size(); ++i) {
        const auto& occ = spec.occupations[i];
        csv << i << "," << detail::fmt(e.eigenvalues[i]) << "," << '"' << spec.labels[i].text(grid) << '"' << ","
            << parity_name(spec.labels[i].parity) << "," << detail::fmt(occ.empty() ? 0.0 : occ[0]) << ","
            << detail::fmt(occ.size() > 1 ? occ[1] : 0.0) << "\n";
    }

    OutputSet files;
    files.add("spectrum.json", detail::dump(j));
    files.add("spectrum.csv", csv.str());
    json residuals = json::array();
    for (double r : e.residuals) residuals.push_back(r);
    detail::finish(cfg, opt, "solve", files, {{"seed", sopt.seed}, {"converged", converged}, {"residuals", residuals}});

    int code = exit_ok;
    if (!converged) code = exit_unresolved;
    if (double_well && !spec.splitting) code = exit_unresolved;
    if (spec.splitting) log << "J_meV=" << detail::fmt(*spec.splitting) << "\n";
    else log << "J_meV=" << (double_well ? "unresolved" : "NA") << "\n";
    log << "ZPE_meV=" << detail::fmt(spec.zpe) << "\n";
    return code;
}

// ---------------------------------------------------------------------------
// sweep-mass

inline int cmd_sweep_mass(const RunConfig& cfg, const RunOptions& opt, std::ostream& log = std::cout) {
    OutputSet::guard(opt.out, {"sweep.csv", "sweep.json", "manifest.json"}, opt.force);
    std::size_t dup = 0;
    const auto masses = sweep_masses(cfg.mass.masses, &dup);
    if (dup) log << "warning: dropped " << dup << " duplicate mass(es)\n";
    if (cfg.mass.lattice_mass) throw Error(ErrorCode::ConfigError, "mass.lattice_mass conflicts with a sweep");
    const auto pr = build_problem(cfg);
    const auto sel = selection_for(pr, cfg.subspace.active, cfg.subspace.pins);
    const auto grid = subspace_grid(pr.grid, sel);
    const auto base = build_operator(pr, grid, cfg);
    const auto sopt = detail::solver_options(cfg, opt);

    SweepResult s;
    s.duplicates = dup;
    s.points.resize(masses.size());
    detail::parallel_for(masses.size(), opt.threads, [&](std::size_t i) {
        const MassRescale r(masses[i], cfg.mass.reference);
        auto o = sopt;
        o.k = std::min<std::size_t>(std::max<std::size_t>(2, o.k), 4);
        auto p = splitting_point(mass_rescale(base, r, cfg.mass.axis), o);
        p.mass = masses[i];
        p.factor = r.factor();
        s.points[i] = p;
    });
    for (const auto& p : s.points)
        if (!p.converged) log << "warning: mass " << p.mass << " did not converge; excluded from the fit\n";
    fit_sweep(s);

    const std::string hash = sha256_hex(cfg.text);
    std::ostringstream csv;
    csv << "# config_hash=" << hash << "\n";
    csv << "mass_amu,scale_factor,J_meV,converged_flag\n";
    for (const auto& p : s.points) {
        csv << detail::fmt(p.mass) << "," << detail::fmt(p.factor) << "," << detail::fmt(p.splitting) << "," << (p.converged ? 1 : 0) << "\n";
    }
    json j = detail::header(cfg, "sweep-mass");
    j["axis"] = cfg.mass.axis;
    j["reference_mass_amu"] = cfg.mass.reference;
    j["duplicates_dropped"] = s.duplicates;
    json pts = json::array();
    for (const auto& p : s.points) {
        pts.push_back({{"mass_amu", p.mass}, {"scale_factor", p.factor}, {"J_meV", p.splitting}, {"converged", p.converged}});
    }
    j["points"] = pts;
    j["fit"] = {{"model", "ln J = intercept + slope * sqrt(m / m_ref)"}, {"slope", s.slope}, {"intercept", s.intercept}, {"r2", s.r2},
                {"points_used", s.fitted}, {"partial", s.partial}};
    OutputSet files;
    files.add("sweep.csv", csv.str());
    files.add("sweep.json", detail::dump(j));
    detail::finish(cfg, opt, "sweep-mass", files, {{"seed", sopt.seed}});
    log << "R2=" << detail::fmt(s.r2) << "\n";
    return s.partial ? exit_unresolved : exit_ok;
}

// ---------------------------------------------------------------------------
// reduce

inline int cmd_reduce(const RunConfig& cfg, const RunOptions& opt, std::ostream& log = std::cout) {
    OutputSet::guard(opt.out, {"reduce.csv", "reduce.json", "manifest.json"}, opt.force);
    if (cfg.reduce.empty()) throw Error(ErrorCode::ConfigError, "reduce.subspaces is empty");
    const auto pr = build_problem(cfg);
    std::vector<SubspaceSelection> sels;
    std::vector<GridSpec> grids;
    for (const auto& row : cfg.reduce) {
        // row pins come from [subspace] pins for axes the row freezes
        std::map<std::string, double> pins;
        for (const auto& [l, v] : cfg.subspace.pins)
            if (std::find(row.active.begin(), row.active.end(), l) == row.active.end()) pins[l] = v;
        sels.push_back(selection_for(pr, row.active, pins));
        grids.push_back(subspace_grid(pr.grid, sels.back()));
    }
    const auto sopt = detail::solver_options(cfg, opt);
    struct Row {
        double j = 0.0, zpe = 0.0;
        std::string status;
        bool ok = false;
    };
    std::vector<Row> rows(grids.size());
    detail::parallel_for(grids.size(), opt.threads, [&](std::size_t i) {
        const auto op = build_operator(pr, grids[i], cfg);
        auto o = sopt;
        o.k = std::min<std::size_t>(std::max<std::size_t>(2, o.k), 4);
        const auto spec = analyze(lowest(op, o), pr.field, grids[i]);
        rows[i].zpe = spec.zpe;
        rows[i].j = spec.eigen.eigenvalues[1] - spec.eigen.eigenvalues[0];
        rows[i].status = spec.splitting_status;
        rows[i].ok = spec.splitting.has_value() && spec.eigen.converged;
    });

    const std::string hash = sha256_hex(cfg.text);
    std::ostringstream csv;
    csv << "# config_hash=" << hash << "\n";
    csv << "name,dims,active,pins,J_meV,ZPE_meV,status\n";
    json j = detail::header(cfg, "reduce");
    json out = json::array();
    bool all_ok = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::string active, pins;
        for (const auto& a : sels[i].active) active += (active.empty() ? "" : " ") + a;
        for (const auto& [l, v] : sels[i].pins) pins += (pins.empty() ? "" : " ") + l + "=" + detail::fmt(v);
        csv << cfg.reduce[i].name << "," << sels[i].active.size() << ",\"" << active << "\",\"" << pins << "\","
            << detail::fmt(rows[i].j) << "," << detail::fmt(rows[i].zpe) << "," << rows[i].status << "\n";
        json pj = json::object();
        for (const auto& [l, v] : sels[i].pins) pj[l] = v;
        out.push_back({{"name", cfg.reduce[i].name}, {"dims", sels[i].active.size()}, {"active", sels[i].active}, {"pins", pj},
                       {"J_meV", rows[i].j}, {"ZPE_meV", rows[i].zpe}, {"status", rows[i].status}});
        all_ok = all_ok && rows[i].ok;
        log << cfg.reduce[i].name << ": J_meV=" << detail::fmt(rows[i].j) << "\n";
    }
    j["rows"] = out;
    OutputSet files;
    files.add("reduce.csv", csv.str());
    files.add("reduce.json", detail::dump(j));
    detail::finish(cfg, opt, "reduce", files, {{"seed", sopt.seed}});
    return all_ok ? exit_ok : exit_unresolved;
}

// ---------------------------------------------------------------------------
// strain / fls / density

inline int cmd_strain(const RunConfig& cfg, const RunOptions& opt, std::ostream& log = std::cout) {
    OutputSet::guard(opt.out, {"strain.json", "strain.csv", "manifest.json"}, opt.force);
    if (!cfg.strain.present) throw Error(ErrorCode::ConfigError, "missing [strain] section");
    const auto& s = cfg.strain;
    const auto pi = ElasticDipole::voigt(s.p_i);
    const auto pj = ElasticDipole::voigt(s.p_j);
    const auto dir = tunnelgrid::detail::from_voigt(s.direction);
    const double n = dir.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::OrthogonalStrainDirection, "zero strain direction");
    const Eigen::Matrix3d unit = dir / n;
    const double coupling = contract(pj.tensor() - pi.tensor(), unit) * units::mev_per_ev;  // meV per unit strain
    const double eps_star = quench_strain(s.j, pj - pi, unit);

    std::ostringstream csv;
    csv << "# config_hash=" << sha256_hex(cfg.text) << "\n";
    csv << "strain,asymmetry_meV,splitting_meV,E_minus_meV,E_plus_meV\n";
    json scan = json::array();
    for (double m : s.magnitudes) {
        const StrainTensor eps(Eigen::Matrix3d(unit * m));
        const double delta = asymmetry(pi, pj, eps);
        const auto lv = two_site_levels(s.j, delta);
        csv << detail::fmt(m) << "," << detail::fmt(delta) << "," << detail::fmt(lv.splitting()) << "," << detail::fmt(lv.lower) << ","
            << detail::fmt(lv.upper) << "\n";
        scan.push_back({{"strain", m}, {"asymmetry_meV", delta}, {"splitting_meV", lv.splitting()}});
    }
    json j = detail::header(cfg, "strain");
    j["J_meV"] = s.j;
    j["coupling_meV_per_unit_strain"] = coupling;
    j["quench_strain"] = eps_star;
    j["scan"] = scan;
    OutputSet files;
    files.add("strain.json", detail::dump(j));
    files.add("strain.csv", csv.str());
    detail::finish(cfg, opt, "strain", files, json::object());
    log << "quench_strain=" << detail::fmt(eps_star) << "\n";
    return exit_ok;
}

inline int cmd_fls(const RunConfig& cfg, const RunOptions& opt, std::ostream& log = std::cout) {
    OutputSet::guard(opt.out, {"fls.json", "manifest.json"}, opt.force);
    json j = detail::header(cfg, "fls");
    std::array<double, 4> levels{};
    int code = exit_ok;
    if (cfg.fls.source == "ring") {
        levels = fls_levels(SiteNetwork::ring(4, cfg.fls.j, cfg.fls.j_prime, cfg.fls.delta));
        j["source"] = "ring";
        j["J_meV"] = cfg.fls.j;
        j["J_prime_meV"] = cfg.fls.j_prime;
        j["delta_meV"] = cfg.fls.delta;
    } else {
        const auto pr = build_problem(cfg);
        const auto sel = selection_for(pr, cfg.subspace.active, cfg.subspace.pins);
        const auto grid = subspace_grid(pr.grid, sel);
        const auto sopt = detail::solver_options(cfg, opt);
        auto o = sopt;
        o.k = 4;
        const auto r = fls_from_grid(pr.field, grid, o, cfg.grid.order);
        levels = r.levels;
        j["source"] = "grid";
        j["grid"] = detail::grid_json(grid);
        j["stencil_order"] = cfg.grid.order;
        j["J_meV"] = r.j;
        j["next_nearest_meV"] = r.next_nearest;
        j["ring_levels_meV"] = r.ring;
        j["residuals"] = r.eigen.residuals;
        j["seed"] = sopt.seed;
    }
    j["levels_meV"] = levels;
    j["reference"] = "(E1 + E2) / 2";
    OutputSet files;
    files.add("fls.json", detail::dump(j));
    detail::finish(cfg, opt, "fls", files, json::object());
    log << "levels_meV=" << detail::fmt(levels[0]) << "," << detail::fmt(levels[1]) << "," << detail::fmt(levels[2]) << ","
        << detail::fmt(levels[3]) << "\n";
    return code;
}

inline int cmd_density(const RunConfig& cfg, const RunOptions& opt, std::ostream& log = std::cout) {
    OutputSet::guard(opt.out, {"density.json", "manifest.json"}, opt.force);
    if (!cfg.density.present) throw Error(ErrorCode::ConfigError, "missing [density] section");
    const double d = tls_density(cfg.density.rho, cfg.density.eps0);
    json j = detail::header(cfg, "density");
    j["rho_nm3"] = cfg.density.rho;
    j["eps0_meV"] = cfg.density.eps0;
    j["density_per_eV_nm3"] = d;
    OutputSet files;
    files.add("density.json", detail::dump(j));
    detail::finish(cfg, opt, "density", files, json::object());
    log << "density_per_eV_nm3=" << detail::fmt(d) << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// ingest-check

inline int cmd_ingest_check(const RunConfig& cfg, const RunOptions& opt, std::ostream& log = std::cout) {
    OutputSet::guard(opt.out, {"ingest.json", "manifest.json"}, opt.force);
    if (cfg.potential.source != "samples") throw Error(ErrorCode::ConfigError, "ingest-check needs potential.source = samples");
    const auto s = ingest(cfg.potential.sidecar, cfg.potential.data);
    const auto field = interpolate(s);
    double worst = 0.0;
    std::vector<double> x;
    for (std::size_t p = 0; p < s.energies.size(); ++p) {
        s.spec.node(p, x);
        worst = std::max(worst, std::abs(field.eval(x) - s.energies[p]));
    }
    const auto minima = grid_minima(field, s.spec, s.energies);
    json j = detail::header(cfg, "ingest-check");
    j["grid"] = detail::grid_json(s.spec);
    j["points"] = s.energies.size();
    j["energy_max_meV"] = *std::max_element(s.energies.begin(), s.energies.end());
    j["defect"] = s.metadata.defect;
    j["concentration"] = s.metadata.concentration;
    j["knot_residual_max_meV"] = worst;
    j["interior_minima"] = minima.size();
    OutputSet files;
    files.add("ingest.json", detail::dump(j));
    detail::finish(cfg, opt, "ingest-check", files, json::object());
    log << "points=" << s.energies.size() << " minima=" << minima.size() << " knot_residual_max_meV=" << detail::fmt(worst) << "\n";
    return exit_ok;
}

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"solve", "sweep-mass", "reduce", "strain", "fls", "density", "ingest-check"};
    return names;
}

inline int dispatch(const std::string& command, const RunConfig& cfg, const RunOptions& opt, std::ostream& log = std::cout) {
    if (command == "solve") return cmd_solve(cfg, opt, log);
    if (command == "sweep-mass") return cmd_sweep_mass(cfg, opt, log);
    if (command == "reduce") return cmd_reduce(cfg, opt, log);
    if (command == "strain") return cmd_strain(cfg, opt, log);
    if (command == "fls") return cmd_fls(cfg, opt, log);
    if (command == "density") return cmd_density(cfg, opt, log);
    if (command == "ingest-check") return cmd_ingest_check(cfg, opt, log);
    throw Error(ErrorCode::ConfigError, "unknown command '" + command + "'");
}

}  // namespace tunnelgrid::cli
