#pragma once

// Sampled potential grids: a metadata sidecar (INI) plus a CSV data file.
//
//   sidecar                         data
//   [potential]                     # i1,i2,energy
//   dimensions = 2                  0,0,12.5
//   energy_units = meV              0,1,3.25
//   defect = O-H                    ...
//   concentration = 0.0185
//   frame = site pair A/B
//   [axis1]
//   label = q_y
//   min = -0.6
//   max = 0.6
//   count = 13
//   units = amu^1/2 A
//
// Indices are zero-based and ascend row-major (last axis fastest).

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"
#include "tunnelgrid/grid.hpp"
#include "tunnelgrid/potential.hpp"
#include "tunnelgrid/spline.hpp"

namespace tunnelgrid {

struct SampleMetadata {
    std::string defect;
    double concentration = 0.0;
    std::string frame;
    std::vector<std::string> axis_units;
};

struct SampledPotential {
    GridSpec spec;
    std::vector<double> energies;  // meV, row-major, minimum is zero
    SampleMetadata metadata;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto ws = " \t";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string format_tuple(const std::vector<std::size_t>& idx) {
    std::string s = "(";
    for (std::size_t d = 0; d < idx.size(); ++d) s += (d ? "," : "") + std::to_string(idx[d]);
    return s + ")";
}

}  // namespace detail

/// Shifts energies so the grid minimum is exactly zero.
inline void rereference(std::vector<double>& e) {
    if (e.empty()) return;
    const double lo = *std::min_element(e.begin(), e.end());
    for (double& v : e) v -= lo;
}

inline GridSpec parse_sidecar(std::istream& in, SampleMetadata& meta) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorCode::MalformedRow, std::string("sidecar: ") + e.message());
    }
    static const std::set<std::string> potential_keys{"dimensions", "energy_units", "defect", "concentration", "frame"};
    static const std::set<std::string> axis_keys{"label", "min", "max", "count", "units"};
    auto pot = pt.get_child_optional("potential");
    if (!pot) throw Error(ErrorCode::MalformedRow, "sidecar lacks a [potential] section");
    for (const auto& [k, _] : *pot) {
        if (!potential_keys.count(k)) throw Error(ErrorCode::MalformedRow, "sidecar: unknown key potential." + k);
    }
    std::size_t dims = 0;
    try {
        dims = pot->get<std::size_t>("dimensions");
        if (pot->get<std::string>("energy_units", "meV") != "meV") {
            throw Error(ErrorCode::MalformedRow, "sidecar: energy_units must be meV");
        }
        meta.defect = pot->get<std::string>("defect", "");
        meta.concentration = pot->get<double>("concentration", 0.0);
        meta.frame = pot->get<std::string>("frame", "");
    } catch (const boost::property_tree::ptree_error& e) {
        throw Error(ErrorCode::MalformedRow, std::string("sidecar: ") + e.what());
    }
    if (dims < 1 || dims > max_active_dimension) throw Error(ErrorCode::MalformedRow, "sidecar: dimensions must be 1..5");
    std::vector<AxisSpec> axes;
    meta.axis_units.clear();
    for (std::size_t d = 1; d <= dims; ++d) {
        const std::string name = "axis" + std::to_string(d);
        auto sec = pt.get_child_optional(name);
        if (!sec) throw Error(ErrorCode::MalformedRow, "sidecar lacks [" + name + "]");
        for (const auto& [k, _] : *sec) {
            if (!axis_keys.count(k)) throw Error(ErrorCode::MalformedRow, "sidecar: unknown key " + name + "." + k);
        }
        try {
            AxisSpec a{sec->get<std::string>("label"), sec->get<double>("min"), sec->get<double>("max"), sec->get<std::size_t>("count")};
            if (a.count < 2) throw Error(ErrorCode::MalformedRow, name + ": sampled axes need count >= 2");
            if (!(a.max > a.min)) throw Error(ErrorCode::NonMonotoneAxis, name + ": max must exceed min");
            axes.push_back(std::move(a));
            meta.axis_units.push_back(sec->get<std::string>("units", "amu^1/2 A"));
        } catch (const boost::property_tree::ptree_error& e) {
            throw Error(ErrorCode::MalformedRow, name + ": " + e.what());
        }
    }
    for (const auto& [k, _] : pt) {
        bool known = k == "potential";
        for (std::size_t d = 1; d <= dims && !known; ++d) known = k == "axis" + std::to_string(d);
        if (!known) throw Error(ErrorCode::MalformedRow, "sidecar: unexpected section [" + k + "]");
    }
    return GridSpec(std::move(axes));
}

/// Parses the data rows against `spec`; energies are returned re-referenced.
inline std::vector<double> parse_samples(const std::string& text, const GridSpec& spec) {
    if (text.find('\r') != std::string::npos) throw Error(ErrorCode::MalformedRow, "data file must use LF line endings");
    const std::size_t dims = spec.dimension();
    const std::size_t n = spec.point_count();
    std::vector<double> energies(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> seen(n, false);
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::size_t> idx(dims);
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            fields.push_back(detail::trim(line.substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != dims + 1) {
            throw Error(ErrorCode::MalformedRow, where + ": expected " + std::to_string(dims + 1) + " fields");
        }
        for (std::size_t d = 0; d < dims; ++d) {
            const auto& f = fields[d];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), idx[d]);
            if (ec != std::errc() || p != f.data() + f.size()) throw Error(ErrorCode::MalformedRow, where + ": bad index '" + f + "'");
            if (idx[d] >= spec.axis(d).count) throw Error(ErrorCode::MalformedRow, where + ": index out of range");
        }
        double e = 0.0;
        {
            const auto& f = fields[dims];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), e);
            if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(e)) {
                throw Error(ErrorCode::MalformedRow, where + ": bad energy '" + f + "'");
            }
        }
        const std::size_t flat = spec.ravel(idx);
        if (seen[flat]) {
            if (energies[flat] != e) {
                throw Error(ErrorCode::MalformedRow, where + ": duplicate tuple " + detail::format_tuple(idx) + " with conflicting energy");
            }
            continue;
        }
        seen[flat] = true;
        energies[flat] = e;
    }
    for (std::size_t p = 0; p < n; ++p) {
        if (!seen[p]) {
            spec.unravel(p, idx);
            throw Error(ErrorCode::MissingSample, "no sample for index tuple " + detail::format_tuple(idx));
        }
    }
    rereference(energies);
    return energies;
}

/// Reads a sidecar/data file pair.
inline SampledPotential ingest(const std::filesystem::path& sidecar, const std::filesystem::path& data) {
    SampledPotential s;
    std::istringstream side(detail::read_text(sidecar));
    s.spec = parse_sidecar(side, s.metadata);
    s.energies = parse_samples(detail::read_text(data), s.spec);
    return s;
}

inline void write_samples(const SampledPotential& s, const std::filesystem::path& sidecar, const std::filesystem::path& data) {
    {
        std::ofstream out(sidecar, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + sidecar.string());
        out << std::setprecision(17);
        out << "[potential]\ndimensions = " << s.spec.dimension() << "\nenergy_units = meV\n";
        if (!s.metadata.defect.empty()) out << "defect = " << s.metadata.defect << "\n";
        out << "concentration = " << s.metadata.concentration << "\n";
        if (!s.metadata.frame.empty()) out << "frame = " << s.metadata.frame << "\n";
        for (std::size_t d = 0; d < s.spec.dimension(); ++d) {
            const auto& a = s.spec.axis(d);
            out << "\n[axis" << d + 1 << "]\nlabel = " << a.label << "\nmin = " << a.min << "\nmax = " << a.max
                << "\ncount = " << a.count << "\nunits = "
                << (d < s.metadata.axis_units.size() ? s.metadata.axis_units[d] : std::string("amu^1/2 A")) << "\n";
        }
    }
    std::ofstream out(data, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + data.string());
    out << std::setprecision(17) << "#";
    for (std::size_t d = 0; d < s.spec.dimension(); ++d) out << " i" << d + 1 << ",";
    out << " energy_meV\n";
    std::vector<std::size_t> idx;
    for (std::size_t p = 0; p < s.energies.size(); ++p) {
        s.spec.unravel(p, idx);
        for (std::size_t i : idx) out << i << ",";
        out << s.energies[p] << "\n";
    }
}

/// Samples an analytic field on `spec` into the file representation.
inline SampledPotential tabulate(const PotentialField& field, const GridSpec& spec, SampleMetadata meta = {}) {
    SampledPotential s{spec, sample_on(field, spec), std::move(meta)};
    rereference(s.energies);
    return s;
}

/// Tensor-spline field over the sample box, restricted to the target grid's
/// box (target axes must carry the sample labels in the same order).
inline PotentialField interpolate(const SampledPotential& sampled, const GridSpec& target) {
    const auto& src = sampled.spec;
    if (target.dimension() != src.dimension()) throw Error(ErrorCode::DomainMismatch, "target and sample dimensions differ");
    std::vector<std::vector<double>> knots(src.dimension());
    std::vector<Interval> domain(src.dimension());
    std::vector<std::string> labels;
    for (std::size_t d = 0; d < src.dimension(); ++d) {
        const auto& a = src.axis(d);
        const auto& t = target.axis(d);
        if (t.label != a.label) throw Error(ErrorCode::DomainMismatch, "target axis '" + t.label + "' vs sample axis '" + a.label + "'");
        const double slack = 1e-12 * std::max(1.0, a.max - a.min);
        if (t.min < a.min - slack || t.max > a.max + slack) {
            throw Error(ErrorCode::TargetExceedsDomain, "target axis '" + t.label + "' leaves the sampled box");
        }
        for (std::size_t i = 0; i < a.count; ++i) knots[d].push_back(a.coordinate(i));
        domain[d] = {a.min, a.max};
        labels.push_back(a.label);
    }
    auto spline = std::make_shared<const TensorSpline>(std::move(knots), sampled.energies);
    return PotentialField(std::move(labels), std::move(domain), [spline](std::span<const double> x) { return (*spline)(x); });
}

/// Spline over the full sample box.
inline PotentialField interpolate(const SampledPotential& sampled) { return interpolate(sampled, sampled.spec); }

}  // namespace tunnelgrid
