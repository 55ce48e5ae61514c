#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "envkit/function.hpp"
#include "envkit/envelope.hpp"
#include "envkit/sequence.hpp"
#include "envkit/verify.hpp"

namespace envkit::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::Schema, msg);
}

inline const json& member(const json& j, const char* key) {
    auto it = j.find(key);
    require(it != j.end(), std::string("missing key '") + key + "'");
    return *it;
}

inline double number(const json& j, const std::string& what) {
    require(j.is_number(), what + " must be a number");
    return j.get<double>();
}

} // namespace detail

/// All output files are written to a sibling temp file first and renamed into
/// place, so readers never observe a partial file.
inline void atomic_write_text(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
        out << text;
        if (!out) fail(ErrorKind::Io, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::Io, "cannot move '" + tmp.string() + "' to '" + path.string() +
                                    "': " + ec.message());
}

inline json metric_to_json(MetricSpec m) {
    return json{{"x", to_string(m.x)}, {"y", to_string(m.y)}};
}

inline MetricSpec metric_from_json(const json& j) {
    detail::require(j.is_object(), "'metric' must be an object with keys 'x' and 'y'");
    const json& jx = detail::member(j, "x");
    const json& jy = detail::member(j, "y");
    detail::require(jx.is_string() && jy.is_string(), "metric names must be strings");
    return MetricSpec{metric_from_string(jx.get<std::string>()),
                      metric_from_string(jy.get<std::string>())};
}

inline json axes_to_json(std::span<const AxisGrid> axes) {
    json arr = json::array();
    for (const auto& a : axes) {
        json coords = json::array();
        for (double c : a.coords()) coords.push_back(c);
        arr.push_back(std::move(coords));
    }
    return arr;
}

inline std::vector<AxisGrid> axes_from_json(const json& j, const char* key) {
    detail::require(j.is_array() && !j.empty(),
                    std::string("'") + key + "' must be a nonempty array of coordinate arrays");
    std::vector<AxisGrid> axes;
    axes.reserve(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) {
        const json& ja = j[k];
        detail::require(ja.is_array(),
                        std::string("'") + key + "' axis " + std::to_string(k) +
                            " must be an array of numbers");
        std::vector<double> coords;
        coords.reserve(ja.size());
        for (std::size_t i = 0; i < ja.size(); ++i) {
            detail::require(ja[i].is_number(), std::string("'") + key + "' axis " +
                                                   std::to_string(k) + " entry " +
                                                   std::to_string(i) + " must be a number");
            coords.push_back(ja[i].get<double>());
        }
        axes.emplace_back(std::move(coords));
    }
    return axes;
}

inline json function_to_json(const SampledFunction& f) {
    json j;
    j["name"] = f.name();
    j["metric"] = metric_to_json(f.metric());
    j["x_axes"] = axes_to_json(f.grid().x_axes());
    j["y_axes"] = axes_to_json(f.grid().y_axes());
    json vals = json::array();
    for (double v : f.values()) vals.push_back(v);
    j["values"] = std::move(vals);
    return j;
}

/// Accepts the function schema and tolerates extra keys, so envelope and
/// sequence outputs load back as plain functions.
inline SampledFunction function_from_json(const json& j) {
    detail::require(j.is_object(), "top level must be an object");
    std::string name;
    if (auto it = j.find("name"); it != j.end()) {
        detail::require(it->is_string(), "'name' must be a string");
        name = it->get<std::string>();
    }
    MetricSpec metric = metric_from_json(detail::member(j, "metric"));
    std::vector<AxisGrid> xa = axes_from_json(detail::member(j, "x_axes"), "x_axes");
    std::vector<AxisGrid> ya = axes_from_json(detail::member(j, "y_axes"), "y_axes");
    const json& jv = detail::member(j, "values");
    detail::require(jv.is_array(), "'values' must be an array of numbers");
    std::vector<double> values;
    values.reserve(jv.size());
    for (std::size_t i = 0; i < jv.size(); ++i) {
        detail::require(jv[i].is_number(),
                        "'values' entry " + std::to_string(i) + " must be a number");
        values.push_back(jv[i].get<double>());
    }
    ProductGrid grid(std::move(xa), std::move(ya));
    return SampledFunction(std::move(grid), metric, std::move(values), std::move(name));
}

inline json parse_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
    json j;
    try {
        j = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Schema, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return j;
}

inline SampledFunction load_function(const fs::path& path) {
    try {
        return function_from_json(parse_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io) throw;
        fail(ErrorKind::Schema, "'" + path.string() + "': " + e.what());
    }
}

inline void save_function(const SampledFunction& f, const fs::path& path) {
    atomic_write_text(path, function_to_json(f).dump(2) + "\n");
}

inline void save_envelope(const EnvelopeResult& r, const fs::path& path) {
    json j = function_to_json(r.output);
    j["params"] = json{{"variable", to_string(r.params.variable)},
                       {"bound", to_string(r.params.bound)},
                       {"radius", r.params.radius},
                       {"kernel", to_string(r.kernel)}};
    atomic_write_text(path, j.dump(2) + "\n");
}

namespace detail {

inline std::string step_file(int n, const char* role) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "step_%03d_", n);
    return std::string(buf) + role + ".json";
}

} // namespace detail

/// Writes dir/base.json, dir/step_NNN_{lower,upper,inserted}.json and a
/// manifest tying them together.
inline void save_sequence(const EnvelopeSequence& seq, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());
    save_function(seq.base, dir / "base.json");
    json manifest;
    manifest["rho"] = seq.rho;
    manifest["base"] = "base.json";
    json steps = json::array();
    for (const auto& s : seq.steps) {
        std::string lower = detail::step_file(s.n, "lower");
        std::string upper = detail::step_file(s.n, "upper");
        std::string inserted = detail::step_file(s.n, "inserted");
        save_function(s.lower, dir / lower);
        save_function(s.upper, dir / upper);
        save_function(s.inserted, dir / inserted);
        steps.push_back(json{{"n", s.n},
                             {"alpha", s.alpha},
                             {"lower", lower},
                             {"upper", upper},
                             {"inserted", inserted}});
    }
    manifest["steps"] = std::move(steps);
    atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

/// Reads a sequence directory back and revalidates the structural invariants
/// (shared layout, alpha = rho/n, lower <= base <= upper at every node).
inline EnvelopeSequence load_sequence(const fs::path& dir) {
    json manifest = parse_file(dir / "manifest.json");
    detail::require(manifest.is_object(), "manifest must be an object");
    double rho = detail::number(detail::member(manifest, "rho"), "'rho'");
    const json& jb = detail::member(manifest, "base");
    detail::require(jb.is_string(), "'base' must be a file name");
    SampledFunction base = load_function(dir / jb.get<std::string>());
    const json& js = detail::member(manifest, "steps");
    detail::require(js.is_array() && !js.empty(), "'steps' must be a nonempty array");
    std::vector<EnvelopeStep> steps;
    steps.reserve(js.size());
    for (const json& s : js) {
        const json& jn = detail::member(s, "n");
        detail::require(jn.is_number_integer() && jn.get<long long>() >= 1,
                        "step 'n' must be a positive integer");
        int n = jn.get<int>();
        double alpha = detail::number(detail::member(s, "alpha"), "step 'alpha'");
        auto load_part = [&](const char* key) {
            const json& jf = detail::member(s, key);
            detail::require(jf.is_string(), std::string("step '") + key + "' must be a file name");
            return load_function(dir / jf.get<std::string>());
        };
        EnvelopeStep step{n, alpha, load_part("lower"), load_part("upper"),
                          load_part("inserted")};
        detail::require(step.alpha == rho / static_cast<double>(step.n),
                        "step " + std::to_string(step.n) + " alpha does not equal rho/n");
        detail::require(same_layout(step.lower, base) && same_layout(step.upper, base) &&
                            same_layout(step.inserted, base),
                        "step " + std::to_string(step.n) + " is not on the base layout");
        auto bv = base.values();
        auto lv = step.lower.values();
        auto uv = step.upper.values();
        for (std::size_t i = 0; i < bv.size(); ++i)
            detail::require(lv[i] <= bv[i] && bv[i] <= uv[i],
                            "step " + std::to_string(step.n) +
                                " violates the envelope sandwich at node " +
                                node_label(base.grid(), i));
        steps.push_back(std::move(step));
    }
    return EnvelopeSequence{std::move(base), rho, std::move(steps)};
}

inline void write_convergence_csv(const ConvergenceReport& report, const fs::path& path) {
    std::ostringstream out;
    out << "n,alpha,max_gap,mean_gap,insertion_lipschitz\n";
    for (const auto& row : report.per_n)
        out << row.n << ',' << format_double(row.alpha) << ',' << format_double(row.max_gap)
            << ',' << format_double(row.mean_gap) << ','
            << format_double(row.insertion_lipschitz) << '\n';
    atomic_write_text(path, out.str());
}

/// Final-step gap per node; node labels are quoted because they contain commas.
inline void write_gap_csv(const ConvergenceReport& report, const ProductGrid& grid,
                          const fs::path& path) {
    std::ostringstream out;
    out << "node,gap,converged\n";
    for (std::size_t i = 0; i < report.per_node_gap.size(); ++i)
        out << '"' << node_label(grid, i) << "\"," << format_double(report.per_node_gap[i])
            << ',' << (report.converged[i] ? 1 : 0) << '\n';
    atomic_write_text(path, out.str());
}

inline const char* to_string(DeficiencyMode mode) {
    switch (mode) {
    case DeficiencyMode::SeparateFirst: return "separate-first";
    case DeficiencyMode::SeparateSecond: return "separate-second";
    default: return "joint";
    }
}

inline const char* to_string(SemicontinuitySide side) {
    return side == SemicontinuitySide::Lower ? "lsc" : "usc";
}

inline void write_profile_csv(const DeficiencyProfile& profile, const ProductGrid& probe_grid,
                              const fs::path& path) {
    std::ostringstream out;
    out << "radius,lsc_deficiency,lsc_witness,usc_deficiency,usc_witness\n";
    for (const auto& row : profile.rows)
        out << format_double(row.radius) << ',' << format_double(row.lsc_deficiency) << ",\""
            << node_label(probe_grid, row.lsc_witness) << "\","
            << format_double(row.usc_deficiency) << ",\""
            << node_label(probe_grid, row.usc_witness) << "\"\n";
    atomic_write_text(path, out.str());
}

inline void write_verdict_json(const CheckResult& result, DeficiencyMode mode,
                               SemicontinuitySide side, std::span<const double> radii,
                               const ProductGrid& probe_grid, const fs::path& path) {
    json j;
    j["check"] = to_string(mode);
    j["side"] = to_string(side);
    j["engine"] = result.profile.analytic ? "analytic" : "sampled";
    j["passed"] = result.verdict.passed;
    j["tol"] = result.verdict.tol;
    j["trend"] = result.verdict.trend;
    json jr = json::array();
    for (double r : radii) jr.push_back(r);
    j["radii"] = std::move(jr);
    if (result.verdict.witness) {
        const auto& w = *result.verdict.witness;
        json node = json::array();
        for (std::size_t k : w.node) node.push_back(k);
        std::size_t flat = probe_grid.to_flat(w.node);
        j["witness"] = json{{"node", std::move(node)},
                            {"label", node_label(probe_grid, flat)},
                            {"radius", w.radius},
                            {"deficiency", w.deficiency}};
    } else {
        j["witness"] = nullptr;
    }
    atomic_write_text(path, j.dump(2) + "\n");
}

inline void write_refinement_csv(const std::vector<RefinementRow>& rows, const fs::path& path) {
    std::ostringstream out;
    out << "level,factor,node_count,lsc_first,usc_first,lsc_second,usc_second,"
           "envelope_min_delta,envelope_max_delta\n";
    for (const auto& r : rows)
        out << r.level << ',' << r.factor << ',' << r.node_count << ','
            << format_double(r.lsc_first) << ',' << format_double(r.usc_first) << ','
            << format_double(r.lsc_second) << ',' << format_double(r.usc_second) << ','
            << format_double(r.envelope_min_delta) << ','
            << format_double(r.envelope_max_delta) << '\n';
    atomic_write_text(path, out.str());
}

} // namespace envkit::io
