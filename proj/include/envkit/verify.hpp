#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "envkit/catalog.hpp"
#include "envkit/envelope.hpp"
#include "envkit/sequence.hpp"

namespace envkit {

/// Which neighborhoods the deficiency probes: balls in the first factor,
/// balls in the second factor, or joint products of both.
enum class DeficiencyMode { SeparateFirst, SeparateSecond, Joint };

/// Which one-sided deficiency a verdict is about.
enum class SemicontinuitySide { Lower, Upper }; // lsc / usc

struct DeficiencyRow {
    double radius = 0.0;
    double lsc_deficiency = 0.0; // max over probes of f - inf over the ball
    double usc_deficiency = 0.0; // max over probes of sup over the ball - f
    std::size_t lsc_witness = 0; // probe flat index attaining the max
    std::size_t usc_witness = 0;
};

/// Deficiency trend over a shrinking radius schedule. Semicontinuity of the
/// underlying function shows up as the relevant deficiency decaying to 0;
/// a wrong-sided jump keeps it pinned at the jump height.
///
/// A single grid cannot attribute a nodal jump to either side (every sampled
/// pattern extends continuously), so the measurement that discriminates
/// re-samples an analytic catalog member on a refinement fine enough to
/// resolve every scheduled radius, while probing only the original nodes.
/// `analytic` records whether that engine was used; without a closed form
/// the profile measures the nodal data as-is and is resolution-limited.
struct DeficiencyProfile {
    DeficiencyMode mode = DeficiencyMode::SeparateFirst;
    bool analytic = false;
    std::vector<DeficiencyRow> rows; // one per radius, radii strictly decreasing
};

struct DeficiencyWitness {
    std::vector<std::size_t> node; // probe-grid multi-index
    double radius = 0.0;
    double deficiency = 0.0;
};

struct CertificationVerdict {
    bool passed = false;
    double tol = 0.0;
    double trend = 0.0; // final-radius deficiency on the certified side
    std::optional<DeficiencyWitness> witness;
};

namespace detail {

inline void validate_radii(std::span<const double> radii) {
    if (radii.empty()) fail(ErrorKind::InvalidArgument, "empty radius schedule");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || !std::isfinite(radii[i]))
            fail(ErrorKind::InvalidArgument, "radii must be positive and finite");
        if (i > 0 && !(radii[i] < radii[i - 1]))
            fail(ErrorKind::InvalidArgument, "radii must be strictly decreasing");
    }
}

/// Probe restriction for refined measurements: fine_flat[i] is the fine-grid
/// flat index of probe i; witnesses are reported against `base`.
struct ProbeMap {
    const ProductGrid* base = nullptr;
    std::vector<std::size_t> fine_flat;
};

inline ProbeMap make_probe_map(const ProductGrid& base, const ProductGrid& fine,
                               std::span<const std::size_t> per_axis_factor) {
    ProbeMap map;
    map.base = &base;
    map.fine_flat.reserve(base.node_count());
    std::vector<std::size_t> fidx(base.axis_count());
    for_each_multi(base.sizes(), [&](std::span<const std::size_t> multi) {
        for (std::size_t k = 0; k < multi.size(); ++k) fidx[k] = multi[k] * per_axis_factor[k];
        map.fine_flat.push_back(fine.to_flat(fidx));
    });
    return map;
}

/// Shared deficiency engine: envelopes of g per radius, maxima taken over the
/// probes (all nodes when `probes` is null).
inline DeficiencyProfile measure_on(const SampledFunction& g, DeficiencyMode mode,
                                    std::span<const double> radii, const ProbeMap* probes,
                                    bool analytic) {
    validate_radii(radii);
    DeficiencyProfile profile;
    profile.mode = mode;
    profile.analytic = analytic;
    profile.rows.reserve(radii.size());
    auto fv = g.values();
    for (double r : radii) {
        SampledFunction lower = [&] {
            switch (mode) {
            case DeficiencyMode::SeparateFirst:
                return ball_inf_first(g, r).output;
            case DeficiencyMode::SeparateSecond:
                return ball_inf_second(g, r).output;
            default:
                return ball_inf_second(ball_inf_first(g, r).output, r).output;
            }
        }();
        SampledFunction upper = [&] {
            switch (mode) {
            case DeficiencyMode::SeparateFirst:
                return ball_sup_first(g, r).output;
            case DeficiencyMode::SeparateSecond:
                return ball_sup_second(g, r).output;
            default:
                return ball_sup_second(ball_sup_first(g, r).output, r).output;
            }
        }();
        auto lv = lower.values();
        auto uv = upper.values();
        DeficiencyRow row;
        row.radius = r;
        const std::size_t count = probes ? probes->fine_flat.size() : fv.size();
        for (std::size_t p = 0; p < count; ++p) {
            const std::size_t i = probes ? probes->fine_flat[p] : p;
            double dl = fv[i] - lv[i];
            double du = uv[i] - fv[i];
            if (dl > row.lsc_deficiency) {
                row.lsc_deficiency = dl;
                row.lsc_witness = p;
            }
            if (du > row.usc_deficiency) {
                row.usc_deficiency = du;
                row.usc_witness = p;
            }
        }
        profile.rows.push_back(row);
    }
    return profile;
}

inline double relevant_max_gap(const ProductGrid& g, DeficiencyMode mode) {
    double gap = 0.0;
    if (mode != DeficiencyMode::SeparateSecond)
        for (const auto& a : g.x_axes()) gap = std::max(gap, a.max_gap());
    if (mode != DeficiencyMode::SeparateFirst)
        for (const auto& a : g.y_axes()) gap = std::max(gap, a.max_gap());
    return gap;
}

/// Smallest power-of-two refinement whose cells resolve the final radius.
inline std::size_t auto_refine_factor(const ProductGrid& g, DeficiencyMode mode, double r_min) {
    std::size_t m = 1;
    while (relevant_max_gap(g, mode) / static_cast<double>(m) >= r_min) {
        if (m > 4096)
            fail(ErrorKind::Overflow,
                 "refinement factor needed to resolve radius " + format_double(r_min) +
                     " exceeds the budget; shorten the radius schedule");
        m <<= 1;
    }
    return m;
}

inline ProductGrid refine_for_mode(const ProductGrid& g, DeficiencyMode mode,
                                   std::size_t factor) {
    switch (mode) {
    case DeficiencyMode::SeparateFirst:
        return refine_variable(g, Variable::First, factor);
    case DeficiencyMode::SeparateSecond:
        return refine_variable(g, Variable::Second, factor);
    default:
        return refine(g, factor);
    }
}

inline std::vector<std::size_t> per_axis_factors(const ProductGrid& g, DeficiencyMode mode,
                                                 std::size_t factor) {
    std::vector<std::size_t> f(g.axis_count(), 1);
    for (std::size_t k = 0; k < g.axis_count(); ++k) {
        bool is_x = k < g.dx();
        if (mode == DeficiencyMode::Joint ||
            (is_x ? mode == DeficiencyMode::SeparateFirst
                  : mode == DeficiencyMode::SeparateSecond))
            f[k] = factor;
    }
    return f;
}

} // namespace detail

/// Node-ball deficiencies of the sampled data itself. Honest but
/// resolution-limited: radii below the grid spacing see only the center.
inline DeficiencyProfile measure_deficiency_sampled(const SampledFunction& f,
                                                    DeficiencyMode mode,
                                                    std::span<const double> radii) {
    return detail::measure_on(f, mode, radii, nullptr, false);
}

/// Re-samples the closed form on a refinement of the probe grid fine enough
/// that every scheduled radius contains off-center nodes, then measures the
/// deficiencies at the original probe nodes only. factor 0 picks the smallest
/// sufficient power of two.
inline DeficiencyProfile measure_deficiency_analytic(const CatalogFunction& fn,
                                                     const ProductGrid& probes, MetricSpec metric,
                                                     DeficiencyMode mode,
                                                     std::span<const double> radii,
                                                     std::size_t factor = 0) {
    detail::validate_radii(radii);
    if (factor == 0) factor = detail::auto_refine_factor(probes, mode, radii.back());
    ProductGrid fine = detail::refine_for_mode(probes, mode, factor);
    if (fine.node_count() > (std::size_t{1} << 26))
        fail(ErrorKind::Overflow, "refined verification grid exceeds the node budget");
    SampledFunction fine_f = sample(fn, fine, metric);
    auto pf = detail::per_axis_factors(probes, mode, factor);
    detail::ProbeMap map = detail::make_probe_map(probes, fine, pf);
    return detail::measure_on(fine_f, mode, radii, &map, true);
}

/// Verdict rule: passed iff the final-radius deficiency on the certified
/// side is within the tolerance; the witness names the worst probe there.
inline CertificationVerdict certify(const DeficiencyProfile& profile, SemicontinuitySide side,
                                    double tol, const ProductGrid& probe_grid) {
    if (profile.rows.empty()) fail(ErrorKind::InvalidArgument, "empty deficiency profile");
    if (!(tol >= 0.0) || !std::isfinite(tol))
        fail(ErrorKind::InvalidArgument, "tolerance must be nonnegative and finite");
    const DeficiencyRow& last = profile.rows.back();
    CertificationVerdict v;
    v.tol = tol;
    v.trend = side == SemicontinuitySide::Lower ? last.lsc_deficiency : last.usc_deficiency;
    v.passed = v.trend <= tol;
    if (!v.passed) {
        std::size_t probe =
            side == SemicontinuitySide::Lower ? last.lsc_witness : last.usc_witness;
        v.witness = DeficiencyWitness{probe_grid.to_multi(probe), last.radius, v.trend};
    }
    return v;
}

struct CheckResult {
    DeficiencyProfile profile;
    CertificationVerdict verdict;
};

/// If f carries a catalog name and its samples match the closed form exactly,
/// returns that closed form for refined re-evaluation.
inline std::optional<CatalogFunction> analytic_source_for(const SampledFunction& f) {
    auto fn = find_catalog(f.name());
    if (!fn) return std::nullopt;
    SampledFunction resampled = sample(*fn, f.grid(), f.metric());
    auto a = f.values();
    auto b = resampled.values();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return std::nullopt;
    return fn;
}

/// General entry: measures the deficiency profile of f in the given mode
/// (analytic engine when f is a verified catalog sampling, nodal otherwise)
/// and certifies the requested side.
inline CheckResult check_semicontinuity(const SampledFunction& f, DeficiencyMode mode,
                                        SemicontinuitySide side, std::span<const double> radii,
                                        double tol) {
    auto src = analytic_source_for(f);
    DeficiencyProfile profile =
        src ? measure_deficiency_analytic(*src, f.grid(), f.metric(), mode, radii)
            : measure_deficiency_sampled(f, mode, radii);
    CertificationVerdict verdict = certify(profile, side, tol, f.grid());
    return CheckResult{std::move(profile), std::move(verdict)};
}

/// Is f lower semicontinuous in the first variable (uniformly over the
/// second)? For a genuinely lsc function the deficiency is 0 at radii below
/// the probe spacing; a jump of the wrong orientation stabilizes at its
/// height with the witness on the jump.
inline CheckResult check_separate_lsc_first(const SampledFunction& f,
                                            std::span<const double> radii, double tol) {
    return check_semicontinuity(f, DeficiencyMode::SeparateFirst, SemicontinuitySide::Lower,
                                radii, tol);
}

/// Is f upper semicontinuous in the second variable?
inline CheckResult check_separate_usc_second(const SampledFunction& f,
                                             std::span<const double> radii, double tol) {
    return check_semicontinuity(f, DeficiencyMode::SeparateSecond, SemicontinuitySide::Upper,
                                radii, tol);
}

/// Computes the sup envelope over second-factor balls of radius alpha once,
/// then certifies that the result is jointly lower semicontinuous.
inline CheckResult verify_envelope_joint_lsc(const SampledFunction& f, double alpha,
                                             std::span<const double> radii, double tol) {
    detail::validate_radii(radii);
    auto src = analytic_source_for(f);
    DeficiencyProfile profile;
    if (src) {
        std::size_t factor =
            detail::auto_refine_factor(f.grid(), DeficiencyMode::Joint, radii.back());
        ProductGrid fine = refine(f.grid(), factor);
        if (fine.node_count() > (std::size_t{1} << 26))
            fail(ErrorKind::Overflow, "refined verification grid exceeds the node budget");
        SampledFunction fine_f = sample(*src, fine, f.metric());
        SampledFunction env = ball_sup_second(fine_f, alpha).output;
        auto pf = detail::per_axis_factors(f.grid(), DeficiencyMode::Joint, factor);
        detail::ProbeMap map = detail::make_probe_map(f.grid(), fine, pf);
        profile = detail::measure_on(env, DeficiencyMode::Joint, radii, &map, true);
    } else {
        SampledFunction env = ball_sup_second(f, alpha).output;
        profile = detail::measure_on(env, DeficiencyMode::Joint, radii, nullptr, false);
    }
    CertificationVerdict verdict =
        certify(profile, SemicontinuitySide::Lower, tol, f.grid());
    return CheckResult{std::move(profile), std::move(verdict)};
}

/// Geometric default schedule rho * 2^-k, k = 1..count, with rho = half the
/// largest axis extent.
inline std::vector<double> default_radius_schedule(const ProductGrid& grid, int count = 8) {
    if (count < 1) fail(ErrorKind::InvalidArgument, "schedule needs at least one radius");
    double rho = default_radius_scale(grid);
    std::vector<double> radii(static_cast<std::size_t>(count));
    double r = rho;
    for (auto& out : radii) {
        r /= 2.0;
        out = r;
    }
    return radii;
}

/// Drops radii that cannot see past the center node of the scanned factor(s);
/// used for nodal-data verification where sub-spacing radii are vacuous.
inline std::vector<double> floor_schedule_to_grid(std::span<const double> radii,
                                                  const ProductGrid& grid, DeficiencyMode mode) {
    double floor = detail::relevant_max_gap(grid, mode);
    std::vector<double> kept;
    for (double r : radii)
        if (r > floor) kept.push_back(r);
    return kept;
}

struct RefinementRow {
    int level = 0;
    std::size_t factor = 1;
    std::size_t node_count = 0;
    // node-ball deficiencies of the resampled function at radius alpha
    double lsc_first = 0.0, usc_first = 0.0;
    double lsc_second = 0.0, usc_second = 0.0;
    // change of the sup envelope at the shared coarse nodes vs the previous
    // level; the minimum is >= 0 because refinement only adds candidates
    double envelope_min_delta = 0.0, envelope_max_delta = 0.0;
};

/// Re-samples a catalog function on refine(base, 2^level) for level
/// 0..levels-1 and reports how the deficiencies and the sup envelope at the
/// shared coarse nodes stabilize under refinement.
inline std::vector<RefinementRow> refinement_study(std::string_view name,
                                                   const ProductGrid& base, MetricSpec metric,
                                                   int levels, double alpha) {
    if (levels < 1) fail(ErrorKind::InvalidArgument, "refinement study needs at least 1 level");
    auto fn = find_catalog(name);
    if (!fn) fail(ErrorKind::UnknownName, "unknown catalog name '" + std::string(name) + "'");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        fail(ErrorKind::InvalidArgument, "alpha must be positive and finite");

    std::vector<RefinementRow> rows;
    rows.reserve(static_cast<std::size_t>(levels));
    std::vector<double> prev_env;
    for (int level = 0; level < levels; ++level) {
        std::size_t factor = std::size_t{1} << level;
        ProductGrid grid = refine(base, factor);
        SampledFunction f = sample(*fn, grid, metric);

        double r[1] = {alpha};
        DeficiencyProfile p1 = detail::measure_on(f, DeficiencyMode::SeparateFirst, r, nullptr,
                                                  false);
        DeficiencyProfile p2 = detail::measure_on(f, DeficiencyMode::SeparateSecond, r, nullptr,
                                                  false);

        SampledFunction env = ball_sup_second(f, alpha).output;
        std::vector<std::size_t> pf(base.axis_count(), factor);
        detail::ProbeMap map = detail::make_probe_map(base, grid, pf);
        std::vector<double> env_at_coarse(map.fine_flat.size());
        for (std::size_t i = 0; i < map.fine_flat.size(); ++i)
            env_at_coarse[i] = env.value(map.fine_flat[i]);

        RefinementRow row;
        row.level = level;
        row.factor = factor;
        row.node_count = grid.node_count();
        row.lsc_first = p1.rows[0].lsc_deficiency;
        row.usc_first = p1.rows[0].usc_deficiency;
        row.lsc_second = p2.rows[0].lsc_deficiency;
        row.usc_second = p2.rows[0].usc_deficiency;
        if (!prev_env.empty()) {
            double mn = env_at_coarse[0] - prev_env[0];
            double mx = mn;
            for (std::size_t i = 1; i < env_at_coarse.size(); ++i) {
                double d = env_at_coarse[i] - prev_env[i];
                mn = std::min(mn, d);
                mx = std::max(mx, d);
            }
            row.envelope_min_delta = mn;
            row.envelope_max_delta = mx;
        }
        rows.push_back(row);
        prev_env = std::move(env_at_coarse);
    }
    return rows;
}

} // namespace envkit
