#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "envkit/envelope.hpp"
#include "envkit/function.hpp"

namespace envkit {

/// One stage of the approximation: radius alpha = rho / n, lower envelope
/// (inf over first-factor balls), upper envelope (sup over second-factor
/// balls), and the continuous midpoint inserted between them.
struct EnvelopeStep {
    int n = 0;
    double alpha = 0.0;
    SampledFunction lower, upper, inserted;
};

struct EnvelopeSequence {
    SampledFunction base;
    double rho = 0.0;
    std::vector<EnvelopeStep> steps;
};

/// Default radius scale: half the largest axis extent.
inline double default_radius_scale(const ProductGrid& grid) {
    double e = 0.0;
    for (std::size_t k = 0; k < grid.axis_count(); ++k) e = std::max(e, grid.axis(k).extent());
    return e / 2.0;
}

/// Pointwise midpoint of a verified lower <= upper pair. The result is
/// sandwiched between its inputs node by node (the float midpoint of
/// a <= b stays in [a, b]), and is continuous under eval_at's multilinear
/// interpolation like every sampled function.
inline SampledFunction hahn_insert(const SampledFunction& lower, const SampledFunction& upper) {
    if (!same_layout(lower, upper))
        fail(ErrorKind::InvalidArgument, "insertion inputs live on different grids or metrics");
    auto lv = lower.values();
    auto uv = upper.values();
    std::vector<double> mid(lv.size());
    for (std::size_t i = 0; i < lv.size(); ++i) {
        if (lv[i] > uv[i])
            fail(ErrorKind::Sandwich, "sandwich violated at node " +
                                          node_label(lower.grid(), i) + ": lower=" +
                                          format_double(lv[i]) + " > upper=" +
                                          format_double(uv[i]));
        mid[i] = (lv[i] + uv[i]) / 2.0;
    }
    std::string name = "mid(" + (lower.name().empty() ? "a" : lower.name()) + "," +
                       (upper.name().empty() ? "b" : upper.name()) + ")";
    return SampledFunction(lower.grid(), lower.metric(), std::move(mid), std::move(name));
}

/// Clamp to [-level, level]: keeps f where |f| <= level, saturates otherwise.
inline SampledFunction truncate(const SampledFunction& f, double level) {
    if (!(level > 0.0) || !std::isfinite(level))
        fail(ErrorKind::InvalidArgument,
             "truncation level must be positive and finite, got " + format_double(level));
    std::vector<double> v(f.values().begin(), f.values().end());
    for (double& x : v) x = std::clamp(x, -level, level);
    return SampledFunction(f.grid(), f.metric(), std::move(v),
                           "clamp(" + (f.name().empty() ? "f" : f.name()) + "," +
                               format_double(level) + ")");
}

/// Builds the monotone envelope bracket for n = 1..steps with radius rho/n.
/// Shrinking balls give lower_n nondecreasing and upper_n nonincreasing in n,
/// with lower_n <= f <= upper_n at every node, all exact.
inline EnvelopeSequence envelope_sequence(const SampledFunction& f, int steps, double rho) {
    if (steps < 1) fail(ErrorKind::InvalidArgument, "sequence needs at least 1 step");
    if (!(rho > 0.0) || !std::isfinite(rho))
        fail(ErrorKind::InvalidArgument,
             "radius scale rho must be positive and finite, got " + format_double(rho));
    EnvelopeSequence seq{f, rho, {}};
    seq.steps.reserve(static_cast<std::size_t>(steps));
    for (int n = 1; n <= steps; ++n) {
        double alpha = rho / static_cast<double>(n);
        SampledFunction lower = ball_inf_first(f, alpha).output;
        SampledFunction upper = ball_sup_second(f, alpha).output;
        SampledFunction inserted = hahn_insert(lower, upper);
        seq.steps.push_back(
            EnvelopeStep{n, alpha, std::move(lower), std::move(upper), std::move(inserted)});
    }
    return seq;
}

/// Stage k = 1..stages clamps f to [-k, k] and rebuilds the envelope
/// sequence of the clamped function. Once k reaches max|f| on the grid the
/// clamp is inactive and the stages repeat verbatim.
inline std::vector<EnvelopeSequence> truncated_sequence(const SampledFunction& f, int stages,
                                                        double rho) {
    if (stages < 1) fail(ErrorKind::InvalidArgument, "truncated sequence needs at least 1 stage");
    std::vector<EnvelopeSequence> out;
    out.reserve(static_cast<std::size_t>(stages));
    for (int k = 1; k <= stages; ++k)
        out.push_back(envelope_sequence(truncate(f, static_cast<double>(k)), stages, rho));
    return out;
}

/// Largest |value difference| / |coordinate difference| over all pairs of
/// grid-adjacent nodes; a discrete Lipschitz estimate.
inline double nodal_lipschitz(const SampledFunction& f) {
    const ProductGrid& g = f.grid();
    const auto& sizes = g.sizes();
    const auto& strides = g.strides();
    auto v = f.values();
    double best = 0.0;
    for (std::size_t k = 0; k < g.axis_count(); ++k) {
        const auto& c = g.axis(k).coords();
        const std::size_t st = strides[k];
        detail::for_each_line(sizes, strides, k, [&](std::size_t base) {
            for (std::size_t i = 0; i + 1 < sizes[k]; ++i) {
                double dv = std::abs(v[base + (i + 1) * st] - v[base + i * st]);
                best = std::max(best, dv / (c[i + 1] - c[i]));
            }
        });
    }
    return best;
}

struct ConvergenceRow {
    int n = 0;
    double alpha = 0.0;
    double max_gap = 0.0;
    double mean_gap = 0.0;
    double insertion_lipschitz = 0.0;
};

/// Gap statistics per step plus the final step's per-node gaps, classified
/// against the tolerance.
struct ConvergenceReport {
    double tol = 0.0;
    std::vector<ConvergenceRow> per_n;
    std::vector<double> per_node_gap;     // upper - lower at the final step
    std::vector<unsigned char> converged; // per node: gap <= tol
    std::size_t converged_count = 0;
    std::size_t open_count = 0;
};

inline ConvergenceReport convergence_report(const EnvelopeSequence& seq, double tol) {
    if (!(tol > 0.0) || !std::isfinite(tol))
        fail(ErrorKind::InvalidArgument,
             "tolerance must be positive and finite, got " + format_double(tol));
    if (seq.steps.empty()) fail(ErrorKind::InvalidArgument, "sequence has no steps");
    ConvergenceReport rep;
    rep.tol = tol;
    rep.per_n.reserve(seq.steps.size());
    for (const auto& step : seq.steps) {
        auto lv = step.lower.values();
        auto uv = step.upper.values();
        double mx = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < lv.size(); ++i) {
            double gap = uv[i] - lv[i];
            mx = std::max(mx, gap);
            sum += gap;
        }
        rep.per_n.push_back(ConvergenceRow{step.n, step.alpha, mx,
                                           sum / static_cast<double>(lv.size()),
                                           nodal_lipschitz(step.inserted)});
    }
    const auto& last = seq.steps.back();
    auto lv = last.lower.values();
    auto uv = last.upper.values();
    rep.per_node_gap.resize(lv.size());
    rep.converged.resize(lv.size());
    for (std::size_t i = 0; i < lv.size(); ++i) {
        rep.per_node_gap[i] = uv[i] - lv[i];
        bool ok = rep.per_node_gap[i] <= tol;
        rep.converged[i] = ok ? 1 : 0;
        if (ok)
            ++rep.converged_count;
        else
            ++rep.open_count;
    }
    return rep;
}

} // namespace envkit
