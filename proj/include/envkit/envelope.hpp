#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "envkit/function.hpp"
#include "envkit/sliding.hpp"
#include "envkit/structuring.hpp"

namespace envkit {

enum class Kernel { Naive, Separable };
enum class KernelChoice { Auto, Naive, Separable };

struct EnvelopeParams {
    Variable variable;
    Bound bound;
    double radius; // ball radius; bounding radius for structuring sets
};

struct EnvelopeResult {
    SampledFunction output; // same grid and metric as the input
    EnvelopeParams params;
    Kernel kernel;
};

inline const char* to_string(Kernel k) { return k == Kernel::Naive ? "naive" : "separable"; }
inline const char* to_string(Bound b) { return b == Bound::Sup ? "sup" : "inf"; }
inline const char* to_string(Variable v) { return v == Variable::First ? "first" : "second"; }

namespace detail {

inline double reduce(Bound b, double acc, double v) {
    if (b == Bound::Sup) return v > acc ? v : acc;
    return v < acc ? v : acc;
}

/// Inclusive index range of the open window {j : |c_j - c_i| < radius} for
/// every index i of one axis, found by two monotone sweeps that use the same
/// coordinate-difference comparisons as a per-pair distance test.
struct AxisWindows {
    std::vector<std::size_t> lo, hi;
};

inline AxisWindows axis_windows(const AxisGrid& axis, double radius) {
    const auto& c = axis.coords();
    const std::size_t n = c.size();
    AxisWindows w;
    w.lo.resize(n);
    w.hi.resize(n);
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (c[i] - c[lo] >= radius) ++lo;
        if (hi < i) hi = i;
        while (hi + 1 < n && c[hi + 1] - c[i] < radius) ++hi;
        w.lo[i] = lo;
        w.hi[i] = hi;
    }
    return w;
}

/// Open neighborhood in one factor: either a metric ball of given radius or
/// a Box/Ellipsoid structuring set. Per-axis windows bound the candidate box;
/// `needs_test` says whether box membership alone decides inclusion.
struct Neighborhood {
    bool ball = true;
    Metric metric = Metric::Linf;
    double radius = 0.0;
    const StructuringSet* set = nullptr;

    double axis_radius(std::size_t k) const { return ball ? radius : set->radii()[k]; }

    bool needs_test(std::size_t dim) const {
        if (ball) return metric == Metric::L2 && dim >= 2;
        return set->kind() == StructuringSet::Kind::Ellipsoid;
    }

    bool inside(std::span<const AxisGrid> axes, std::span<const std::size_t> center,
                std::span<const std::size_t> cand) const {
        double s = 0.0;
        if (ball) { // L2 ball
            for (std::size_t k = 0; k < axes.size(); ++k) {
                double d = axes[k].coords()[cand[k]] - axes[k].coords()[center[k]];
                s += d * d;
            }
            return std::sqrt(s) < radius;
        }
        for (std::size_t k = 0; k < axes.size(); ++k) { // ellipsoid
            double d = (axes[k].coords()[cand[k]] - axes[k].coords()[center[k]]) /
                       set->radii()[k];
            s += d * d;
        }
        return s < 1.0;
    }
};

/// Exhaustive per-node reduction over the neighborhood, restricted to the
/// per-axis candidate box. Candidates are visited in ascending factor order,
/// so ties keep the value of the smallest node index.
inline std::vector<double> naive_envelope(const SampledFunction& f, Variable var, Bound bound,
                                          const Neighborhood& nb) {
    const ProductGrid& g = f.grid();
    auto axes = g.factor_axes(var);
    const std::size_t dim = axes.size();

    std::vector<AxisWindows> win(dim);
    for (std::size_t k = 0; k < dim; ++k) win[k] = axis_windows(axes[k], nb.axis_radius(k));

    std::vector<std::size_t> fsizes(dim), fstrides(dim, 1);
    for (std::size_t k = 0; k < dim; ++k) fsizes[k] = axes[k].size();
    for (std::size_t k = dim; k-- > 1;) fstrides[k - 1] = fstrides[k] * fsizes[k];

    const bool test = nb.needs_test(dim);
    const double* v = f.values().data();
    std::vector<double> out(f.values().size());
    const std::size_t xc = g.x_count(), yc = g.y_count();
    std::vector<std::size_t> j(dim);

    auto for_each_candidate = [&](std::span<const std::size_t> target, auto&& fn) {
        for (std::size_t k = 0; k < dim; ++k) j[k] = win[k].lo[target[k]];
        for (;;) {
            if (!test || nb.inside(axes, target, j)) {
                std::size_t jf = 0;
                for (std::size_t k = 0; k < dim; ++k) jf += j[k] * fstrides[k];
                fn(jf);
            }
            bool done = true;
            for (std::size_t k = dim; k-- > 0;) {
                if (++j[k] <= win[k].hi[target[k]]) { done = false; break; }
                j[k] = win[k].lo[target[k]];
            }
            if (done) break;
        }
    };

    if (var == Variable::Second) {
        std::vector<std::size_t> cand;
        for_each_multi(fsizes, [&](std::span<const std::size_t> target) {
            std::size_t tf = 0;
            for (std::size_t k = 0; k < dim; ++k) tf += target[k] * fstrides[k];
            cand.clear();
            for_each_candidate(target, [&](std::size_t jf) { cand.push_back(jf); });
            for (std::size_t xb = 0; xb < xc; ++xb) {
                const double* in = v + xb * yc;
                double acc = in[cand[0]]; // center is always a member
                for (std::size_t i = 1; i < cand.size(); ++i)
                    acc = reduce(bound, acc, in[cand[i]]);
                out[xb * yc + tf] = acc;
            }
        });
    } else {
        for_each_multi(fsizes, [&](std::span<const std::size_t> target) {
            std::size_t tf = 0;
            for (std::size_t k = 0; k < dim; ++k) tf += target[k] * fstrides[k];
            double* orow = out.data() + tf * yc;
            bool first = true;
            for_each_candidate(target, [&](std::size_t jf) {
                const double* irow = v + jf * yc;
                if (first) {
                    std::copy(irow, irow + yc, orow);
                    first = false;
                } else {
                    for (std::size_t q = 0; q < yc; ++q)
                        orow[q] = reduce(bound, orow[q], irow[q]);
                }
            });
        });
    }
    return out;
}

/// One sliding pass per factor axis, innermost axis first so that value ties
/// resolve toward the smallest flat index exactly like the naive scan.
inline void separable_passes(const ProductGrid& g, Variable var, double radius, Bound bound,
                             std::vector<double>& vals) {
    const auto& sizes = g.sizes();
    const auto& strides = g.strides();
    const std::size_t off = var == Variable::First ? 0 : g.dx();
    const std::size_t dim = g.factor_axes(var).size();
    std::vector<double> line;
    for (std::size_t a = dim; a-- > 0;) {
        const std::size_t k = off + a;
        const AxisGrid& axis = g.axis(k);
        const std::size_t st = strides[k];
        const std::size_t len = sizes[k];
        line.resize(len);
        for_each_line(sizes, strides, k, [&](std::size_t base) {
            for (std::size_t i = 0; i < len; ++i) line[i] = vals[base + i * st];
            std::vector<double> res = sliding_extremum_axis(line, axis, radius, bound);
            for (std::size_t i = 0; i < len; ++i) vals[base + i * st] = res[i];
        });
    }
}

inline std::vector<double> offsets_envelope(const SampledFunction& f, const StructuringSet& w0,
                                            Bound bound) {
    const ProductGrid& g = f.grid();
    auto axes = g.y_axes();
    const std::size_t dim = axes.size();
    std::vector<std::size_t> fsizes(dim), fstrides(dim, 1);
    for (std::size_t k = 0; k < dim; ++k) fsizes[k] = axes[k].size();
    for (std::size_t k = dim; k-- > 1;) fstrides[k - 1] = fstrides[k] * fsizes[k];

    const double* v = f.values().data();
    std::vector<double> out(f.values().size());
    const std::size_t xc = g.x_count(), yc = g.y_count();
    std::vector<std::size_t> cand;

    for_each_multi(fsizes, [&](std::span<const std::size_t> target) {
        cand.clear();
        for (const auto& disp : w0.offsets()) {
            std::size_t jf = 0;
            bool hit = true;
            for (std::size_t k = 0; k < dim; ++k) {
                const auto& c = axes[k].coords();
                double tc = c[target[k]] + disp[k];
                auto it = std::lower_bound(c.begin(), c.end(), tc);
                if (it == c.end() || *it != tc) { hit = false; break; }
                jf += static_cast<std::size_t>(it - c.begin()) * fstrides[k];
            }
            if (hit) cand.push_back(jf);
        }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        std::size_t tf = 0;
        for (std::size_t k = 0; k < dim; ++k) tf += target[k] * fstrides[k];
        for (std::size_t xb = 0; xb < xc; ++xb) {
            const double* in = v + xb * yc;
            double acc = in[cand[0]]; // zero offset keeps the center in the set
            for (std::size_t i = 1; i < cand.size(); ++i) acc = reduce(bound, acc, in[cand[i]]);
            out[xb * yc + tf] = acc;
        }
    });
    return out;
}

} // namespace detail

/// The separable fast path applies iff every axis of the scanned factor is
/// uniform and the factor metric is linf (any metric works for a 1-axis
/// factor, where linf and l2 coincide).
inline bool separable_supported(const SampledFunction& f, Variable var) {
    auto axes = f.grid().factor_axes(var);
    Metric m = var == Variable::First ? f.metric().x : f.metric().y;
    if (!(m == Metric::Linf || axes.size() == 1)) return false;
    for (const auto& a : axes) {
        if (!a.uniform()) return false;
    }
    return true;
}

/// Extremum of f over the open metric ball of given radius in one factor,
/// node by node. Balls are intersected with the grid, and the center node is
/// always a member, so sup results dominate f and inf results are dominated
/// by f. Naive and separable kernels agree bit-for-bit whenever both apply.
inline EnvelopeResult ball_envelope(const SampledFunction& f, Variable var, Bound bound,
                                    double radius, KernelChoice choice = KernelChoice::Auto) {
    if (!(radius > 0.0) || !std::isfinite(radius))
        fail(ErrorKind::InvalidArgument,
             "envelope radius must be positive and finite, got " + format_double(radius));

    Kernel kernel = Kernel::Naive;
    switch (choice) {
    case KernelChoice::Auto:
        kernel = separable_supported(f, var) ? Kernel::Separable : Kernel::Naive;
        break;
    case KernelChoice::Naive:
        kernel = Kernel::Naive;
        break;
    case KernelChoice::Separable:
        if (!separable_supported(f, var)) {
            for (const auto& a : f.grid().factor_axes(var))
                if (!a.uniform())
                    fail(ErrorKind::NonUniformAxis,
                         "separable kernel requires uniform axes in the scanned factor");
            fail(ErrorKind::InvalidArgument,
                 "separable kernel requires the linf metric or a 1-axis factor");
        }
        kernel = Kernel::Separable;
        break;
    }

    std::vector<double> out;
    if (kernel == Kernel::Separable) {
        out.assign(f.values().begin(), f.values().end());
        detail::separable_passes(f.grid(), var, radius, bound, out);
    } else {
        detail::Neighborhood nb;
        nb.ball = true;
        nb.metric = var == Variable::First ? f.metric().x : f.metric().y;
        nb.radius = radius;
        out = detail::naive_envelope(f, var, bound, nb);
    }

    std::string tag = std::string(to_string(bound)) + (var == Variable::First ? "1" : "2");
    std::string name =
        tag + "(" + (f.name().empty() ? "f" : f.name()) + "," + format_double(radius) + ")";
    return EnvelopeResult{SampledFunction(f.grid(), f.metric(), std::move(out), std::move(name)),
                          EnvelopeParams{var, bound, radius}, kernel};
}

inline EnvelopeResult ball_sup_second(const SampledFunction& f, double radius,
                                      KernelChoice kc = KernelChoice::Auto) {
    return ball_envelope(f, Variable::Second, Bound::Sup, radius, kc);
}
inline EnvelopeResult ball_inf_second(const SampledFunction& f, double radius,
                                      KernelChoice kc = KernelChoice::Auto) {
    return ball_envelope(f, Variable::Second, Bound::Inf, radius, kc);
}
inline EnvelopeResult ball_sup_first(const SampledFunction& f, double radius,
                                     KernelChoice kc = KernelChoice::Auto) {
    return ball_envelope(f, Variable::First, Bound::Sup, radius, kc);
}
inline EnvelopeResult ball_inf_first(const SampledFunction& f, double radius,
                                     KernelChoice kc = KernelChoice::Auto) {
    return ball_envelope(f, Variable::First, Bound::Inf, radius, kc);
}

/// Sup of f over y + W0 (intersected with the grid) in the second factor.
/// With W0 = Box of equal half-widths r under linf this equals
/// ball_sup_second(f, r) exactly.
inline EnvelopeResult structuring_sup_second(const SampledFunction& f, const StructuringSet& w0) {
    const ProductGrid& g = f.grid();
    if (w0.dim() != g.dy())
        fail(ErrorKind::InvalidArgument,
             "structuring set dimension " + std::to_string(w0.dim()) +
                 " does not match y-factor axis count " + std::to_string(g.dy()));
    std::vector<double> out;
    if (w0.kind() == StructuringSet::Kind::Offsets) {
        out = detail::offsets_envelope(f, w0, Bound::Sup);
    } else {
        detail::Neighborhood nb;
        nb.ball = false;
        nb.set = &w0;
        out = detail::naive_envelope(f, Variable::Second, Bound::Sup, nb);
    }
    std::string name = "sup2w0(" + (f.name().empty() ? "f" : f.name()) + ")";
    return EnvelopeResult{SampledFunction(g, f.metric(), std::move(out), std::move(name)),
                          EnvelopeParams{Variable::Second, Bound::Sup,
                                         w0.bounding_radius(f.metric().y)},
                          Kernel::Naive};
}

/// Inf counterpart, implemented literally as negate-sup-negate; the duality
/// inf = -sup(-f) therefore holds exactly.
inline EnvelopeResult structuring_inf_second(const SampledFunction& f, const StructuringSet& w0) {
    EnvelopeResult sup = structuring_sup_second(negated(f), w0);
    std::vector<double> out(sup.output.values().begin(), sup.output.values().end());
    for (double& v : out) v = -v;
    std::string name = "inf2w0(" + (f.name().empty() ? "f" : f.name()) + ")";
    return EnvelopeResult{SampledFunction(f.grid(), f.metric(), std::move(out), std::move(name)),
                          EnvelopeParams{Variable::Second, Bound::Inf,
                                         w0.bounding_radius(f.metric().y)},
                          Kernel::Naive};
}

} // namespace envkit
