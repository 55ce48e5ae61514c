#pragma once

// Brute-force reference implementations and random-instance generators for
// the test suite. The oracles share nothing with the library's kernels: no
// windows, no strides tricks, no deques — every target node scans its whole
// factor block and applies the membership contract directly:
//
//   candidate is in the neighborhood of the center iff the canonical float
//   distance (per-axis differences candidate - center, ascending axis order,
//   squares summed left to right) is strictly below the radius.
//
// Ties keep the value of the smallest candidate index (keep-first reduce),
// which is the library's pinned tie policy.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "envkit/catalog.hpp"
#include "envkit/envelope.hpp"
#include "envkit/function.hpp"
#include "envkit/grid.hpp"
#include "envkit/structuring.hpp"

namespace oracle {

using namespace envkit;

inline double pick(Bound b, double acc, double v) {
    if (b == Bound::Sup) return v > acc ? v : acc;
    return v < acc ? v : acc;
}

/// Coordinate tuples of one factor in ascending factor-flat order.
inline std::vector<std::vector<double>> factor_points(const ProductGrid& g, Variable var) {
    auto axes = g.factor_axes(var);
    std::vector<std::size_t> sizes;
    for (const auto& a : axes) sizes.push_back(a.size());
    std::vector<std::vector<double>> pts;
    envkit::detail::for_each_multi(sizes, [&](std::span<const std::size_t> idx) {
        std::vector<double> p(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) p[k] = axes[k].coords()[idx[k]];
        pts.push_back(std::move(p));
    });
    return pts;
}

inline bool in_ball(Metric m, std::span<const double> cand, std::span<const double> center,
                    double radius) {
    return metric_distance(m, cand, center) < radius;
}

/// Exhaustive per-node ball scan.
inline std::vector<double> ball_envelope(const SampledFunction& f, Variable var, Bound bound,
                                         double radius) {
    const ProductGrid& g = f.grid();
    const Metric m = var == Variable::First ? f.metric().x : f.metric().y;
    const auto pts = factor_points(g, var);
    const std::size_t xc = g.x_count(), yc = g.y_count();
    const double* v = f.values().data();
    std::vector<double> out(g.node_count());

    if (var == Variable::Second) {
        for (std::size_t xb = 0; xb < xc; ++xb)
            for (std::size_t ty = 0; ty < yc; ++ty) {
                bool first = true;
                double acc = 0.0;
                for (std::size_t cy = 0; cy < yc; ++cy) {
                    if (!in_ball(m, pts[cy], pts[ty], radius)) continue;
                    acc = first ? v[xb * yc + cy] : pick(bound, acc, v[xb * yc + cy]);
                    first = false;
                }
                out[xb * yc + ty] = acc;
            }
    } else {
        for (std::size_t tx = 0; tx < xc; ++tx)
            for (std::size_t y = 0; y < yc; ++y) {
                bool first = true;
                double acc = 0.0;
                for (std::size_t cx = 0; cx < xc; ++cx) {
                    if (!in_ball(m, pts[cx], pts[tx], radius)) continue;
                    acc = first ? v[cx * yc + y] : pick(bound, acc, v[cx * yc + y]);
                    first = false;
                }
                out[tx * yc + y] = acc;
            }
    }
    return out;
}

inline bool in_structuring(const StructuringSet& w0, std::span<const double> cand,
                           std::span<const double> center) {
    switch (w0.kind()) {
    case StructuringSet::Kind::Box: {
        for (std::size_t k = 0; k < cand.size(); ++k)
            if (!(std::abs(cand[k] - center[k]) < w0.radii()[k])) return false;
        return true;
    }
    case StructuringSet::Kind::Ellipsoid: {
        double s = 0.0;
        for (std::size_t k = 0; k < cand.size(); ++k) {
            double q = (cand[k] - center[k]) / w0.radii()[k];
            s += q * q;
        }
        return s < 1.0;
    }
    case StructuringSet::Kind::Offsets: {
        for (const auto& disp : w0.offsets()) {
            bool hit = true;
            for (std::size_t k = 0; k < cand.size(); ++k)
                if (cand[k] != center[k] + disp[k]) { hit = false; break; }
            if (hit) return true;
        }
        return false;
    }
    }
    return false;
}

/// Exhaustive structuring-set envelope over the second factor.
inline std::vector<double> structuring_envelope_second(const SampledFunction& f,
                                                       const StructuringSet& w0, Bound bound) {
    const ProductGrid& g = f.grid();
    const auto pts = factor_points(g, Variable::Second);
    const std::size_t xc = g.x_count(), yc = g.y_count();
    const double* v = f.values().data();
    std::vector<double> out(g.node_count());
    for (std::size_t xb = 0; xb < xc; ++xb)
        for (std::size_t ty = 0; ty < yc; ++ty) {
            bool first = true;
            double acc = 0.0;
            for (std::size_t cy = 0; cy < yc; ++cy) {
                if (!in_structuring(w0, pts[cy], pts[ty])) continue;
                acc = first ? v[xb * yc + cy] : pick(bound, acc, v[xb * yc + cy]);
                first = false;
            }
            out[xb * yc + ty] = acc;
        }
    return out;
}

/// Quadratic reference for the 1-D sliding extremum.
inline std::vector<double> sliding(std::span<const double> values, std::span<const double> coords,
                                   double radius, Bound bound) {
    const std::size_t n = values.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool first = true;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(std::abs(coords[j] - coords[i]) < radius)) continue;
            acc = first ? values[j] : pick(bound, acc, values[j]);
            first = false;
        }
        out[i] = acc;
    }
    return out;
}

// ---- random instance generation --------------------------------------------

inline double uniform(std::mt19937& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

inline std::size_t below(std::mt19937& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline bool chance(std::mt19937& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

/// Random axis: uniform (linspace) or non-uniform (random gaps), sometimes
/// snapped to multiples of 1/8 so exact boundary collisions actually happen.
inline AxisGrid random_axis(std::mt19937& rng, std::size_t n) {
    double a = uniform(rng, -3.0, 3.0);
    if (chance(rng, 0.5)) {
        double len = uniform(rng, 0.5, 4.0);
        if (chance(rng, 0.5)) {
            a = std::round(a * 8.0) / 8.0;
            len = std::max(0.5, std::round(len * 8.0) / 8.0);
        }
        return linspace_axis(a, a + len, n);
    }
    std::vector<double> c(n);
    bool snap = chance(rng, 0.5);
    c[0] = snap ? std::round(a * 8.0) / 8.0 : a;
    for (std::size_t i = 1; i < n; ++i) {
        double gap = uniform(rng, 0.01, 0.6);
        if (snap) gap = (1.0 + static_cast<double>(below(rng, 5))) / 8.0;
        c[i] = c[i - 1] + gap;
    }
    return AxisGrid(std::move(c));
}

/// Axis sizes for one factor with product <= limit.
inline std::vector<std::size_t> random_factor_sizes(std::mt19937& rng, std::size_t limit) {
    std::size_t dim = 1 + below(rng, 2);
    std::vector<std::size_t> sizes(dim);
    if (dim == 1) {
        sizes[0] = 2 + below(rng, limit - 1);
    } else {
        for (auto& s : sizes) s = 2 + below(rng, 7); // up to 8 x 8 = 64
    }
    return sizes;
}

inline ProductGrid random_grid(std::mt19937& rng, std::size_t factor_limit = 64) {
    auto make = [&] {
        std::vector<AxisGrid> axes;
        for (std::size_t s : random_factor_sizes(rng, factor_limit))
            axes.push_back(random_axis(rng, s));
        return axes;
    };
    return ProductGrid(make(), make());
}

/// Random values with deliberate exact ties and signed zeros.
inline std::vector<double> random_values(std::mt19937& rng, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && chance(rng, 0.2)) {
            v[i] = v[below(rng, i)];
        } else if (chance(rng, 0.05)) {
            v[i] = chance(rng, 0.5) ? 0.0 : -0.0;
        } else {
            v[i] = uniform(rng, -4.0, 4.0);
        }
    }
    return v;
}

inline MetricSpec random_metric(std::mt19937& rng) {
    return MetricSpec{chance(rng, 0.5) ? Metric::Linf : Metric::L2,
                      chance(rng, 0.5) ? Metric::Linf : Metric::L2};
}

/// Random radius; sometimes an exact coordinate difference of the scanned
/// factor, to stress the open-ball boundary.
inline double random_radius(std::mt19937& rng, const ProductGrid& g, Variable var) {
    auto axes = g.factor_axes(var);
    if (chance(rng, 0.3)) {
        const auto& c = axes[below(rng, axes.size())].coords();
        std::size_t i = below(rng, c.size());
        std::size_t j = below(rng, c.size());
        if (i != j) {
            double d = std::abs(c[j] - c[i]);
            if (d > 0.0) return d;
        }
    }
    double ext = 0.0;
    for (const auto& a : axes) ext = std::max(ext, a.extent());
    return uniform(rng, 0.05, 1.5 * ext);
}

inline SampledFunction random_function(std::mt19937& rng, std::size_t factor_limit = 64) {
    ProductGrid g = random_grid(rng, factor_limit);
    std::vector<double> v = random_values(rng, g.node_count());
    return SampledFunction(std::move(g), random_metric(rng), std::move(v));
}

} // namespace oracle
