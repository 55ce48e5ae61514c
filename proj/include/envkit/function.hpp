#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "envkit/grid.hpp"

namespace envkit {

/// Dense sampling of a real-valued function on a ProductGrid. Values are
/// stored row-major (x axes outermost, y axes innermost) and must all be
/// finite. Immutable after construction.
class SampledFunction {
public:
    SampledFunction(ProductGrid grid, MetricSpec metric, std::vector<double> values,
                    std::string name = "")
        : grid_(std::move(grid)), metric_(metric), values_(std::move(values)),
          name_(std::move(name)) {
        if (values_.size() != grid_.node_count())
            fail(ErrorKind::Schema,
                 "values length " + std::to_string(values_.size()) +
                     " does not match node count " + std::to_string(grid_.node_count()));
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                fail(ErrorKind::Schema, "non-finite value at node " + node_label(grid_, i));
    }

    const ProductGrid& grid() const { return grid_; }
    MetricSpec metric() const { return metric_; }
    std::span<const double> values() const { return values_; }
    double value(std::size_t flat) const { return values_[flat]; }
    const std::string& name() const { return name_; }

    SampledFunction with_name(std::string name) const {
        return SampledFunction(grid_, metric_, values_, std::move(name));
    }

    /// Multilinear interpolation; exact at grid nodes. The point must lie in
    /// the grid's bounding box (coordinates ordered x axes then y axes).
    double eval_at(std::span<const double> point) const {
        const std::size_t d = grid_.axis_count();
        if (point.size() != d)
            fail(ErrorKind::InvalidArgument,
                 "point has " + std::to_string(point.size()) + " coordinates, grid has " +
                     std::to_string(d) + " axes");
        std::vector<std::size_t> cell(d);
        std::vector<double> t(d);
        for (std::size_t k = 0; k < d; ++k) {
            const auto& c = grid_.axis(k).coords();
            double p = point[k];
            if (!(p >= c.front() && p <= c.back()))
                fail(ErrorKind::InvalidArgument,
                     "point outside bounding box on axis " + std::to_string(k) + ": " +
                         format_double(p) + " not in [" + format_double(c.front()) + ", " +
                         format_double(c.back()) + "]");
            auto it = std::upper_bound(c.begin(), c.end(), p);
            std::size_t i = static_cast<std::size_t>(it - c.begin());
            i = i == 0 ? 0 : i - 1;
            if (i > c.size() - 2) i = c.size() - 2;
            cell[k] = i;
            t[k] = (p - c[i]) / (c[i + 1] - c[i]);
        }
        const auto& strides = grid_.strides();
        double acc = 0.0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
            double w = 1.0;
            std::size_t flat = 0;
            for (std::size_t k = 0; k < d; ++k) {
                bool hi = (mask >> k) & 1u;
                w *= hi ? t[k] : 1.0 - t[k];
                flat += (cell[k] + (hi ? 1 : 0)) * strides[k];
            }
            if (w != 0.0) acc += w * values_[flat];
        }
        return acc;
    }

private:
    ProductGrid grid_;
    MetricSpec metric_;
    std::vector<double> values_;
    std::string name_;
};

/// Same sampling domain: identical axis coordinates and metric spec.
inline bool same_layout(const SampledFunction& a, const SampledFunction& b) {
    return a.metric() == b.metric() && a.grid().same_coords(b.grid());
}

inline SampledFunction negated(const SampledFunction& f) {
    std::vector<double> v(f.values().begin(), f.values().end());
    for (double& x : v) x = -x;
    return SampledFunction(f.grid(), f.metric(), std::move(v),
                           f.name().empty() ? "" : "neg(" + f.name() + ")");
}

/// Replacement values on the same grid/metric.
inline SampledFunction with_values(const SampledFunction& like, std::vector<double> values,
                                   std::string name) {
    return SampledFunction(like.grid(), like.metric(), std::move(values), std::move(name));
}

} // namespace envkit
