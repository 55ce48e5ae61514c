#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "envkit/common.hpp"
#include "envkit/error.hpp"

namespace envkit {

enum class Metric { Linf, L2 };

/// Which factor of the product domain an operation scans over.
enum class Variable { First, Second };

struct MetricSpec {
    Metric x = Metric::Linf;
    Metric y = Metric::Linf;

    friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

inline const char* to_string(Metric m) { return m == Metric::Linf ? "linf" : "l2"; }

inline Metric metric_from_string(const std::string& s) {
    if (s == "linf") return Metric::Linf;
    if (s == "l2") return Metric::L2;
    fail(ErrorKind::Schema, "unknown metric '" + s + "' (expected linf or l2)");
}

/// Distance between two coordinate tuples of one factor.
inline double metric_distance(Metric m, std::span<const double> a, std::span<const double> b) {
    if (m == Metric::Linf) {
        double d = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
        return d;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double t = a[k] - b[k];
        s += t * t;
    }
    return std::sqrt(s);
}

inline double metric_norm(Metric m, std::span<const double> a) {
    if (m == Metric::Linf) {
        double d = 0.0;
        for (double v : a) d = std::max(d, std::abs(v));
        return d;
    }
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

/// One sampling axis: finite, strictly increasing coordinates, length >= 2.
/// `uniform()` reports whether the spacing is constant within relative
/// tolerance 1e-12; the separable kernel requires it.
class AxisGrid {
public:
    explicit AxisGrid(std::vector<double> coords) : coords_(std::move(coords)) {
        if (coords_.size() < 2)
            fail(ErrorKind::Schema, "axis needs at least 2 coordinates, got " +
                                        std::to_string(coords_.size()));
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            if (!std::isfinite(coords_[i]))
                fail(ErrorKind::Schema,
                     "non-finite coordinate at axis index " + std::to_string(i));
            if (i > 0 && !(coords_[i] > coords_[i - 1]))
                fail(ErrorKind::Schema,
                     "coordinates not strictly increasing at axis index " + std::to_string(i));
        }
        double hmin = coords_[1] - coords_[0];
        double hmax = hmin;
        for (std::size_t i = 2; i < coords_.size(); ++i) {
            double h = coords_[i] - coords_[i - 1];
            hmin = std::min(hmin, h);
            hmax = std::max(hmax, h);
        }
        max_gap_ = hmax;
        uniform_ = (hmax - hmin) <= 1e-12 * hmax;
    }

    const std::vector<double>& coords() const { return coords_; }
    std::size_t size() const { return coords_.size(); }
    double front() const { return coords_.front(); }
    double back() const { return coords_.back(); }
    double extent() const { return coords_.back() - coords_.front(); }
    double max_gap() const { return max_gap_; }
    bool uniform() const { return uniform_; }

    friend bool operator==(const AxisGrid& a, const AxisGrid& b) {
        return a.coords_ == b.coords_;
    }

private:
    std::vector<double> coords_;
    double max_gap_ = 0.0;
    bool uniform_ = false;
};

/// n equispaced nodes covering [a, b] inclusive.
inline AxisGrid linspace_axis(double a, double b, std::size_t n) {
    if (n < 2) fail(ErrorKind::InvalidArgument, "linspace needs at least 2 nodes");
    if (!(std::isfinite(a) && std::isfinite(b) && a < b))
        fail(ErrorKind::InvalidArgument, "linspace needs finite bounds with a < b");
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i)
        c[i] = a + (b - a) * (static_cast<double>(i) / static_cast<double>(n - 1));
    c.front() = a;
    c.back() = b;
    return AxisGrid(std::move(c));
}

/// Product sampling domain X x Y. Node storage order is row-major with the
/// x axes outermost and the y axes innermost.
class ProductGrid {
public:
    ProductGrid(std::vector<AxisGrid> x_axes, std::vector<AxisGrid> y_axes)
        : x_axes_(std::move(x_axes)), y_axes_(std::move(y_axes)) {
        if (x_axes_.empty() || y_axes_.empty())
            fail(ErrorKind::Schema, "each factor needs at least one axis");
        x_count_ = 1;
        for (const auto& a : x_axes_) x_count_ = checked_mul(x_count_, a.size(), "node count");
        y_count_ = 1;
        for (const auto& a : y_axes_) y_count_ = checked_mul(y_count_, a.size(), "node count");
        node_count_ = checked_mul(x_count_, y_count_, "node count");

        sizes_.reserve(axis_count());
        for (const auto& a : x_axes_) sizes_.push_back(a.size());
        for (const auto& a : y_axes_) sizes_.push_back(a.size());
        strides_.assign(sizes_.size(), 1);
        for (std::size_t k = sizes_.size(); k-- > 1;)
            strides_[k - 1] = strides_[k] * sizes_[k];
    }

    std::size_t dx() const { return x_axes_.size(); }
    std::size_t dy() const { return y_axes_.size(); }
    std::size_t axis_count() const { return dx() + dy(); }

    std::span<const AxisGrid> x_axes() const { return x_axes_; }
    std::span<const AxisGrid> y_axes() const { return y_axes_; }
    std::span<const AxisGrid> factor_axes(Variable v) const {
        return v == Variable::First ? x_axes() : y_axes();
    }

    /// Unified axis view: x axes first, then y axes.
    const AxisGrid& axis(std::size_t k) const {
        return k < dx() ? x_axes_[k] : y_axes_[k - dx()];
    }

    std::size_t node_count() const { return node_count_; }
    std::size_t x_count() const { return x_count_; }
    std::size_t y_count() const { return y_count_; }
    std::size_t factor_count(Variable v) const {
        return v == Variable::First ? x_count_ : y_count_;
    }

    const std::vector<std::size_t>& sizes() const { return sizes_; }
    const std::vector<std::size_t>& strides() const { return strides_; }

    std::vector<std::size_t> to_multi(std::size_t flat) const {
        std::vector<std::size_t> idx(axis_count());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            idx[k] = flat / strides_[k];
            flat %= strides_[k];
        }
        return idx;
    }

    std::size_t to_flat(std::span<const std::size_t> multi) const {
        std::size_t flat = 0;
        for (std::size_t k = 0; k < multi.size(); ++k) flat += multi[k] * strides_[k];
        return flat;
    }

    /// Fills `out` (length dx+dy) with the coordinates of node `flat`.
    void node_point(std::size_t flat, std::span<double> out) const {
        for (std::size_t k = 0; k < axis_count(); ++k) {
            std::size_t i = flat / strides_[k];
            flat %= strides_[k];
            out[k] = axis(k).coords()[i];
        }
    }

    bool same_coords(const ProductGrid& other) const {
        return x_axes_ == other.x_axes_ && y_axes_ == other.y_axes_;
    }

private:
    std::vector<AxisGrid> x_axes_, y_axes_;
    std::vector<std::size_t> sizes_, strides_;
    std::size_t node_count_ = 0, x_count_ = 0, y_count_ = 0;
};

/// "(i,j,...)" label of a node, used in diagnostics.
inline std::string node_label(const ProductGrid& grid, std::size_t flat) {
    auto multi = grid.to_multi(flat);
    std::string s = "(";
    for (std::size_t k = 0; k < multi.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(multi[k]);
    }
    s += ")";
    return s;
}

/// Splits every cell into `factor` subcells. Original coordinates are
/// preserved exactly, and refine(a, m) nodes are a subset of refine(a, 2m)
/// nodes (the interior offsets j/m are evaluated identically).
inline AxisGrid refine(const AxisGrid& axis, std::size_t factor) {
    if (factor == 0) fail(ErrorKind::InvalidArgument, "refine factor must be >= 1");
    if (factor == 1) return axis;
    const auto& c = axis.coords();
    std::size_t n = checked_mul(c.size() - 1, factor, "refined axis length") + 1;
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        out.push_back(c[i]);
        double w = c[i + 1] - c[i];
        for (std::size_t j = 1; j < factor; ++j)
            out.push_back(c[i] + w * (static_cast<double>(j) / static_cast<double>(factor)));
    }
    out.push_back(c.back());
    return AxisGrid(std::move(out));
}

inline ProductGrid refine(const ProductGrid& grid, std::size_t factor) {
    std::vector<AxisGrid> xa, ya;
    xa.reserve(grid.dx());
    ya.reserve(grid.dy());
    for (const auto& a : grid.x_axes()) xa.push_back(refine(a, factor));
    for (const auto& a : grid.y_axes()) ya.push_back(refine(a, factor));
    return ProductGrid(std::move(xa), std::move(ya));
}

/// Refines only the axes of one factor; the other factor keeps its sampling.
inline ProductGrid refine_variable(const ProductGrid& grid, Variable var, std::size_t factor) {
    std::vector<AxisGrid> xa, ya;
    for (const auto& a : grid.x_axes())
        xa.push_back(var == Variable::First ? refine(a, factor) : a);
    for (const auto& a : grid.y_axes())
        ya.push_back(var == Variable::Second ? refine(a, factor) : a);
    return ProductGrid(std::move(xa), std::move(ya));
}

} // namespace envkit
