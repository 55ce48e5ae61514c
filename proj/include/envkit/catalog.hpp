#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "envkit/function.hpp"
#include "envkit/grid.hpp"

namespace envkit {

/// A closed-form test function on the product domain. `eval` receives the
/// x coordinates, the y coordinates, and the metric spec (only
/// unbounded_hyperbola uses the metric, for its factor norms).
struct CatalogFunction {
    std::string name; // canonical identifier, e.g. "constant(3)"
    std::function<double(std::span<const double>, std::span<const double>, const MetricSpec&)>
        eval;
};

inline std::vector<std::string> catalog_names() {
    return {"constant",  "affine",     "lipschitz_sine",      "step_lsc_x",
            "step_usc_y", "mixed_step", "unbounded_hyperbola"};
}

/// Parses a catalog identifier. "constant" accepts an optional parenthesised
/// value: "constant(3)"; plain "constant" means constant(1). Returns nullopt
/// for unknown names.
///
/// Formulas (x0/y0 are the first coordinates of each factor):
///   constant(c)          c
///   affine               0.5 + sum_i x_i/(i+1) - sum_j y_j/(j+2)
///   lipschitz_sine       sin(x0 - y0)            (Lipschitz constant 1 per factor)
///   step_lsc_x           1 if x0 > 0 else 0
///   step_usc_y           1 if y0 >= 0 else 0
///   mixed_step           [x0 > 0] - [y0 > 0]
///   unbounded_hyperbola  1 / (|x| + |y| + 0.1)   (factor norms per metric spec)
inline std::optional<CatalogFunction> find_catalog(std::string_view name) {
    using Spec = const MetricSpec&;
    if (name == "constant" || (name.starts_with("constant(") && name.ends_with(")"))) {
        double c = 1.0;
        if (name != "constant") {
            std::string arg(name.substr(9, name.size() - 10));
            const char* b = arg.data();
            const char* e = b + arg.size();
            auto [p, ec] = std::from_chars(b, e, c);
            if (ec != std::errc{} || p != e || !std::isfinite(c)) return std::nullopt;
        }
        return CatalogFunction{
            "constant(" + format_double(c) + ")",
            [c](std::span<const double>, std::span<const double>, Spec) { return c; }};
    }
    if (name == "affine")
        return CatalogFunction{
            "affine", [](std::span<const double> x, std::span<const double> y, Spec) {
                double v = 0.5;
                for (std::size_t i = 0; i < x.size(); ++i)
                    v += x[i] / static_cast<double>(i + 1);
                for (std::size_t j = 0; j < y.size(); ++j)
                    v -= y[j] / static_cast<double>(j + 2);
                return v;
            }};
    if (name == "lipschitz_sine")
        return CatalogFunction{
            "lipschitz_sine", [](std::span<const double> x, std::span<const double> y, Spec) {
                return std::sin(x[0] - y[0]);
            }};
    if (name == "step_lsc_x")
        return CatalogFunction{
            "step_lsc_x", [](std::span<const double> x, std::span<const double>, Spec) {
                return x[0] > 0.0 ? 1.0 : 0.0;
            }};
    if (name == "step_usc_y")
        return CatalogFunction{
            "step_usc_y", [](std::span<const double>, std::span<const double> y, Spec) {
                return y[0] >= 0.0 ? 1.0 : 0.0;
            }};
    if (name == "mixed_step")
        return CatalogFunction{
            "mixed_step", [](std::span<const double> x, std::span<const double> y, Spec) {
                return (x[0] > 0.0 ? 1.0 : 0.0) - (y[0] > 0.0 ? 1.0 : 0.0);
            }};
    if (name == "unbounded_hyperbola")
        return CatalogFunction{"unbounded_hyperbola",
                               [](std::span<const double> x, std::span<const double> y,
                                  const MetricSpec& m) {
                                   return 1.0 / (metric_norm(m.x, x) + metric_norm(m.y, y) + 0.1);
                               }};
    return std::nullopt;
}

/// Samples a catalog function on every node of the grid.
inline SampledFunction sample(const CatalogFunction& fn, const ProductGrid& grid,
                              MetricSpec metric) {
    std::vector<double> values(grid.node_count());
    std::vector<double> point(grid.axis_count());
    std::size_t flat = 0;
    detail::for_each_multi(grid.sizes(), [&](std::span<const std::size_t> multi) {
        for (std::size_t k = 0; k < multi.size(); ++k)
            point[k] = grid.axis(k).coords()[multi[k]];
        std::span<const double> xs(point.data(), grid.dx());
        std::span<const double> ys(point.data() + grid.dx(), grid.dy());
        values[flat++] = fn.eval(xs, ys, metric);
    });
    return SampledFunction(grid, metric, std::move(values), fn.name);
}

inline SampledFunction from_catalog(std::string_view name, const ProductGrid& grid,
                                    MetricSpec metric) {
    auto fn = find_catalog(name);
    if (!fn) {
        std::string known;
        for (const auto& n : catalog_names()) {
            if (!known.empty()) known += ", ";
            known += n;
        }
        fail(ErrorKind::UnknownName,
             "unknown catalog name '" + std::string(name) + "' (known: " + known + ")");
    }
    return sample(*fn, grid, metric);
}

} // namespace envkit
