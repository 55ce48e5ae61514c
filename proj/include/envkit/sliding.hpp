#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "envkit/grid.hpp"

namespace envkit {

enum class Bound { Sup, Inf };

/// Sliding extremum over the open windows {j : |c_j - c_i| < radius} of one
/// uniform axis, in O(n) amortized time via a monotone index deque.
///
/// Window membership is decided with the same coordinate-difference
/// comparisons a per-pair scan would use, so the result is bit-identical to
/// the naive kernel, including ties broken toward the smallest index.
/// Non-uniform axes are rejected; callers must fall back to the naive path.
inline std::vector<double> sliding_extremum_axis(std::span<const double> values,
                                                 const AxisGrid& axis, double radius,
                                                 Bound bound) {
    if (!axis.uniform())
        fail(ErrorKind::NonUniformAxis,
             "sliding extremum requires a uniform axis; use the naive kernel");
    if (values.size() != axis.size())
        fail(ErrorKind::InvalidArgument,
             "value count " + std::to_string(values.size()) + " does not match axis length " +
                 std::to_string(axis.size()));
    if (!(radius > 0.0) || !std::isfinite(radius))
        fail(ErrorKind::InvalidArgument, "radius must be positive and finite");

    const auto& c = axis.coords();
    const std::size_t n = values.size();
    std::vector<double> out(n);
    std::vector<std::size_t> dq(n);
    std::size_t head = 0, tail = 0; // deque occupies dq[head, tail)
    std::size_t lo = 0, hi = 0;     // window is [lo, hi)

    for (std::size_t i = 0; i < n; ++i) {
        while (hi < n && c[hi] - c[i] < radius) {
            if (bound == Bound::Sup)
                while (tail > head && values[dq[tail - 1]] < values[hi]) --tail;
            else
                while (tail > head && values[dq[tail - 1]] > values[hi]) --tail;
            dq[tail++] = hi;
            ++hi;
        }
        while (c[i] - c[lo] >= radius) {
            if (dq[head] == lo) ++head;
            ++lo;
        }
        out[i] = values[dq[head]];
    }
    return out;
}

} // namespace envkit
