#pragma once

#include <charconv>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "envkit/error.hpp"

namespace envkit {

/// Shortest decimal string that round-trips the exact double value.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::size_t checked_mul(std::size_t a, std::size_t b, const char* what) {
    if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
        fail(ErrorKind::Overflow, std::string(what) + " overflows the index type");
    return a * b;
}

namespace detail {

/// Visits every multi-index over `sizes` in row-major order (last axis fastest).
template <class F>
inline void for_each_multi(std::span<const std::size_t> sizes, F&& f) {
    std::vector<std::size_t> idx(sizes.size(), 0);
    bool done = false;
    while (!done) {
        f(std::span<const std::size_t>(idx));
        done = true;
        for (std::size_t k = sizes.size(); k-- > 0;) {
            if (++idx[k] < sizes[k]) { done = false; break; }
            idx[k] = 0;
        }
        if (sizes.empty()) break;
    }
}

/// Calls f(base_offset) once per line running along `axis`; the line's
/// elements live at base_offset + i * strides[axis], i in [0, sizes[axis]).
template <class F>
inline void for_each_line(std::span<const std::size_t> sizes,
                          std::span<const std::size_t> strides,
                          std::size_t axis, F&& f) {
    std::vector<std::size_t> osizes, ostrides;
    osizes.reserve(sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (k == axis) continue;
        osizes.push_back(sizes[k]);
        ostrides.push_back(strides[k]);
    }
    for_each_multi(osizes, [&](std::span<const std::size_t> idx) {
        std::size_t base = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) base += idx[k] * ostrides[k];
        f(base);
    });
}

} // namespace detail
} // namespace envkit
