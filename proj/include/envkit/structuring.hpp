#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "envkit/grid.hpp"

namespace envkit {

/// A balanced neighborhood of the origin in the second factor, used as the
/// structuring element of sup/inf envelopes. Balanced means it contains 0 and
/// is symmetric under negation; the factories enforce this. Membership is
/// open: Box uses |d_k| < w_k per axis, Ellipsoid uses sum (d_k/a_k)^2 < 1,
/// Offsets lists explicit displacement vectors (closed under negation).
class StructuringSet {
public:
    enum class Kind { Box, Ellipsoid, Offsets };

    static StructuringSet box(std::vector<double> half_widths) {
        require_positive(half_widths, "box half-width");
        StructuringSet s;
        s.kind_ = Kind::Box;
        s.radii_ = std::move(half_widths);
        return s;
    }

    static StructuringSet ellipsoid(std::vector<double> semi_axes) {
        require_positive(semi_axes, "ellipsoid semi-axis");
        StructuringSet s;
        s.kind_ = Kind::Ellipsoid;
        s.radii_ = std::move(semi_axes);
        return s;
    }

    static StructuringSet offsets(std::vector<std::vector<double>> displacements) {
        if (displacements.empty())
            fail(ErrorKind::InvalidArgument, "offset set must not be empty");
        const std::size_t dim = displacements.front().size();
        if (dim == 0) fail(ErrorKind::InvalidArgument, "offset vectors must not be empty");
        bool has_zero = false;
        for (const auto& v : displacements) {
            if (v.size() != dim)
                fail(ErrorKind::InvalidArgument, "offset vectors have mixed dimensions");
            bool zero = true;
            for (double c : v) {
                if (!std::isfinite(c))
                    fail(ErrorKind::InvalidArgument, "non-finite offset coordinate");
                if (c != 0.0) zero = false;
            }
            has_zero = has_zero || zero;
        }
        if (!has_zero)
            fail(ErrorKind::InvalidArgument, "offset set must contain the zero vector");
        for (const auto& v : displacements) {
            bool found = false;
            for (const auto& w : displacements) {
                bool neg = true;
                for (std::size_t k = 0; k < dim; ++k)
                    if (w[k] != -v[k]) { neg = false; break; }
                if (neg) { found = true; break; }
            }
            if (!found)
                fail(ErrorKind::InvalidArgument,
                     "offset set is not closed under negation (unbalanced)");
        }
        StructuringSet s;
        s.kind_ = Kind::Offsets;
        s.offsets_ = std::move(displacements);
        return s;
    }

    Kind kind() const { return kind_; }

    std::size_t dim() const {
        return kind_ == Kind::Offsets ? offsets_.front().size() : radii_.size();
    }

    /// Box half-widths or ellipsoid semi-axes, one per axis of the factor.
    std::span<const double> radii() const { return radii_; }

    const std::vector<std::vector<double>>& offsets() const { return offsets_; }

    /// Radius of a metric ball containing the whole set (informational).
    double bounding_radius(Metric m) const {
        switch (kind_) {
        case Kind::Box:
            return metric_norm(m, radii_);
        case Kind::Ellipsoid: {
            double r = 0.0;
            for (double a : radii_) r = std::max(r, a);
            return r;
        }
        case Kind::Offsets: {
            double r = 0.0;
            for (const auto& v : offsets_) r = std::max(r, metric_norm(m, v));
            return r;
        }
        }
        return 0.0;
    }

private:
    static void require_positive(const std::vector<double>& v, const char* what) {
        if (v.empty()) fail(ErrorKind::InvalidArgument, std::string(what) + " list is empty");
        for (double w : v)
            if (!(std::isfinite(w) && w > 0.0))
                fail(ErrorKind::InvalidArgument,
                     std::string(what) + " must be positive and finite, got " + format_double(w));
    }

    Kind kind_ = Kind::Box;
    std::vector<double> radii_;
    std::vector<std::vector<double>> offsets_;
};

} // namespace envkit
