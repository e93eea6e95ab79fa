#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "fpnrecon/errors.hpp"
#include "fpnrecon/sparse.hpp"
#include "fpnrecon/types.hpp"

namespace fpnrecon {

/// Parallel-beam scan description. The image lives on the unit square
/// [-1,1]^2; detector_span is the physical width covered by the beams, in the
/// same units, and defaults to the square's diagonal so every ray can
/// intersect the image.
struct ScanGeometry {
    index_t n_angles = 15;
    index_t n_beams = 45;
    index_t image_side = 32;
    double detector_span = 2.0 * std::numbers::sqrt2;

    void validate() const {
        if (n_angles < 1 || n_beams < 1 || image_side < 1)
            throw argument_error("ScanGeometry: counts must be >= 1");
        if (!(detector_span > 0.0)) throw argument_error("ScanGeometry: detector_span must be > 0");
    }

    index_t n_rays() const { return n_angles * n_beams; }

    /// Projection angle of row block a, equally spaced in [0, pi).
    double angle(index_t a) const {
        return std::numbers::pi * static_cast<double>(a) / static_cast<double>(n_angles);
    }

    /// Beam offset b, bin centers across the detector span.
    double offset(index_t b) const {
        return -0.5 * detector_span +
               (static_cast<double>(b) + 0.5) * detector_span / static_cast<double>(n_beams);
    }
};

namespace detail {

// One ray through the pixel grid. The line is offset*omega + s*dir with
// |dir| = 1, so parameter differences are chord lengths. Produces (pixel,
// length) pairs via Siddon-style grid-crossing enumeration.
inline void trace_ray(double angle, double offset, index_t side,
                      std::vector<std::pair<index_t, double>>& out) {
    out.clear();
    const double ox = std::cos(angle), oy = std::sin(angle);
    const double dx = -oy, dy = ox;
    const double px = offset * ox, py = offset * oy;
    const double h = 2.0 / static_cast<double>(side);

    // Clip the line against the square.
    double s_lo = -std::numeric_limits<double>::infinity();
    double s_hi = std::numeric_limits<double>::infinity();
    const auto clip_axis = [&](double p, double d) {
        if (std::abs(d) < 1e-15) return std::abs(p) <= 1.0;
        const double a = (-1.0 - p) / d, b = (1.0 - p) / d;
        s_lo = std::max(s_lo, std::min(a, b));
        s_hi = std::min(s_hi, std::max(a, b));
        return true;
    };
    if (!clip_axis(px, dx) || !clip_axis(py, dy) || s_lo >= s_hi) return;

    // Crossing parameters with all grid lines, plus the entry/exit points.
    std::vector<double> ticks;
    ticks.reserve(static_cast<std::size_t>(2 * side) + 4);
    ticks.push_back(s_lo);
    ticks.push_back(s_hi);
    for (index_t k = 0; k <= side; ++k) {
        const double g = -1.0 + static_cast<double>(k) * h;
        if (std::abs(dx) > 1e-15) {
            const double s = (g - px) / dx;
            if (s > s_lo && s < s_hi) ticks.push_back(s);
        }
        if (std::abs(dy) > 1e-15) {
            const double s = (g - py) / dy;
            if (s > s_lo && s < s_hi) ticks.push_back(s);
        }
    }
    std::sort(ticks.begin(), ticks.end());

    for (std::size_t i = 0; i + 1 < ticks.size(); ++i) {
        const double len = ticks[i + 1] - ticks[i];
        if (len <= 1e-14) continue;
        const double sm = 0.5 * (ticks[i] + ticks[i + 1]);
        const double x = px + sm * dx, y = py + sm * dy;
        const auto c = static_cast<index_t>(std::floor((x + 1.0) / h));
        const auto r = static_cast<index_t>(std::floor((1.0 - y) / h));
        if (c < 0 || c >= side || r < 0 || r >= side) continue;
        out.emplace_back(r * side + c, len);
    }
}

} // namespace detail

/// Discretized parallel-beam Radon transform: entry (ray, pixel) is the exact
/// intersection length of that ray with that pixel. Row order is angle-major,
/// matching the Sinogram layout.
inline SparseMatrix build_radon_matrix(const ScanGeometry& geom) {
    geom.validate();
    if (geom.n_rays() < 1) throw argument_error("build_radon_matrix: geometry has no rays");
    const index_t side = geom.image_side;
    SparseRowBuilder builder(side * side);
    std::vector<std::pair<index_t, double>> entries;
    for (index_t a = 0; a < geom.n_angles; ++a) {
        for (index_t b = 0; b < geom.n_beams; ++b) {
            detail::trace_ray(geom.angle(a), geom.offset(b), side, entries);
            std::sort(entries.begin(), entries.end());
            for (const auto& [pix, len] : entries) builder.add_entry(pix, len);
            builder.finish_row();
        }
    }
    return builder.take();
}

/// Chord length of the infinite line (angle, offset) through the image
/// square, independent of any pixel discretization.
inline double ray_chord_through_square(double angle, double offset) {
    const double ox = std::cos(angle), oy = std::sin(angle);
    const double dx = -oy, dy = ox;
    const double px = offset * ox, py = offset * oy;
    double s_lo = -std::numeric_limits<double>::infinity();
    double s_hi = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 2; ++axis) {
        const double p = axis == 0 ? px : py;
        const double d = axis == 0 ? dx : dy;
        if (std::abs(d) < 1e-15) {
            if (std::abs(p) > 1.0) return 0.0;
            continue;
        }
        const double a = (-1.0 - p) / d, b = (1.0 - p) / d;
        s_lo = std::max(s_lo, std::min(a, b));
        s_hi = std::min(s_hi, std::max(a, b));
    }
    return std::max(0.0, s_hi - s_lo);
}

} // namespace fpnrecon
