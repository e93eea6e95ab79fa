#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fpnrecon/errors.hpp"

namespace fpnrecon {

using index_t = std::int64_t;
using Vector = std::vector<double>;

/// Dense real image, row-major, row 0 at the top edge of the unit square.
struct Image {
    index_t height = 0;
    index_t width = 0;
    Vector data;

    Image() = default;

    Image(index_t h, index_t w) : height(h), width(w), data(static_cast<std::size_t>(h * w), 0.0) {
        if (h < 1 || w < 1) throw argument_error("Image: dimensions must be positive");
    }

    Image(index_t h, index_t w, Vector values) : height(h), width(w), data(std::move(values)) {
        if (h < 1 || w < 1) throw argument_error("Image: dimensions must be positive");
        if (static_cast<index_t>(data.size()) != h * w)
            throw dimension_error("Image: data length does not match height*width");
    }

    double& at(index_t r, index_t c) { return data[static_cast<std::size_t>(r * width + c)]; }
    double at(index_t r, index_t c) const { return data[static_cast<std::size_t>(r * width + c)]; }

    index_t size() const { return height * width; }
};

/// Stacked line-integral measurements, row-major over (angle, beam).
struct Sinogram {
    index_t n_angles = 0;
    index_t n_beams = 0;
    Vector data;

    Sinogram() = default;

    Sinogram(index_t angles, index_t beams)
        : n_angles(angles), n_beams(beams), data(static_cast<std::size_t>(angles * beams), 0.0) {
        if (angles < 1 || beams < 1) throw argument_error("Sinogram: dimensions must be positive");
    }

    Sinogram(index_t angles, index_t beams, Vector values)
        : n_angles(angles), n_beams(beams), data(std::move(values)) {
        if (angles < 1 || beams < 1) throw argument_error("Sinogram: dimensions must be positive");
        if (static_cast<index_t>(data.size()) != angles * beams)
            throw dimension_error("Sinogram: data length does not match n_angles*n_beams");
    }

    index_t size() const { return n_angles * n_beams; }
};

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace fpnrecon
