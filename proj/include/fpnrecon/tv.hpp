#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fpnrecon/errors.hpp"
#include "fpnrecon/types.hpp"

namespace fpnrecon {

/// Forward differencing on an image shape, with its exact adjoint. The
/// output stacks the row-axis (along each row) differences first, then the
/// column-axis ones; the boundary convention is replicate/Neumann, so the
/// last difference along each axis is zero.
struct DiffOperator {
    index_t height = 0;
    index_t width = 0;

    DiffOperator(index_t h, index_t w) : height(h), width(w) {
        if (h < 1 || w < 1) throw argument_error("DiffOperator: dimensions must be positive");
    }

    index_t input_size() const { return height * width; }
    index_t output_size() const { return 2 * height * width; }

    /// D+ u: stacked axis-wise forward differences, length 2*h*w.
    Vector forward(std::span<const double> u) const {
        if (static_cast<index_t>(u.size()) != input_size())
            throw dimension_error("DiffOperator::forward: size mismatch");
        const index_t n = input_size();
        Vector out(static_cast<std::size_t>(2 * n), 0.0);
        for (index_t r = 0; r < height; ++r) {
            const auto row = static_cast<std::size_t>(r * width);
            for (index_t c = 0; c + 1 < width; ++c)
                out[row + static_cast<std::size_t>(c)] =
                    u[row + static_cast<std::size_t>(c) + 1] - u[row + static_cast<std::size_t>(c)];
        }
        for (index_t r = 0; r + 1 < height; ++r) {
            for (index_t c = 0; c < width; ++c) {
                const auto i = static_cast<std::size_t>(r * width + c);
                out[static_cast<std::size_t>(n) + i] = u[i + static_cast<std::size_t>(width)] - u[i];
            }
        }
        return out;
    }

    /// D+^T p: the exact adjoint of forward(), length h*w.
    Vector adjoint(std::span<const double> p) const {
        if (static_cast<index_t>(p.size()) != output_size())
            throw dimension_error("DiffOperator::adjoint: size mismatch");
        const index_t n = input_size();
        Vector out(static_cast<std::size_t>(n), 0.0);
        for (index_t r = 0; r < height; ++r) {
            for (index_t c = 0; c < width; ++c) {
                const auto i = static_cast<std::size_t>(r * width + c);
                double v = 0.0;
                if (c + 1 < width) v -= p[i];
                if (c >= 1) v += p[i - 1];
                if (r + 1 < height) v -= p[static_cast<std::size_t>(n) + i];
                if (r >= 1) v += p[static_cast<std::size_t>(n) + i - static_cast<std::size_t>(width)];
                out[i] = v;
            }
        }
        return out;
    }
};

inline Vector forward_diff(const Image& u) { return DiffOperator(u.height, u.width).forward(u.data); }

inline Vector backward_diff_transpose(index_t height, index_t width, std::span<const double> p) {
    return DiffOperator(height, width).adjoint(p);
}

/// Anisotropic total variation: l1 norm of the stacked forward differences.
inline double tv_value(const Image& u) {
    double s = 0.0;
    for (double v : forward_diff(u)) s += std::abs(v);
    return s;
}

/// Proximal operator of lambda*||.||_1, componentwise
/// sign(u_i) * max(|u_i| - lambda, 0).
inline Vector soft_threshold(std::span<const double> u, double lambda) {
    if (lambda < 0.0) throw argument_error("soft_threshold: lambda must be >= 0");
    Vector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double mag = std::abs(u[i]) - lambda;
        out[i] = mag > 0.0 ? std::copysign(mag, u[i]) : 0.0;
    }
    return out;
}

} // namespace fpnrecon
