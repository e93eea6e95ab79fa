#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fpnrecon/errors.hpp"
#include "fpnrecon/prng.hpp"
#include "fpnrecon/sparse.hpp"
#include "fpnrecon/types.hpp"

namespace fpnrecon {

/// One ellipse of a synthetic phantom, in unit-square coordinates.
struct EllipseSpec {
    double cx = 0.0, cy = 0.0;
    double semi_x = 0.5, semi_y = 0.5;
    double rotation = 0.0;
    double intensity = 1.0;

    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double c = std::cos(rotation), s = std::sin(rotation);
        const double ex = (dx * c + dy * s) / semi_x;
        const double ey = (-dx * s + dy * c) / semi_y;
        return ex * ex + ey * ey <= 1.0;
    }
};

/// Sums ellipse intensities at pixel centers, then clips to [0,1].
inline Image render_ellipses(const std::vector<EllipseSpec>& ellipses, index_t side) {
    Image img(side, side);
    const double h = 2.0 / static_cast<double>(side);
    for (index_t r = 0; r < side; ++r) {
        const double y = 1.0 - (static_cast<double>(r) + 0.5) * h;
        for (index_t c = 0; c < side; ++c) {
            const double x = -1.0 + (static_cast<double>(c) + 0.5) * h;
            double v = 0.0;
            for (const auto& e : ellipses)
                if (e.contains(x, y)) v += e.intensity;
            img.at(r, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

/// Random phantom of combined ellipses; deterministic given the rng state.
inline Image generate_ellipse_phantom(Prng& rng, index_t n_min, index_t n_max, index_t side) {
    if (side < 8) throw argument_error("generate_ellipse_phantom: side must be >= 8");
    if (n_min < 0 || n_max < n_min) throw argument_error("generate_ellipse_phantom: bad count range");
    const index_t count = rng.uniform_int(n_min, n_max);
    std::vector<EllipseSpec> ellipses(static_cast<std::size_t>(count));
    for (auto& e : ellipses) {
        e.cx = rng.uniform(-0.7, 0.7);
        e.cy = rng.uniform(-0.7, 0.7);
        e.semi_x = rng.uniform(0.1, 0.5);
        e.semi_y = rng.uniform(0.1, 0.5);
        e.rotation = rng.uniform(0.0, std::numbers::pi);
        e.intensity = rng.uniform(0.1, 1.0);
    }
    return render_ellipses(ellipses, side);
}

/// Noise placement for simulated measurements. The default scales the noise
/// of each ray by that ray's own clean magnitude; the alternative uses one
/// global scale equal to noise_frac times the mean absolute ray value.
enum class NoiseModel { per_ray_relative, global_relative };

/// d_i = (Au)_i + noise, per the chosen model, with i.i.d. standard normal
/// draws from rng.
inline Sinogram simulate_measurements(const SparseMatrix& a, const Image& u, double noise_frac,
                                      Prng& rng, index_t n_angles, index_t n_beams,
                                      NoiseModel model = NoiseModel::per_ray_relative) {
    if (noise_frac < 0.0) throw argument_error("simulate_measurements: noise_frac must be >= 0");
    if (n_angles * n_beams != a.rows)
        throw dimension_error("simulate_measurements: sinogram shape does not match matrix rows");
    Vector clean = spmv(a, u.data);
    if (noise_frac > 0.0) {
        if (model == NoiseModel::per_ray_relative) {
            for (auto& d : clean) d += noise_frac * std::abs(d) * rng.gaussian();
        } else {
            double mean_abs = 0.0;
            for (double d : clean) mean_abs += std::abs(d);
            mean_abs /= static_cast<double>(clean.size());
            const double sigma = noise_frac * mean_abs;
            for (auto& d : clean) d += sigma * rng.gaussian();
        }
    }
    return Sinogram(n_angles, n_beams, std::move(clean));
}

/// Row-normalized system: rows of A scaled to unit Euclidean norm with the
/// matching measurement scaling, zero rows dropped. kept_rows maps output
/// rows back to input rows; row_scale holds the applied 1/||a_r|| factors.
struct NormalizedSystem {
    SparseMatrix a;
    Vector d;
    std::vector<index_t> kept_rows;
    Vector row_scale;
};

inline NormalizedSystem normalize_rows(const SparseMatrix& a, std::span<const double> d) {
    if (static_cast<index_t>(d.size()) != a.rows)
        throw dimension_error("normalize_rows: measurement length does not match rows");
    NormalizedSystem out;
    SparseRowBuilder builder(a.cols);
    for (index_t r = 0; r < a.rows; ++r) {
        double nrm2 = 0.0;
        for (index_t k = a.row_begin(r); k < a.row_end(r); ++k)
            nrm2 += a.values[static_cast<std::size_t>(k)] * a.values[static_cast<std::size_t>(k)];
        if (nrm2 == 0.0) continue;
        const double scale = 1.0 / std::sqrt(nrm2);
        for (index_t k = a.row_begin(r); k < a.row_end(r); ++k)
            builder.add_entry(a.col_idx[static_cast<std::size_t>(k)],
                              a.values[static_cast<std::size_t>(k)] * scale);
        builder.finish_row();
        out.kept_rows.push_back(r);
        out.row_scale.push_back(scale);
        out.d.push_back(d[static_cast<std::size_t>(r)] * scale);
    }
    out.a = builder.take();
    return out;
}

/// Applies an existing normalization to another measurement vector from the
/// same geometry (the dataset shares one matrix).
inline Vector scale_measurements(const NormalizedSystem& sys, std::span<const double> d_raw) {
    Vector out(sys.kept_rows.size());
    for (std::size_t i = 0; i < sys.kept_rows.size(); ++i)
        out[i] = d_raw[static_cast<std::size_t>(sys.kept_rows[i])] * sys.row_scale[i];
    return out;
}

} // namespace fpnrecon
