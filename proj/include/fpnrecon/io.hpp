#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fpnrecon/errors.hpp"
#include "fpnrecon/types.hpp"

namespace fpnrecon {

// =============================================================================
// Little-endian primitives. All multi-byte integers in the binary formats are
// little-endian regardless of host order.
// =============================================================================

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& os, double x) {
    const auto v = std::bit_cast<std::uint64_t>(x);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw io_error(io_error::kind::truncated, "unexpected end of file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw io_error(io_error::kind::truncated, "unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

} // namespace detail

/// Calls `writer(stream)` on a temp file, then renames into place so partial
/// output never lands at `path`.
template <class Writer>
void atomic_write(const std::filesystem::path& path, Writer&& writer) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw io_error(io_error::kind::open_failed, "cannot open " + tmp.string());
        writer(os);
        if (!os) throw io_error(io_error::kind::open_failed, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// =============================================================================
// FIMG: magic "FIMG", height and width as little-endian u32, then
// height*width little-endian f64, row-major. Round-trips are bit-exact.
// =============================================================================

inline void write_image(const std::filesystem::path& path, const Image& img) {
    if (!all_finite(img.data)) throw io_error(io_error::kind::nonfinite, "image has non-finite values");
    atomic_write(path, [&](std::ostream& os) {
        os.write("FIMG", 4);
        detail::put_u32(os, static_cast<std::uint32_t>(img.height));
        detail::put_u32(os, static_cast<std::uint32_t>(img.width));
        for (double x : img.data) detail::put_f64(os, x);
    });
}

inline Image read_image(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error(io_error::kind::open_failed, "cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4)) throw io_error(io_error::kind::truncated, "file shorter than header");
    if (std::string(magic, 4) != "FIMG")
        throw io_error(io_error::kind::bad_magic, "not a FIMG file: " + path.string());
    const auto h = static_cast<index_t>(detail::get_u32(is));
    const auto w = static_cast<index_t>(detail::get_u32(is));
    if (h < 1 || w < 1) throw io_error(io_error::kind::bad_header, "invalid image dimensions");
    Image img(h, w);
    for (auto& x : img.data) x = detail::get_f64(is);
    if (!all_finite(img.data))
        throw io_error(io_error::kind::nonfinite, "image payload has non-finite values");
    return img;
}

// =============================================================================
// Sinogram CSV: one row per angle, beams comma-separated, printed with enough
// digits to round-trip doubles exactly.
// =============================================================================

inline void write_sinogram_csv(const std::filesystem::path& path, const Sinogram& s) {
    atomic_write(path, [&](std::ostream& os) {
        char buf[32];
        for (index_t a = 0; a < s.n_angles; ++a) {
            for (index_t b = 0; b < s.n_beams; ++b) {
                std::snprintf(buf, sizeof buf, "%.17g", s.data[static_cast<std::size_t>(a * s.n_beams + b)]);
                os << buf;
                os << (b + 1 < s.n_beams ? "," : "\n");
            }
        }
    });
}

inline Sinogram read_sinogram_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw io_error(io_error::kind::open_failed, "cannot open " + path.string());
    std::vector<double> data;
    index_t n_angles = 0;
    index_t n_beams = -1;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        index_t beams = 0;
        const char* p = line.c_str();
        char* end = nullptr;
        while (*p) {
            const double v = std::strtod(p, &end);
            if (end == p) throw io_error(io_error::kind::bad_header, "malformed CSV value");
            data.push_back(v);
            ++beams;
            p = (*end == ',') ? end + 1 : end;
        }
        if (n_beams < 0)
            n_beams = beams;
        else if (beams != n_beams)
            throw io_error(io_error::kind::bad_header, "ragged CSV rows");
        ++n_angles;
    }
    if (n_angles == 0) throw io_error(io_error::kind::truncated, "empty sinogram CSV");
    if (!all_finite(data)) throw io_error(io_error::kind::nonfinite, "sinogram has non-finite values");
    return Sinogram(n_angles, n_beams, std::move(data));
}

} // namespace fpnrecon
