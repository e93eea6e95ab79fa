#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "fpnrecon/errors.hpp"
#include "fpnrecon/io.hpp"
#include "fpnrecon/prng.hpp"
#include "fpnrecon/types.hpp"

namespace fpnrecon {

// =============================================================================
// Residual convolutional regularizer R(u) = u + branch(u)
//
// The branch is a chain of 2-D convolutions (stride 1, zero padding, spatial
// dims preserved) with a leaky-ReLU applied before every convolution after
// the first. A switch enables the variant that also activates before the
// first convolution. Exactly-zero preactivations take the negative-branch
// slope in all derivative computations.
// =============================================================================

struct ConvLayer {
    index_t out_ch = 0, in_ch = 0, kh = 0, kw = 0;
    Vector kernel; // (out_ch, in_ch, kh, kw), row-major
    Vector bias;   // (out_ch)

    index_t kernel_size() const { return out_ch * in_ch * kh * kw; }
};

inline ConvLayer make_conv_layer(index_t out_ch, index_t in_ch, index_t kh, index_t kw) {
    ConvLayer l{out_ch, in_ch, kh, kw, {}, {}};
    l.kernel.assign(static_cast<std::size_t>(l.kernel_size()), 0.0);
    l.bias.assign(static_cast<std::size_t>(out_ch), 0.0);
    return l;
}

struct NetworkWeights {
    std::vector<ConvLayer> layers;
    double leaky_slope = 0.01;

    /// Number of layers inside the residual branch.
    index_t residual_layers() const { return static_cast<index_t>(layers.size()); }

    void validate() const {
        if (layers.empty()) throw argument_error("NetworkWeights: no layers");
        if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
            throw argument_error("NetworkWeights: leaky slope must be in (0,1)");
        if (layers.front().in_ch != 1 || layers.back().out_ch != 1)
            throw argument_error("NetworkWeights: branch must map 1 channel to 1 channel");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const ConvLayer& l = layers[i];
            if (l.kh % 2 == 0 || l.kw % 2 == 0)
                throw argument_error("NetworkWeights: kernel sizes must be odd");
            if (static_cast<index_t>(l.kernel.size()) != l.kernel_size() ||
                static_cast<index_t>(l.bias.size()) != l.out_ch)
                throw argument_error("NetworkWeights: layer buffer sizes inconsistent");
            if (i + 1 < layers.size() && l.out_ch != layers[i + 1].in_ch)
                throw argument_error("NetworkWeights: channel chain mismatch");
        }
    }
};

/// Kernel and bias cotangents, shape-matched to a NetworkWeights.
struct WeightGradient {
    std::vector<ConvLayer> layers;
};

inline WeightGradient zero_gradient(const NetworkWeights& w) {
    WeightGradient g;
    g.layers.reserve(w.layers.size());
    for (const auto& l : w.layers) g.layers.push_back(make_conv_layer(l.out_ch, l.in_ch, l.kh, l.kw));
    return g;
}

/// Componentwise traversal helpers shared by Adam and batch accumulation.
template <class Fn>
void for_each_coeff(WeightGradient& g, Fn&& fn) {
    for (auto& l : g.layers) {
        for (auto& x : l.kernel) fn(x);
        for (auto& x : l.bias) fn(x);
    }
}

template <class Fn>
void zip_coeffs(NetworkWeights& w, const WeightGradient& g, Fn&& fn) {
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        auto& wl = w.layers[i];
        const auto& gl = g.layers[i];
        for (std::size_t j = 0; j < wl.kernel.size(); ++j) fn(wl.kernel[j], gl.kernel[j]);
        for (std::size_t j = 0; j < wl.bias.size(); ++j) fn(wl.bias[j], gl.bias[j]);
    }
}

inline void accumulate(WeightGradient& acc, const WeightGradient& g, double scale = 1.0) {
    for (std::size_t i = 0; i < acc.layers.size(); ++i) {
        auto& al = acc.layers[i];
        const auto& gl = g.layers[i];
        for (std::size_t j = 0; j < al.kernel.size(); ++j) al.kernel[j] += scale * gl.kernel[j];
        for (std::size_t j = 0; j < al.bias.size(); ++j) al.bias[j] += scale * gl.bias[j];
    }
}

// =============================================================================
// Primitive operations
// =============================================================================

inline double leaky_relu(double a, double x) { return x >= 0.0 ? x : a * x; }

inline Vector leaky_relu(double a, std::span<const double> x) {
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = leaky_relu(a, x[i]);
    return out;
}

// slope of the activation; exactly-zero inputs use the negative branch
inline double leaky_relu_slope(double a, double x) { return x > 0.0 ? 1.0 : a; }

/// Cross-correlation with stride 1 and zero padding preserving spatial dims.
/// in has shape (in_ch, h, w); the result has shape (out_ch, h, w).
inline void conv2d_into(const ConvLayer& l, std::span<const double> in, index_t h, index_t w,
                        Vector& out) {
    if (static_cast<index_t>(in.size()) != l.in_ch * h * w)
        throw dimension_error("conv2d: input shape mismatch");
    const auto plane = static_cast<std::size_t>(h * w);
    out.assign(static_cast<std::size_t>(l.out_ch) * plane, 0.0);
    const index_t py = l.kh / 2, px = l.kw / 2;
    for (index_t oc = 0; oc < l.out_ch; ++oc) {
        double* op = out.data() + static_cast<std::size_t>(oc) * plane;
        const double b = l.bias[static_cast<std::size_t>(oc)];
        for (std::size_t i = 0; i < plane; ++i) op[i] = b;
        for (index_t ic = 0; ic < l.in_ch; ++ic) {
            const double* ip = in.data() + static_cast<std::size_t>(ic) * plane;
            const double* kb =
                l.kernel.data() + static_cast<std::size_t>((oc * l.in_ch + ic) * l.kh * l.kw);
            for (index_t ky = 0; ky < l.kh; ++ky) {
                const index_t dy = ky - py;
                for (index_t kx = 0; kx < l.kw; ++kx) {
                    const double wgt = kb[ky * l.kw + kx];
                    if (wgt == 0.0) continue;
                    const index_t dx = kx - px;
                    const index_t y0 = std::max<index_t>(0, -dy), y1 = std::min(h, h - dy);
                    const index_t x0 = std::max<index_t>(0, -dx), x1 = std::min(w, w - dx);
                    for (index_t y = y0; y < y1; ++y) {
                        const double* src = ip + (y + dy) * w + dx;
                        double* dst = op + y * w;
                        for (index_t x = x0; x < x1; ++x) dst[x] += wgt * src[x];
                    }
                }
            }
        }
    }
}

inline Vector conv2d(const ConvLayer& l, std::span<const double> in, index_t h, index_t w) {
    Vector out;
    conv2d_into(l, in, h, w, out);
    return out;
}

// =============================================================================
// Forward evaluation and reverse-mode vector-Jacobian products
// =============================================================================

/// Per-layer conv inputs recorded during a forward pass; enough to replay the
/// chain backwards (activation masks are recovered from the stored inputs,
/// whose signs match the preactivation signs).
struct BranchTape {
    std::vector<Vector> conv_inputs;
    Vector branch_out;
};

inline bool activation_before_layer(std::size_t i, bool pre_activate_first) {
    return i > 0 || pre_activate_first;
}

inline BranchTape branch_forward(const NetworkWeights& w, std::span<const double> u, index_t h,
                                 index_t wd, bool pre_activate_first = false) {
    if (static_cast<index_t>(u.size()) != h * wd)
        throw dimension_error("regularizer: input shape mismatch");
    BranchTape tape;
    tape.conv_inputs.reserve(w.layers.size());
    Vector cur(u.begin(), u.end());
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        if (activation_before_layer(i, pre_activate_first)) cur = leaky_relu(w.leaky_slope, cur);
        tape.conv_inputs.push_back(cur);
        Vector next;
        conv2d_into(w.layers[i], cur, h, wd, next);
        cur = std::move(next);
    }
    tape.branch_out = std::move(cur);
    return tape;
}

/// R(u) = u + branch(u).
inline Vector regularizer_forward(const NetworkWeights& w, std::span<const double> u, index_t h,
                                  index_t wd, bool pre_activate_first = false) {
    BranchTape tape = branch_forward(w, u, h, wd, pre_activate_first);
    Vector out(u.begin(), u.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tape.branch_out[i];
    return out;
}

inline Image regularizer_forward(const NetworkWeights& w, const Image& u,
                                 bool pre_activate_first = false) {
    return Image(u.height, u.width,
                 regularizer_forward(w, u.data, u.height, u.width, pre_activate_first));
}

namespace detail {

// Cotangent of the conv w.r.t. its input: the transposed correlation.
inline Vector conv2d_input_vjp(const ConvLayer& l, std::span<const double> g_out, index_t h,
                               index_t w) {
    const auto plane = static_cast<std::size_t>(h * w);
    Vector g_in(static_cast<std::size_t>(l.in_ch) * plane, 0.0);
    const index_t py = l.kh / 2, px = l.kw / 2;
    for (index_t oc = 0; oc < l.out_ch; ++oc) {
        const double* gp = g_out.data() + static_cast<std::size_t>(oc) * plane;
        for (index_t ic = 0; ic < l.in_ch; ++ic) {
            double* dp = g_in.data() + static_cast<std::size_t>(ic) * plane;
            const double* kb =
                l.kernel.data() + static_cast<std::size_t>((oc * l.in_ch + ic) * l.kh * l.kw);
            for (index_t ky = 0; ky < l.kh; ++ky) {
                const index_t dy = ky - py;
                for (index_t kx = 0; kx < l.kw; ++kx) {
                    const double wgt = kb[ky * l.kw + kx];
                    if (wgt == 0.0) continue;
                    const index_t dx = kx - px;
                    const index_t y0 = std::max<index_t>(0, -dy), y1 = std::min(h, h - dy);
                    const index_t x0 = std::max<index_t>(0, -dx), x1 = std::min(w, w - dx);
                    for (index_t y = y0; y < y1; ++y) {
                        double* dst = dp + (y + dy) * w + dx;
                        const double* src = gp + y * w;
                        for (index_t x = x0; x < x1; ++x) dst[x] += wgt * src[x];
                    }
                }
            }
        }
    }
    return g_in;
}

// Kernel and bias cotangents for one conv given its recorded input.
inline void conv2d_weight_vjp(const ConvLayer& l, std::span<const double> in,
                              std::span<const double> g_out, index_t h, index_t w,
                              ConvLayer& grad) {
    const auto plane = static_cast<std::size_t>(h * w);
    const index_t py = l.kh / 2, px = l.kw / 2;
    for (index_t oc = 0; oc < l.out_ch; ++oc) {
        const double* gp = g_out.data() + static_cast<std::size_t>(oc) * plane;
        double bsum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) bsum += gp[i];
        grad.bias[static_cast<std::size_t>(oc)] = bsum;
        for (index_t ic = 0; ic < l.in_ch; ++ic) {
            const double* ip = in.data() + static_cast<std::size_t>(ic) * plane;
            double* kg =
                grad.kernel.data() + static_cast<std::size_t>((oc * l.in_ch + ic) * l.kh * l.kw);
            for (index_t ky = 0; ky < l.kh; ++ky) {
                const index_t dy = ky - py;
                for (index_t kx = 0; kx < l.kw; ++kx) {
                    const index_t dx = kx - px;
                    const index_t y0 = std::max<index_t>(0, -dy), y1 = std::min(h, h - dy);
                    const index_t x0 = std::max<index_t>(0, -dx), x1 = std::min(w, w - dx);
                    double acc = 0.0;
                    for (index_t y = y0; y < y1; ++y) {
                        const double* src = ip + (y + dy) * w + dx;
                        const double* gr = gp + y * w;
                        for (index_t x = x0; x < x1; ++x) acc += gr[x] * src[x];
                    }
                    kg[ky * l.kw + kx] = acc;
                }
            }
        }
    }
}

} // namespace detail

struct RegularizerVjp {
    Vector input_cotangent;  // (dR/du)^T v
    WeightGradient weight_grads; // (dR/dTheta)^T v
};

/// One reverse pass through R(u) = u + branch(u) for cotangent v, producing
/// both the input and the weight cotangents.
inline RegularizerVjp regularizer_vjp(const NetworkWeights& w, const BranchTape& tape,
                                      std::span<const double> v, index_t h, index_t wd,
                                      bool pre_activate_first = false) {
    if (v.size() != tape.branch_out.size()) throw dimension_error("regularizer_vjp: size mismatch");
    RegularizerVjp out;
    out.weight_grads = zero_gradient(w);
    Vector g(v.begin(), v.end());
    for (std::size_t ii = w.layers.size(); ii-- > 0;) {
        const ConvLayer& l = w.layers[ii];
        const Vector& x = tape.conv_inputs[ii];
        detail::conv2d_weight_vjp(l, x, g, h, wd, out.weight_grads.layers[ii]);
        g = detail::conv2d_input_vjp(l, g, h, wd);
        if (activation_before_layer(ii, pre_activate_first))
            for (std::size_t j = 0; j < g.size(); ++j)
                g[j] *= leaky_relu_slope(w.leaky_slope, x[j]);
        // x is post-activation, but its sign matches the preactivation sign
    }
    out.input_cotangent.assign(v.begin(), v.end());
    for (std::size_t j = 0; j < g.size(); ++j) out.input_cotangent[j] += g[j];
    return out;
}

/// (dR/du)^T v.
inline Vector vjp_input(const NetworkWeights& w, std::span<const double> u,
                        std::span<const double> v, index_t h, index_t wd,
                        bool pre_activate_first = false) {
    const BranchTape tape = branch_forward(w, u, h, wd, pre_activate_first);
    return regularizer_vjp(w, tape, v, h, wd, pre_activate_first).input_cotangent;
}

/// (dR/dTheta)^T v.
inline WeightGradient vjp_weights(const NetworkWeights& w, std::span<const double> u,
                                  std::span<const double> v, index_t h, index_t wd,
                                  bool pre_activate_first = false) {
    const BranchTape tape = branch_forward(w, u, h, wd, pre_activate_first);
    return regularizer_vjp(w, tape, v, h, wd, pre_activate_first).weight_grads;
}

// =============================================================================
// Construction and parameter accounting
// =============================================================================

/// Branch with the given hidden widths (input and output are 1 channel),
/// square odd kernels. Kernels start i.i.d. uniform in +-1/sqrt(fan_in)
/// scaled by init_scale, biases zero: a small initial branch, so R starts
/// close to the identity.
inline NetworkWeights init_network(std::span<const index_t> hidden_widths, index_t kernel,
                                   double leaky_slope, Prng& rng, double init_scale = 0.1) {
    std::vector<index_t> widths{1};
    widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    widths.push_back(1);
    NetworkWeights w;
    w.leaky_slope = leaky_slope;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        ConvLayer l = make_conv_layer(widths[i + 1], widths[i], kernel, kernel);
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in_ch * l.kh * l.kw));
        for (auto& x : l.kernel) x = init_scale * rng.uniform(-bound, bound);
        w.layers.push_back(std::move(l));
    }
    w.validate();
    return w;
}

inline index_t parameter_count(const NetworkWeights& w) {
    index_t n = 0;
    for (const auto& l : w.layers) n += l.kernel_size() + l.out_ch;
    return n;
}

/// Parameters of a chain of biased convolutions with the given channel
/// widths and square kernel.
inline index_t conv_chain_parameter_count(std::span<const index_t> widths, index_t kernel) {
    index_t n = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        n += widths[i + 1] * widths[i] * kernel * kernel + widths[i + 1];
    return n;
}

/// Parameter count of the full-scale reference architecture: four residual
/// blocks of two 3x3 convolutions each, i.e. a chain 1 -> w -> ... -> w -> 1
/// with eight convolutions at hidden width w. At w = 42 this counts 96,307.
inline index_t reference_network_parameter_count(index_t hidden_width) {
    std::vector<index_t> widths{1};
    widths.insert(widths.end(), 7, hidden_width);
    widths.push_back(1);
    return conv_chain_parameter_count(widths, 3);
}

// =============================================================================
// FWTS weights format: magic "FWTS", version byte, layer count (u32), then
// per layer out_ch, in_ch, kh, kw as u32 followed by kernel and bias f64s,
// then the leaky slope as f64. All little-endian; round-trips are bit-exact.
// =============================================================================

inline void write_weights(const std::filesystem::path& path, const NetworkWeights& w) {
    w.validate();
    atomic_write(path, [&](std::ostream& os) {
        os.write("FWTS", 4);
        const char version = 1;
        os.write(&version, 1);
        detail_io_put_u32(os, static_cast<std::uint32_t>(w.layers.size()));
        for (const auto& l : w.layers) {
            detail_io_put_u32(os, static_cast<std::uint32_t>(l.out_ch));
            detail_io_put_u32(os, static_cast<std::uint32_t>(l.in_ch));
            detail_io_put_u32(os, static_cast<std::uint32_t>(l.kh));
            detail_io_put_u32(os, static_cast<std::uint32_t>(l.kw));
            for (double x : l.kernel) detail_io_put_f64(os, x);
            for (double x : l.bias) detail_io_put_f64(os, x);
        }
        detail_io_put_f64(os, w.leaky_slope);
    });
}

inline NetworkWeights read_weights(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error(io_error::kind::open_failed, "cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4)) throw io_error(io_error::kind::truncated, "file shorter than header");
    if (std::string(magic, 4) != "FWTS")
        throw io_error(io_error::kind::bad_magic, "not a FWTS file: " + path.string());
    char version = 0;
    if (!is.read(&version, 1)) throw io_error(io_error::kind::truncated, "missing version byte");
    if (version != 1) throw io_error(io_error::kind::bad_header, "unsupported FWTS version");
    const auto n_layers = detail_io_get_u32(is);
    NetworkWeights w;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const auto oc = static_cast<index_t>(detail_io_get_u32(is));
        const auto ic = static_cast<index_t>(detail_io_get_u32(is));
        const auto kh = static_cast<index_t>(detail_io_get_u32(is));
        const auto kw = static_cast<index_t>(detail_io_get_u32(is));
        if (oc < 1 || ic < 1 || kh < 1 || kw < 1)
            throw io_error(io_error::kind::bad_header, "invalid layer dimensions");
        ConvLayer l = make_conv_layer(oc, ic, kh, kw);
        for (auto& x : l.kernel) x = detail_io_get_f64(is);
        for (auto& x : l.bias) x = detail_io_get_f64(is);
        w.layers.push_back(std::move(l));
    }
    w.leaky_slope = detail_io_get_f64(is);
    for (const auto& l : w.layers)
        if (!all_finite(l.kernel) || !all_finite(l.bias))
            throw io_error(io_error::kind::nonfinite, "weights have non-finite values");
    try {
        w.validate();
    } catch (const argument_error& e) {
        throw io_error(io_error::kind::bad_header, e.what());
    }
    return w;
}

} // namespace fpnrecon
