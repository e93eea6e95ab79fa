#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fpnrecon/errors.hpp"
#include "fpnrecon/sparse.hpp"
#include "fpnrecon/types.hpp"

namespace fpnrecon {

// =============================================================================
// Projections onto elementary convex sets
// =============================================================================

/// Orthogonal projection onto the hyperplane <a, u> = b.
inline Vector project_hyperplane(std::span<const double> a, double b, std::span<const double> u) {
    if (a.size() != u.size()) throw dimension_error("project_hyperplane: size mismatch");
    double na2 = 0.0, au = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na2 += a[i] * a[i];
        au += a[i] * u[i];
    }
    if (na2 == 0.0) throw argument_error("project_hyperplane: zero normal vector");
    const double t = (b - au) / na2;
    Vector out(u.begin(), u.end());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += t * a[i];
    return out;
}

/// Componentwise clamp onto [lo, hi]^n.
inline Vector project_box(double lo, double hi, std::span<const double> u) {
    if (lo > hi) throw argument_error("project_box: lo > hi");
    Vector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::clamp(u[i], lo, hi);
    return out;
}

/// Componentwise clamp onto the box with per-coordinate bounds.
inline Vector project_box(std::span<const double> lo, std::span<const double> hi,
                          std::span<const double> u) {
    if (lo.size() != u.size() || hi.size() != u.size())
        throw dimension_error("project_box: size mismatch");
    Vector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (lo[i] > hi[i]) throw argument_error("project_box: lo > hi");
        out[i] = std::clamp(u[i], lo[i], hi[i]);
    }
    return out;
}

/// Projection onto the Euclidean ball B(center, radius).
inline Vector project_ball(std::span<const double> center, double radius,
                           std::span<const double> w) {
    if (center.size() != w.size()) throw dimension_error("project_ball: size mismatch");
    if (radius < 0.0) throw argument_error("project_ball: negative radius");
    double dist2 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = w[i] - center[i];
        dist2 += d * d;
    }
    Vector out(w.begin(), w.end());
    if (dist2 <= radius * radius) return out;
    const double t = radius / std::sqrt(dist2);
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = center[i] + t * (w[i] - center[i]);
    return out;
}

// =============================================================================
// Projection-based algorithmic operators
// =============================================================================

/// One cyclic pass of hyperplane projections over the rows of A (Kaczmarz).
inline Vector kaczmarz_sweep(const SparseMatrix& a, std::span<const double> d,
                             std::span<const double> u) {
    if (static_cast<index_t>(d.size()) != a.rows || static_cast<index_t>(u.size()) != a.cols)
        throw dimension_error("kaczmarz_sweep: size mismatch");
    Vector x(u.begin(), u.end());
    for (index_t r = 0; r < a.rows; ++r) {
        double na2 = 0.0, ax = 0.0;
        for (index_t k = a.row_begin(r); k < a.row_end(r); ++k) {
            const auto i = static_cast<std::size_t>(k);
            na2 += a.values[i] * a.values[i];
            ax += a.values[i] * x[static_cast<std::size_t>(a.col_idx[i])];
        }
        if (na2 == 0.0) throw argument_error("kaczmarz_sweep: zero row");
        const double t = (d[static_cast<std::size_t>(r)] - ax) / na2;
        for (index_t k = a.row_begin(r); k < a.row_end(r); ++k) {
            const auto i = static_cast<std::size_t>(k);
            x[static_cast<std::size_t>(a.col_idx[i])] += t * a.values[i];
        }
    }
    return x;
}

/// Diagonally relaxed orthogonal projections: u' = u + lambda * U^-1 A^T (d - Au)
/// with U = diag(s_j), s_j the number of rows having a nonzero in column j
/// (s_j := 1 for empty columns). Requires unit-norm rows; validated once at
/// construction so the step itself stays cheap inside fixed-point loops.
class DropOperator {
  public:
    DropOperator(const SparseMatrix& a, double relaxation = 1.0)
        : a_(&a), lambda_(relaxation), inv_count_(static_cast<std::size_t>(a.cols), 1.0) {
        if (!(relaxation > 0.0) || relaxation > 1.0)
            throw argument_error("DropOperator: relaxation must be in (0, 1]");
        std::vector<index_t> count(static_cast<std::size_t>(a.cols), 0);
        for (index_t r = 0; r < a.rows; ++r) {
            double nrm2 = 0.0;
            for (index_t k = a.row_begin(r); k < a.row_end(r); ++k) {
                const auto i = static_cast<std::size_t>(k);
                nrm2 += a.values[i] * a.values[i];
                ++count[static_cast<std::size_t>(a.col_idx[i])];
            }
            if (std::abs(std::sqrt(nrm2) - 1.0) > 1e-8)
                throw argument_error("DropOperator: row " + std::to_string(r) +
                                     " is not unit-normalized");
        }
        for (std::size_t j = 0; j < inv_count_.size(); ++j)
            if (count[j] > 0) inv_count_[j] = 1.0 / static_cast<double>(count[j]);
    }

    /// One DROP step against measurements d.
    Vector apply(std::span<const double> d, std::span<const double> u) const {
        if (static_cast<index_t>(d.size()) != a_->rows ||
            static_cast<index_t>(u.size()) != a_->cols)
            throw dimension_error("DropOperator::apply: size mismatch");
        const SparseMatrix& a = *a_;
        Vector out(u.begin(), u.end());
        // residual r = d - Au, then out += lambda * U^-1 A^T r, fused row pass
        Vector residual(static_cast<std::size_t>(a.rows));
        for (index_t r = 0; r < a.rows; ++r) {
            double acc = 0.0;
            for (index_t k = a.row_begin(r); k < a.row_end(r); ++k) {
                const auto i = static_cast<std::size_t>(k);
                acc += a.values[i] * u[static_cast<std::size_t>(a.col_idx[i])];
            }
            residual[static_cast<std::size_t>(r)] = d[static_cast<std::size_t>(r)] - acc;
        }
        for (index_t r = 0; r < a.rows; ++r) {
            const double rr = residual[static_cast<std::size_t>(r)];
            if (rr == 0.0) continue;
            for (index_t k = a.row_begin(r); k < a.row_end(r); ++k) {
                const auto i = static_cast<std::size_t>(k);
                const auto j = static_cast<std::size_t>(a.col_idx[i]);
                out[j] += lambda_ * inv_count_[j] * a.values[i] * rr;
            }
        }
        return out;
    }

    /// Transpose of the step's input Jacobian applied to a cotangent:
    /// g' = (I - lambda U^-1 A^T A)^T g = g - lambda A^T A U^-1 g.
    Vector input_vjp(std::span<const double> g) const {
        if (static_cast<index_t>(g.size()) != a_->cols)
            throw dimension_error("DropOperator::input_vjp: size mismatch");
        Vector t(g.size());
        for (std::size_t j = 0; j < t.size(); ++j) t[j] = inv_count_[j] * g[j];
        Vector at = spmv(*a_, t);
        Vector ata = spmv_transpose(*a_, at);
        Vector out(g.begin(), g.end());
        for (std::size_t j = 0; j < out.size(); ++j) out[j] -= lambda_ * ata[j];
        return out;
    }

    const SparseMatrix& matrix() const { return *a_; }
    double relaxation() const { return lambda_; }
    std::span<const double> column_weights() const { return inv_count_; }

  private:
    const SparseMatrix* a_;
    double lambda_;
    Vector inv_count_; // 1/s_j
};

/// Single DROP step as a free operation; hot loops should hold a DropOperator.
inline Vector drop_step(const SparseMatrix& a, std::span<const double> d, double relaxation,
                        std::span<const double> u) {
    return DropOperator(a, relaxation).apply(d, u);
}

// =============================================================================
// Fixed-point iteration driver
// =============================================================================

/// Outcome of a fixed-point run: final iterate, number of operator
/// applications, and the last step norm ||u^{k+1} - u^k||.
struct FixedPointReport {
    Vector iterate;
    index_t iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
};

/// Iterates u <- T(u, k) until ||u^{k+1} - u^k|| < delta or max_iter
/// applications. T may depend on the step index k (cyclic operator families).
template <class Operator>
FixedPointReport fixed_point_iterate(Operator&& op, Vector u1, double delta, index_t max_iter) {
    if (!(delta > 0.0)) throw argument_error("fixed_point_iterate: delta must be > 0");
    if (max_iter < 1) throw argument_error("fixed_point_iterate: max_iter must be >= 1");
    FixedPointReport report;
    Vector u = std::move(u1);
    for (index_t k = 0; k < max_iter; ++k) {
        Vector next = op(u, k);
        if (next.size() != u.size())
            throw dimension_error("fixed_point_iterate: operator changed dimension");
        if (!all_finite(next))
            throw divergence_error("fixed_point_iterate: NaN/Inf at iteration " +
                                   std::to_string(k + 1));
        report.final_residual = norm_diff(next, u);
        report.iterations = k + 1;
        u = std::move(next);
        if (report.final_residual < delta) {
            report.converged = true;
            break;
        }
    }
    report.iterate = std::move(u);
    return report;
}

} // namespace fpnrecon
