#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "fpnrecon/errors.hpp"
#include "fpnrecon/types.hpp"

namespace fpnrecon {

/// Compressed sparse-row matrix. Column indices are strictly increasing
/// within each row and explicit zeros are never stored.
struct SparseMatrix {
    index_t rows = 0;
    index_t cols = 0;
    std::vector<index_t> row_ptr{0};
    std::vector<index_t> col_idx;
    std::vector<double> values;

    static SparseMatrix zero(index_t rows, index_t cols) {
        SparseMatrix a;
        a.rows = rows;
        a.cols = cols;
        a.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
        return a;
    }

    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// resulting zeros dropped.
    static SparseMatrix from_triplets(index_t rows, index_t cols,
                                      std::vector<std::tuple<index_t, index_t, double>> t) {
        for (const auto& [r, c, v] : t) {
            (void)v;
            if (r < 0 || r >= rows || c < 0 || c >= cols)
                throw argument_error("from_triplets: index out of range");
        }
        std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
            return std::tie(std::get<0>(a), std::get<1>(a)) <
                   std::tie(std::get<0>(b), std::get<1>(b));
        });
        SparseMatrix a = zero(rows, cols);
        std::size_t i = 0;
        for (index_t r = 0; r < rows; ++r) {
            while (i < t.size() && std::get<0>(t[i]) == r) {
                const index_t c = std::get<1>(t[i]);
                double v = 0.0;
                while (i < t.size() && std::get<0>(t[i]) == r && std::get<1>(t[i]) == c)
                    v += std::get<2>(t[i++]);
                if (v != 0.0) {
                    a.col_idx.push_back(c);
                    a.values.push_back(v);
                }
            }
            a.row_ptr[static_cast<std::size_t>(r) + 1] = static_cast<index_t>(a.values.size());
        }
        return a;
    }

    index_t nnz() const { return static_cast<index_t>(values.size()); }

    index_t row_begin(index_t r) const { return row_ptr[static_cast<std::size_t>(r)]; }
    index_t row_end(index_t r) const { return row_ptr[static_cast<std::size_t>(r) + 1]; }

    /// Checks every CSR invariant; throws on violation.
    void validate() const {
        if (rows < 0 || cols < 0) throw argument_error("SparseMatrix: negative dimension");
        if (static_cast<index_t>(row_ptr.size()) != rows + 1)
            throw argument_error("SparseMatrix: row_ptr length must be rows+1");
        if (row_ptr.front() != 0 || row_ptr.back() != nnz())
            throw argument_error("SparseMatrix: row_ptr endpoints invalid");
        if (col_idx.size() != values.size())
            throw argument_error("SparseMatrix: col_idx/values length mismatch");
        for (index_t r = 0; r < rows; ++r) {
            if (row_end(r) < row_begin(r)) throw argument_error("SparseMatrix: row_ptr decreasing");
            for (index_t k = row_begin(r); k < row_end(r); ++k) {
                const auto i = static_cast<std::size_t>(k);
                if (col_idx[i] < 0 || col_idx[i] >= cols)
                    throw argument_error("SparseMatrix: column index out of range");
                if (k > row_begin(r) && col_idx[i] <= col_idx[i - 1])
                    throw argument_error("SparseMatrix: columns not strictly increasing");
                if (values[i] == 0.0) throw argument_error("SparseMatrix: stored explicit zero");
            }
        }
    }
};

/// Appends rows one at a time; used by the ray tracer, which produces each
/// row with already-sorted columns.
class SparseRowBuilder {
  public:
    explicit SparseRowBuilder(index_t cols) : cols_(cols) {}

    void add_entry(index_t col, double value) {
        if (col < 0 || col >= cols_) throw argument_error("SparseRowBuilder: column out of range");
        if (value == 0.0) return;
        if (!current_cols_.empty() && col <= current_cols_.back())
            throw argument_error("SparseRowBuilder: columns must be strictly increasing");
        current_cols_.push_back(col);
        current_vals_.push_back(value);
    }

    void finish_row() {
        mat_.col_idx.insert(mat_.col_idx.end(), current_cols_.begin(), current_cols_.end());
        mat_.values.insert(mat_.values.end(), current_vals_.begin(), current_vals_.end());
        mat_.row_ptr.push_back(static_cast<index_t>(mat_.values.size()));
        ++mat_.rows;
        current_cols_.clear();
        current_vals_.clear();
    }

    SparseMatrix take() {
        mat_.cols = cols_;
        return std::move(mat_);
    }

  private:
    index_t cols_;
    SparseMatrix mat_ = SparseMatrix::zero(0, 0);
    std::vector<index_t> current_cols_;
    std::vector<double> current_vals_;
};

/// y = A x.
inline Vector spmv(const SparseMatrix& a, std::span<const double> x) {
    if (static_cast<index_t>(x.size()) != a.cols)
        throw dimension_error("spmv: vector length does not match cols");
    Vector y(static_cast<std::size_t>(a.rows), 0.0);
    for (index_t r = 0; r < a.rows; ++r) {
        double acc = 0.0;
        for (index_t k = a.row_begin(r); k < a.row_end(r); ++k) {
            const auto i = static_cast<std::size_t>(k);
            acc += a.values[i] * x[static_cast<std::size_t>(a.col_idx[i])];
        }
        y[static_cast<std::size_t>(r)] = acc;
    }
    return y;
}

/// y = A^T v. Sequential over rows, so the accumulation order is fixed.
inline Vector spmv_transpose(const SparseMatrix& a, std::span<const double> v) {
    if (static_cast<index_t>(v.size()) != a.rows)
        throw dimension_error("spmv_transpose: vector length does not match rows");
    Vector y(static_cast<std::size_t>(a.cols), 0.0);
    for (index_t r = 0; r < a.rows; ++r) {
        const double vr = v[static_cast<std::size_t>(r)];
        if (vr == 0.0) continue;
        for (index_t k = a.row_begin(r); k < a.row_end(r); ++k) {
            const auto i = static_cast<std::size_t>(k);
            y[static_cast<std::size_t>(a.col_idx[i])] += a.values[i] * vr;
        }
    }
    return y;
}

// Small dense-vector helpers shared by the iterative solvers.

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double norm_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace fpnrecon
