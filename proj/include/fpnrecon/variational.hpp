#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fpnrecon/errors.hpp"
#include "fpnrecon/feasibility.hpp"
#include "fpnrecon/sparse.hpp"
#include "fpnrecon/tv.hpp"
#include "fpnrecon/types.hpp"

namespace fpnrecon {

// =============================================================================
// TV superiorization
// =============================================================================

struct TvsParams {
    double alpha = 0.0023;  // perturbation magnitude
    double beta = 0.968;    // geometric decay, in (0,1)
    double eps_stab = 1e-7; // stabilizer added to the gradient norm
    index_t iterations = 20;
    double drop_relaxation = 1.0;

    void validate() const {
        if (alpha < 0.0) throw argument_error("TvsParams: alpha must be >= 0");
        if (!(beta > 0.0 && beta < 1.0)) throw argument_error("TvsParams: beta must be in (0,1)");
        if (!(eps_stab > 0.0)) throw argument_error("TvsParams: eps_stab must be > 0");
        if (iterations < 1) throw argument_error("TvsParams: iterations must be >= 1");
    }
};

struct TvsIterationStats {
    index_t iteration = 0;
    double tv = 0.0;
    double residual_norm = 0.0;       // ||Au - d||
    double perturbation_coeff = 0.0;  // alpha * beta^k
};

/// Superiorized DROP: each step perturbs the iterate along the negative
/// normalized TV gradient direction with summable coefficients alpha*beta^k,
/// then applies the feasibility operator. Starts from u = 0; the returned
/// image is clipped to [0,1] for metric comparability.
inline Image tvs_reconstruct(const SparseMatrix& a, std::span<const double> d, index_t height,
                             index_t width, const TvsParams& params,
                             std::vector<TvsIterationStats>* trace = nullptr) {
    params.validate();
    if (height * width != a.cols)
        throw dimension_error("tvs_reconstruct: image shape does not match matrix");
    const DropOperator drop(a, params.drop_relaxation);
    const DiffOperator diff(height, width);

    Vector u(static_cast<std::size_t>(a.cols), 0.0);
    for (index_t k = 1; k <= params.iterations; ++k) {
        Vector v = u;
        const double coeff = params.alpha * std::pow(params.beta, static_cast<double>(k));
        if (params.alpha > 0.0) {
            Vector g = diff.forward(u);
            const double gn = norm2(g);
            for (auto& x : g) x /= gn + params.eps_stab;
            Vector dir = diff.adjoint(g);
            axpy(-coeff, dir, v);
        }
        u = drop.apply(d, v);
        if (!all_finite(u))
            throw divergence_error("tvs_reconstruct: NaN/Inf at iteration " + std::to_string(k));
        if (trace) {
            Vector au = spmv(a, u);
            double rn = 0.0;
            for (std::size_t i = 0; i < au.size(); ++i) {
                const double e = au[i] - d[i];
                rn += e * e;
            }
            trace->push_back({k, tv_value(Image(height, width, u)), std::sqrt(rn), coeff});
        }
    }
    Image out(height, width, std::move(u));
    for (auto& x : out.data) x = std::clamp(x, 0.0, 1.0);
    return out;
}

// =============================================================================
// TV minimization via linearized ADMM
// =============================================================================

struct AdmmParams {
    double alpha = 0.1;   // dual step
    double beta = 0.1;    // primal step
    double lambda = 0.1;  // prox step
    double epsilon = 10.0; // data-ball radius
    index_t iterations = 250;

    void validate() const {
        if (!(alpha > 0.0) || !(beta > 0.0) || !(lambda > 0.0) || !(epsilon > 0.0))
            throw argument_error("AdmmParams: all scalars must be > 0");
        if (iterations < 1) throw argument_error("AdmmParams: iterations must be >= 1");
    }
};

struct TvmIterationStats {
    index_t iteration = 0;
    double tv = 0.0;
    double feasibility_gap = 0.0; // ||Au - d|| - epsilon
};

/// Anisotropic TV minimization over the box [0,1]^n subject to
/// ||Au - d|| <= epsilon, solved with the explicit linearized-ADMM updates
/// on the splitting (p, w) = (D+ u, A u).
inline Image tvm_reconstruct(const SparseMatrix& a, std::span<const double> d, index_t height,
                             index_t width, const AdmmParams& params,
                             std::vector<TvmIterationStats>* trace = nullptr) {
    params.validate();
    if (height * width != a.cols)
        throw dimension_error("tvm_reconstruct: image shape does not match matrix");
    const DiffOperator diff(height, width);
    const auto n = static_cast<std::size_t>(a.cols);
    const auto m = static_cast<std::size_t>(a.rows);

    Vector u(n, 0.0);
    Vector nu1(static_cast<std::size_t>(diff.output_size()), 0.0);
    Vector nu2(m, 0.0);
    Vector du = diff.forward(u); // p^1 = D+ u^1
    Vector p = du;
    Vector au = spmv(a, u); // w^1 = A u^1
    Vector w = au;

    for (index_t k = 1; k <= params.iterations; ++k) {
        // r^k = D+^T(nu1 + alpha (D+ u - p)) + A^T(nu2 + alpha (A u - w))
        Vector t1(nu1.size());
        for (std::size_t i = 0; i < t1.size(); ++i)
            t1[i] = nu1[i] + params.alpha * (du[i] - p[i]);
        Vector t2(nu2.size());
        for (std::size_t i = 0; i < t2.size(); ++i)
            t2[i] = nu2[i] + params.alpha * (au[i] - w[i]);
        Vector r = diff.adjoint(t1);
        Vector atr = spmv_transpose(a, t2);
        for (std::size_t i = 0; i < n; ++i) r[i] += atr[i];

        // u^{k+1} = P_[0,1]^n (u - beta r)
        for (std::size_t i = 0; i < n; ++i) u[i] = std::clamp(u[i] - params.beta * r[i], 0.0, 1.0);
        du = diff.forward(u);
        au = spmv(a, u);

        // p^{k+1} = soft_threshold(p + lambda (nu1 + alpha (D+ u^{k+1} - p)))
        Vector parg(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            parg[i] = p[i] + params.lambda * (nu1[i] + params.alpha * (du[i] - p[i]));
        p = soft_threshold(parg, params.lambda);

        // w^{k+1} = P_B(d,eps)(w + lambda (nu2 + alpha (A u^{k+1} - w)))
        Vector warg(w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            warg[i] = w[i] + params.lambda * (nu2[i] + params.alpha * (au[i] - w[i]));
        w = project_ball(d, params.epsilon, warg);

        // dual ascent
        for (std::size_t i = 0; i < nu1.size(); ++i) nu1[i] += params.alpha * (du[i] - p[i]);
        for (std::size_t i = 0; i < nu2.size(); ++i) nu2[i] += params.alpha * (au[i] - w[i]);

        if (!all_finite(u) || !all_finite(p) || !all_finite(w))
            throw divergence_error("tvm_reconstruct: NaN/Inf at iteration " + std::to_string(k));
        if (trace) {
            double rn = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double e = au[i] - d[i];
                rn += e * e;
            }
            trace->push_back(
                {k, tv_value(Image(height, width, u)), std::sqrt(rn) - params.epsilon});
        }
    }
    return Image(height, width, std::move(u));
}

} // namespace fpnrecon
