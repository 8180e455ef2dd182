// Approximate dot products against projected centers: given centers already
// carved off, queries are corrected by h_x^T X^{-1} h_y so they act in the
// orthogonal complement of the removed directions.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sco/common.hpp"
#include "sco/dot_oracle.hpp"
#include "sco/linalg.hpp"

namespace sco {

// An approximate cluster mean, represented implicitly as the multiset of
// vertices it averages; coordinates are never materialized.
struct CenterRef {
    std::vector<u32> members;
};

// The mean of alpha vectors over a center's members. Dot products against
// the implicit mean are exactly the member-averaged dot products, since the
// oracle output is bilinear in the alpha vectors.
inline std::vector<double> center_alpha(DotCache& cache, const CenterRef& B) {
    if (B.members.empty()) throw std::invalid_argument("center_alpha: empty center");
    const size_t s = cache.data().params.s;
    std::vector<double> mean(s, 0.0);
    for (u32 z : B.members) {
        const auto& az = cache.alpha(z);
        for (size_t j = 0; j < s; ++j) mean[j] += az[j];
    }
    const double inv = 1.0 / static_cast<double>(B.members.size());
    for (double& v : mean) v *= inv;
    return mean;
}

struct SubspaceContext {
    std::vector<CenterRef> removed;
    Matrix X;      // pairwise approximate dots of the removed centers
    Matrix X_inv;
    double xi_inner = 0.0;  // recorded inner accuracy xi' = xi / (10 k^2)
    std::vector<std::vector<double>> removed_psi_alpha;  // Psi * mean-alpha per center

    bool empty() const { return removed.empty(); }
};

// Fills X(i,j) = <mu_i, mu_j>_apx from member-averaged oracle dots and
// inverts it by Gauss-Jordan with a pivot floor. A singular X means the
// candidate centers are nearly collinear and the candidate set is invalid.
inline SubspaceContext build_subspace(DotCache& cache, const std::vector<CenterRef>& removed,
                                      double xi) {
    if (removed.empty()) throw std::invalid_argument("build_subspace: removed must be nonempty");
    const u32 k = cache.data().params.k;
    SubspaceContext ctx;
    ctx.removed = removed;
    ctx.xi_inner = xi / (10.0 * static_cast<double>(k) * static_cast<double>(k));
    const size_t r = removed.size();
    std::vector<std::vector<double>> means(r);
    ctx.removed_psi_alpha.resize(r);
    for (size_t i = 0; i < r; ++i) {
        means[i] = center_alpha(cache, removed[i]);
        ctx.removed_psi_alpha[i] = psi_times(cache.data(), means[i]);
    }
    ctx.X = Matrix(r, r);
    for (size_t i = 0; i < r; ++i)
        for (size_t j = i; j < r; ++j) {
            double v = 0.0;
            for (size_t a = 0; a < means[i].size(); ++a)
                v += means[i][a] * ctx.removed_psi_alpha[j][a];
            ctx.X(i, j) = v;
            ctx.X(j, i) = v;
        }
    auto inv = gauss_jordan_inverse(ctx.X);
    if (!inv)
        throw ContextFailure("build_subspace: X is singular (centers nearly collinear)");
    ctx.X_inv = std::move(*inv);
    const Matrix check = multiply(ctx.X, ctx.X_inv);
    double err = 0.0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < r; ++j)
            err = std::max(err, std::abs(check(i, j) - (i == j ? 1.0 : 0.0)));
    if (err > 1e-6)
        throw ContextFailure("build_subspace: X inversion residual too large");
    return ctx;
}

namespace detail {

// h(i) = <mu_i, .>_apx against a raw alpha vector.
inline std::vector<double> correction_coordinates(const SubspaceContext& ctx,
                                                  const std::vector<double>& alpha) {
    std::vector<double> h(ctx.removed.size(), 0.0);
    for (size_t i = 0; i < ctx.removed.size(); ++i) {
        double v = 0.0;
        const auto& pa = ctx.removed_psi_alpha[i];
        for (size_t a = 0; a < alpha.size(); ++a) v += pa[a] * alpha[a];
        h[i] = v;
    }
    return h;
}

inline double bilinear(const Matrix& m, const std::vector<double>& a,
                       const std::vector<double>& b) {
    double out = 0.0;
    for (size_t i = 0; i < m.rows(); ++i) {
        if (a[i] == 0.0) continue;
        double row = 0.0;
        for (size_t j = 0; j < m.cols(); ++j) row += m(i, j) * b[j];
        out += a[i] * row;
    }
    return out;
}

inline double projected_dot(DotCache& cache, const SubspaceContext& ctx,
                            const std::vector<double>& ax, const std::vector<double>& ay) {
    const auto& D = cache.data();
    const auto psi_ay = psi_times(D, ay);
    double plain = 0.0;
    for (size_t j = 0; j < ax.size(); ++j) plain += ax[j] * psi_ay[j];
    if (ctx.empty()) return plain;
    const auto hx = correction_coordinates(ctx, ax);
    const auto hy = correction_coordinates(ctx, ay);
    return plain - bilinear(ctx.X_inv, hx, hy);
}

}  // namespace detail

// <f_x, Pi f_y>_apx = <f_x, f_y>_apx - h_x^T X^{-1} h_y. An empty context is
// the identity projection.
inline double dot_on_subspace(DotCache& cache, u32 x, u32 y, const SubspaceContext& ctx) {
    if (ctx.empty()) return cache.dot(x, y);
    const auto& ax = cache.alpha(x);
    const auto hx = detail::correction_coordinates(ctx, ax);
    const auto& pay = cache.psi_alpha(y);
    double plain = 0.0;
    for (size_t j = 0; j < ax.size(); ++j) plain += ax[j] * pay[j];
    const auto hy = detail::correction_coordinates(ctx, cache.alpha(y));
    return plain - detail::bilinear(ctx.X_inv, hx, hy);
}

// <f_x, Pi mu_B>_apx, the member average of dot_on_subspace (computed through
// the mean alpha vector, which is the same thing).
inline double dot_with_projected_center(DotCache& cache, u32 x, const CenterRef& B,
                                        const SubspaceContext& ctx) {
    if (B.members.empty()) throw std::invalid_argument("dot_with_projected_center: empty center");
    const auto ab = center_alpha(cache, B);
    return detail::projected_dot(cache, ctx, cache.alpha(x), ab);
}

struct ProjectedNorm {
    double value = 0.0;  // clamped at zero
    double raw = 0.0;    // possibly slightly negative
};

// ||Pi mu_B||^2_apx = mean over x in B of <f_x, Pi mu_B>_apx.
inline ProjectedNorm projected_center_norm(DotCache& cache, const CenterRef& B,
                                           const SubspaceContext& ctx) {
    if (B.members.empty()) throw std::invalid_argument("projected_center_norm: empty center");
    const auto ab = center_alpha(cache, B);
    ProjectedNorm out;
    out.raw = detail::projected_dot(cache, ctx, ab, ab);
    out.value = out.raw < 0.0 ? 0.0 : out.raw;
    return out;
}

}  // namespace sco
