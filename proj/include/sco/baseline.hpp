// Dense-linear-algebra ground truth: normalized Laplacian, bottom-k spectral
// embedding, cluster means, directional variance, eigenvector tail counts,
// and exact projected quantities. Everything approximate is tested against
// this module.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sco/common.hpp"
#include "sco/graph.hpp"
#include "sco/linalg.hpp"

namespace sco {

inline constexpr size_t kDenseEigLimit = 5000;

// L = I - A/d with self-loop slots contributing to A's diagonal.
inline Matrix normalized_laplacian(const RegularGraph& g, size_t dense_limit = kDenseEigLimit) {
    if (g.n() > dense_limit) throw CapabilityError("normalized_laplacian: n exceeds dense limit");
    const size_t n = g.n();
    const double invd = 1.0 / static_cast<double>(g.d());
    Matrix L(n, n);
    for (size_t x = 0; x < n; ++x) {
        L(x, x) = 1.0;
        for (u32 i = 0; i < g.d(); ++i) L(x, g.slot(x, i)) -= invd;
    }
    return L;
}

struct SpectralEmbedding {
    size_t k = 0;
    Matrix F;                        // k x n, row i = i-th bottom eigenvector
    std::vector<double> eigenvalues; // ascending, k+1 entries when available
    bool degenerate_gap = false;     // lambda_k == lambda_{k+1} within 1e-10

    std::vector<double> column(size_t x) const {
        std::vector<double> f(k);
        for (size_t i = 0; i < k; ++i) f[i] = F(i, x);
        return f;
    }
};

// Bottom-k eigenvectors of L plus lambda_{k+1} for gap checks.
inline SpectralEmbedding bottom_k_embedding(const RegularGraph& g, size_t k,
                                            size_t dense_limit = kDenseEigLimit) {
    if (k < 1 || k >= g.n()) throw std::invalid_argument("bottom_k_embedding: need 1 <= k < n");
    const size_t n = g.n();
    const size_t want = std::min(n, k + 1);
    EigResult eig = bottom_eigenpairs(normalized_laplacian(g, dense_limit), want);
    SpectralEmbedding emb;
    emb.k = k;
    emb.eigenvalues = eig.values;
    emb.F = Matrix(k, n);
    for (size_t i = 0; i < k; ++i)
        for (size_t x = 0; x < n; ++x) emb.F(i, x) = eig.vectors(x, i);
    if (want > k && std::abs(emb.eigenvalues[k] - emb.eigenvalues[k - 1]) < 1e-10)
        emb.degenerate_gap = true;
    return emb;
}

inline double exact_dot(const SpectralEmbedding& emb, size_t x, size_t y) {
    double s = 0.0;
    for (size_t i = 0; i < emb.k; ++i) s += emb.F(i, x) * emb.F(i, y);
    return s;
}

struct ClusterMeans {
    Matrix mu;  // k x k, column i = mean of cluster i

    std::vector<double> column(size_t i) const {
        std::vector<double> v(mu.rows());
        for (size_t r = 0; r < mu.rows(); ++r) v[r] = mu(r, i);
        return v;
    }
};

inline ClusterMeans cluster_means(const SpectralEmbedding& emb,
                                  const std::vector<std::vector<u32>>& partition) {
    ClusterMeans means;
    means.mu = Matrix(emb.k, partition.size());
    for (size_t c = 0; c < partition.size(); ++c) {
        if (partition[c].empty()) throw std::invalid_argument("cluster_means: empty cluster");
        for (u32 x : partition[c])
            for (size_t i = 0; i < emb.k; ++i) means.mu(i, c) += emb.F(i, x);
        for (size_t i = 0; i < emb.k; ++i)
            means.mu(i, c) /= static_cast<double>(partition[c].size());
    }
    return means;
}

// sum_i sum_{x in C_i} <f_x - mu_i, alpha>^2 for a unit direction alpha.
inline double directional_variance(const SpectralEmbedding& emb,
                                   const std::vector<std::vector<u32>>& partition,
                                   const std::vector<double>& alpha) {
    if (alpha.size() != emb.k) throw std::invalid_argument("directional_variance: bad alpha size");
    double norm2 = 0.0;
    for (double a : alpha) norm2 += a * a;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9)
        throw std::invalid_argument("directional_variance: alpha must be a unit vector");
    const ClusterMeans means = cluster_means(emb, partition);
    double total = 0.0;
    for (size_t c = 0; c < partition.size(); ++c) {
        double mu_dot = 0.0;
        for (size_t i = 0; i < emb.k; ++i) mu_dot += means.mu(i, c) * alpha[i];
        for (u32 x : partition[c]) {
            double fx_dot = 0.0;
            for (size_t i = 0; i < emb.k; ++i) fx_dot += emb.F(i, x) * alpha[i];
            const double dev = fx_dot - mu_dot;
            total += dev * dev;
        }
    }
    return total;
}

// Fraction of coordinates with |u(x)| >= beta * sqrt(10 / min_cluster_size).
inline double tail_fraction(const std::vector<double>& u, double beta, size_t min_cluster_size) {
    if (beta <= 1.0) throw std::invalid_argument("tail_fraction: beta must exceed 1");
    if (min_cluster_size < 1) throw std::invalid_argument("tail_fraction: bad min cluster size");
    const double threshold = beta * std::sqrt(10.0 / static_cast<double>(min_cluster_size));
    size_t count = 0;
    for (double v : u)
        if (std::abs(v) >= threshold) ++count;
    return static_cast<double>(count) / static_cast<double>(u.size());
}

// Exact projector onto the orthogonal complement of a set of cluster means,
// built by Gram-Schmidt in the k-dimensional embedding space. Test oracle for
// the approximate subspace operations.
struct ProjectedQuantities {
    Matrix projector;        // k x k
    Matrix projected_means;  // k x k, column i = Pi mu_i (zero for removed i)

    std::vector<double> apply(const std::vector<double>& v) const {
        std::vector<double> out(projector.rows(), 0.0);
        for (size_t i = 0; i < projector.rows(); ++i)
            for (size_t j = 0; j < projector.cols(); ++j) out[i] += projector(i, j) * v[j];
        return out;
    }

    double projected_dot(const SpectralEmbedding& emb, size_t x, size_t y) const {
        const auto py = apply(emb.column(y));
        double s = 0.0;
        for (size_t i = 0; i < emb.k; ++i) s += emb.F(i, x) * py[i];
        return s;
    }

    double projected_mean_norm2(size_t i) const {
        double s = 0.0;
        for (size_t r = 0; r < projected_means.rows(); ++r)
            s += projected_means(r, i) * projected_means(r, i);
        return s;
    }
};

inline ProjectedQuantities exact_projected_quantities(const SpectralEmbedding& emb,
                                                      const std::vector<std::vector<u32>>& partition,
                                                      const std::vector<size_t>& removed) {
    const size_t k = emb.k;
    const ClusterMeans means = cluster_means(emb, partition);
    std::vector<std::vector<double>> basis;
    for (size_t idx : removed) {
        if (idx >= partition.size())
            throw std::invalid_argument("exact_projected_quantities: removed index out of range");
        std::vector<double> v = means.column(idx);
        for (const auto& b : basis) {
            double dot = 0.0;
            for (size_t i = 0; i < k; ++i) dot += v[i] * b[i];
            for (size_t i = 0; i < k; ++i) v[i] -= dot * b[i];
        }
        double norm = 0.0;
        for (double c : v) norm += c * c;
        norm = std::sqrt(norm);
        if (norm > 1e-12) {
            for (double& c : v) c /= norm;
            basis.push_back(std::move(v));
        }
    }
    ProjectedQuantities out;
    out.projector = Matrix::identity(k);
    for (const auto& b : basis)
        for (size_t i = 0; i < k; ++i)
            for (size_t j = 0; j < k; ++j) out.projector(i, j) -= b[i] * b[j];
    out.projected_means = Matrix(k, partition.size());
    for (size_t c = 0; c < partition.size(); ++c) {
        const auto pm = out.apply(means.column(c));
        for (size_t i = 0; i < k; ++i) out.projected_means(i, c) = pm[i];
    }
    return out;
}

}  // namespace sco
