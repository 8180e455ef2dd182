// Synthetic clusterable instances: per-cluster expanders from random perfect
// matchings (stub matching when sizes are odd), d-regularity-preserving cross
// rewiring between clusters, and a spectral certificate on the result.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sco/baseline.hpp"
#include "sco/common.hpp"
#include "sco/graph.hpp"
#include "sco/hash.hpp"

namespace sco {

// Counter-based deterministic RNG on top of the keyed hash.
class HashRng {
public:
    HashRng(const Seed& seed, StreamTag tag, u64 stream) : seed_(seed), tag_(tag), stream_(stream) {}

    u64 next() {
        return detail::keyed_hash(seed_, static_cast<u64>(tag_), stream_, counter_++, 0,
                                  0x7b1fa3c9ULL);
    }

    u64 below(u64 bound) {
        const u64 limit = (~0ULL / bound) * bound;
        for (;;) {
            const u64 h = next();
            if (h < limit) return h % bound;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    Seed seed_;
    StreamTag tag_;
    u64 stream_;
    u64 counter_ = 0;
};

struct GenParams {
    std::vector<size_t> sizes;
    u32 d = 12;
    double p_cross = 0.0;  // expected cross-edges per vertex
    Seed seed;
    double target_phi = 0.5;
    double max_size_ratio = 4.0;
    double expansion_floor = 0.05;  // required lambda_{k+1} when certifying
    int max_retries = 8;
    bool certify = true;  // skipped automatically above the dense limit
    size_t dense_limit = kDenseEigLimit;
};

struct ClusterableInstance {
    RegularGraph graph;
    std::vector<std::pair<u32, u32>> cluster_ranges;  // half-open, contiguous
    size_t k = 0;
    double target_phi = 0.0;
    double target_eps = 0.0;
    Seed seed;
    double max_size_ratio = 0.0;

    // Measured metadata.
    std::vector<double> outer_per_cluster;
    double eps_hat = 0.0;     // max_i outer conductance
    double lambda_k = -1.0;   // from the certificate when available
    double lambda_k1 = -1.0;
    bool certified = false;

    std::vector<std::vector<u32>> ground_truth() const {
        std::vector<std::vector<u32>> parts(cluster_ranges.size());
        for (size_t c = 0; c < cluster_ranges.size(); ++c)
            for (u32 v = cluster_ranges[c].first; v < cluster_ranges[c].second; ++v)
                parts[c].push_back(v);
        return parts;
    }

    size_t min_cluster_size() const {
        size_t m = graph.n();
        for (const auto& [lo, hi] : cluster_ranges) m = std::min(m, static_cast<size_t>(hi - lo));
        return m;
    }

    // Conductance proxy sqrt(2 lambda_{k+1}), clamped into (0, 1].
    double phi_hat() const {
        if (!certified) return target_phi;
        return std::min(1.0, std::sqrt(std::max(0.0, 2.0 * lambda_k1)));
    }
};

namespace detail {

// Expander on [lo, hi): union of d random perfect matchings, one slot per
// matching, so every slot is a real edge. (Padding half the slots with
// self-loops would halve lambda_{k+1} and with it the conductance proxy,
// which quadruples the default walk length; full-degree matchings keep the
// same certificate at a quarter of the walk cost.) For odd cluster sizes a
// matching cannot be perfect, so we fall back to stub matching at the same
// edge budget (self-loops and multi-edges from unlucky pairings are allowed
// by the model; the certificate rejects bad draws).
inline void fill_cluster_edges(RegularGraph& g, u32 lo, u32 hi, HashRng& rng) {
    const size_t m = hi - lo;
    const u32 rounds = g.d();
    if (m % 2 == 0) {
        std::vector<u32> perm(m);
        for (u32 round = 0; round < rounds; ++round) {
            std::iota(perm.begin(), perm.end(), lo);
            rng.shuffle(perm);
            for (size_t i = 0; i < m; i += 2) {
                const u32 a = perm[i], b = perm[i + 1];
                g.set_slot(a, round, b);
                g.set_slot(b, round, a);
            }
        }
        return;
    }
    std::vector<u32> stubs;
    stubs.reserve(m * rounds);
    for (u32 x = lo; x < hi; ++x)
        for (u32 i = 0; i < rounds; ++i) stubs.push_back(x);
    rng.shuffle(stubs);
    std::vector<u32> next_slot(m, 0);
    for (size_t i = 0; i + 1 < stubs.size(); i += 2) {
        const u32 a = stubs[i], b = stubs[i + 1];
        g.set_slot(a, next_slot[a - lo]++, b);
        g.set_slot(b, next_slot[b - lo]++, a);
    }
}

struct SlotEdge {
    u32 a, slot_a, b, slot_b;
};

// Picks a within-cluster non-loop edge of cluster [lo, hi) as a linked slot
// pair. Retries until both directions are found inside the cluster.
inline SlotEdge pick_internal_edge(const RegularGraph& g, u32 lo, u32 hi, HashRng& rng) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const u32 a = lo + static_cast<u32>(rng.below(hi - lo));
        const u32 sa = static_cast<u32>(rng.below(g.d()));
        const u32 b = g.slot(a, sa);
        if (b == a || b < lo || b >= hi) continue;
        for (u32 sb = 0; sb < g.d(); ++sb)
            if (g.slot(b, sb) == a) return {a, sa, b, sb};
    }
    throw GenerationError("cross rewiring: no internal edge found (cluster exhausted)");
}

}  // namespace detail

// make matchings-based expanders per cluster, then rewire ~ p_cross * n / 4
// internal edge pairs across clusters (each rewire converts two internal
// edges into two cross edges, preserving d-regularity exactly).
inline ClusterableInstance generate_clusterable(const GenParams& params) {
    const size_t k = params.sizes.size();
    if (k < 1) throw std::invalid_argument("generate_clusterable: need at least one cluster");
    if (params.p_cross >= params.d)
        throw std::invalid_argument("generate_clusterable: p_cross must be < d");
    size_t smallest = params.sizes[0], largest = params.sizes[0], n = 0;
    for (size_t s : params.sizes) {
        if (s < static_cast<size_t>(params.d) + 1)
            throw std::invalid_argument("generate_clusterable: each size must be >= d+1");
        smallest = std::min(smallest, s);
        largest = std::max(largest, s);
        n += s;
    }
    if (static_cast<double>(largest) / static_cast<double>(smallest) >
        params.max_size_ratio + 1e-12)
        throw std::invalid_argument("generate_clusterable: size ratio exceeds the configured bound");

    const bool certify = params.certify && n <= params.dense_limit;
    std::string last_failure;
    for (int attempt = 0; attempt <= params.max_retries; ++attempt) {
        HashRng rng(params.seed, StreamTag::Generator, static_cast<u64>(attempt));
        ClusterableInstance inst;
        inst.k = k;
        inst.seed = params.seed;
        inst.target_phi = params.target_phi;
        inst.target_eps = params.p_cross / static_cast<double>(params.d);
        inst.max_size_ratio = params.max_size_ratio;
        inst.graph = RegularGraph(n, params.d);
        u32 offset = 0;
        for (size_t c = 0; c < k; ++c) {
            const u32 lo = offset, hi = offset + static_cast<u32>(params.sizes[c]);
            inst.cluster_ranges.emplace_back(lo, hi);
            detail::fill_cluster_edges(inst.graph, lo, hi, rng);
            offset = hi;
        }

        if (k > 1 && params.p_cross > 0.0) {
            const u64 rewires = static_cast<u64>(
                std::llround(params.p_cross * static_cast<double>(n) / 4.0));
            for (u64 r = 0; r < rewires; ++r) {
                const size_t ci = rng.below(k);
                size_t cj = rng.below(k - 1);
                if (cj >= ci) ++cj;
                const auto [ilo, ihi] = inst.cluster_ranges[ci];
                const auto [jlo, jhi] = inst.cluster_ranges[cj];
                const auto e1 = detail::pick_internal_edge(inst.graph, ilo, ihi, rng);
                const auto e2 = detail::pick_internal_edge(inst.graph, jlo, jhi, rng);
                inst.graph.set_slot(e1.a, e1.slot_a, e2.a);
                inst.graph.set_slot(e2.a, e2.slot_a, e1.a);
                inst.graph.set_slot(e1.b, e1.slot_b, e2.b);
                inst.graph.set_slot(e2.b, e2.slot_b, e1.b);
            }
        }

        const auto parts = inst.ground_truth();
        inst.outer_per_cluster.resize(k);
        inst.eps_hat = 0.0;
        for (size_t c = 0; c < k; ++c) {
            inst.outer_per_cluster[c] = k == 1 ? 0.0 : outer_conductance(inst.graph, parts[c]);
            inst.eps_hat = std::max(inst.eps_hat, inst.outer_per_cluster[c]);
        }

        if (!certify) return inst;

        const SpectralEmbedding emb = bottom_k_embedding(inst.graph, k, params.dense_limit);
        inst.lambda_k = emb.eigenvalues[k - 1];
        inst.lambda_k1 = emb.eigenvalues[k];
        inst.certified = true;
        if (inst.lambda_k1 < params.expansion_floor) {
            last_failure = "lambda_{k+1} = " + std::to_string(inst.lambda_k1) +
                           " below floor " + std::to_string(params.expansion_floor) +
                           " on attempt " + std::to_string(attempt);
            continue;
        }
        if (inst.lambda_k > 2.0 * inst.eps_hat + 1e-8) {
            last_failure = "lambda_k = " + std::to_string(inst.lambda_k) + " exceeds 2 eps_hat = " +
                           std::to_string(2.0 * inst.eps_hat) + " on attempt " +
                           std::to_string(attempt);
            continue;
        }
        return inst;
    }
    throw GenerationError("generate_clusterable: expansion certificate failed after retries; " +
                          last_failure);
}

// k disjoint cliques of the given size, padded to degree d; the exactly
// separable reference instance (outer conductance zero).
inline ClusterableInstance make_disjoint_cliques(size_t k, size_t size, u32 d) {
    if (size < 2 || size - 1 > d)
        throw std::invalid_argument("make_disjoint_cliques: need 2 <= size <= d+1");
    const size_t n = k * size;
    std::vector<std::vector<u32>> adj(n);
    for (size_t c = 0; c < k; ++c)
        for (size_t a = 0; a < size; ++a)
            for (size_t b = 0; b < size; ++b)
                if (a != b) adj[c * size + a].push_back(static_cast<u32>(c * size + b));
    ClusterableInstance inst;
    inst.graph = degree_regularize(adj, d);
    inst.k = k;
    inst.target_phi = 1.0;
    inst.target_eps = 0.0;
    inst.max_size_ratio = 1.0;
    for (size_t c = 0; c < k; ++c)
        inst.cluster_ranges.emplace_back(static_cast<u32>(c * size),
                                         static_cast<u32>((c + 1) * size));
    inst.outer_per_cluster.assign(k, 0.0);
    inst.eps_hat = 0.0;
    if (n <= kDenseEigLimit && n > k) {
        const SpectralEmbedding emb = bottom_k_embedding(inst.graph, k);
        inst.lambda_k = emb.eigenvalues[k - 1];
        inst.lambda_k1 = emb.eigenvalues[k];
        inst.certified = true;
    }
    return inst;
}

}  // namespace sco
