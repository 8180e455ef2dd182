// Lazy-random-walk estimators: empirical endpoint distributions, sampled
// transition matrices, and the median-boosted collision Gram matrix, plus the
// exact dense counterparts used as test oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "sco/common.hpp"
#include "sco/graph.hpp"
#include "sco/hash.hpp"
#include "sco/linalg.hpp"

namespace sco {

// Sparse empirical endpoint distribution of R walks of length t. Masses are
// exact rationals count/R, so they sum to exactly 1.
struct WalkDistribution {
    u32 start = 0;
    u32 t = 0;
    u64 walks = 0;                                  // R
    std::vector<std::pair<u32, u32>> counts;        // (vertex, hits), sorted by vertex

    double mass(u32 vertex) const {
        auto it = std::lower_bound(counts.begin(), counts.end(), vertex,
                                   [](const auto& p, u32 v) { return p.first < v; });
        if (it == counts.end() || it->first != vertex) return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(walks);
    }

    u64 total_count() const {
        u64 s = 0;
        for (const auto& [v, c] : counts) s += c;
        return s;
    }

    double squared_norm() const {
        double s = 0.0;
        for (const auto& [v, c] : counts) {
            const double p = static_cast<double>(c) / static_cast<double>(walks);
            s += p * p;
        }
        return s;
    }
};

// Algorithm: run R lazy walks of length t from x, keyed by
// (tag, x, rep, walk_base + w, step). Probes are charged in batch, one per
// actual move, so the graph counter advances by exactly the number of
// neighbor-slot reads.
inline WalkDistribution run_random_walks(const RegularGraph& g, u64 R, u32 t, u32 x,
                                         const Seed& seed, StreamTag tag, u64 rep,
                                         u64 walk_base = 0) {
    if (R < 1) throw std::invalid_argument("run_random_walks: R must be >= 1");
    if (x >= g.n()) throw std::invalid_argument("run_random_walks: start out of range");
    const u32 d = g.d();

    const size_t chunks = std::min<u64>(R, static_cast<u64>(thread_count()) * 8);
    const u64 per_chunk = (R + chunks - 1) / chunks;
    std::vector<std::map<u32, u32>> local_counts(chunks);
    std::vector<u64> local_probes(chunks, 0);

    parallel_for(chunks, [&](size_t c) {
        const u64 begin = static_cast<u64>(c) * per_chunk;
        const u64 end = std::min<u64>(R, begin + per_chunk);
        auto& counts = local_counts[c];
        u64 probes = 0;
        const WalkStream stream(seed, tag, x, rep, d);
        for (u64 w = begin; w < end; ++w) {
            const u64 walk_id = walk_base + w;
            u32 pos = x;
            for (u32 step = 1; step <= t; ++step) {
                const int choice = stream.step_choice(walk_id, step);
                if (choice >= 0) {
                    pos = g.slot(pos, static_cast<u32>(choice));
                    ++probes;
                }
            }
            ++counts[pos];
        }
        local_probes[c] = probes;
    });

    std::map<u32, u32> merged;
    u64 probes = 0;
    for (size_t c = 0; c < chunks; ++c) {
        for (const auto& [v, cnt] : local_counts[c]) merged[v] += cnt;
        probes += local_probes[c];
    }
    g.add_probes(probes);

    WalkDistribution out;
    out.start = x;
    out.t = t;
    out.walks = R;
    out.counts.assign(merged.begin(), merged.end());
    return out;
}

// Exact t-step lazy-walk distribution from x via sparse matrix-vector
// products over the slot lists. Test oracle for the empirical estimators.
inline std::vector<double> exact_walk_distribution(const RegularGraph& g, u32 t, u32 x,
                                                   size_t dense_limit = 50000) {
    if (g.n() > dense_limit)
        throw CapabilityError("exact_walk_distribution: n exceeds the dense limit");
    if (x >= g.n()) throw std::invalid_argument("exact_walk_distribution: start out of range");
    const size_t n = g.n();
    const double inv2d = 0.5 / static_cast<double>(g.d());
    std::vector<double> v(n, 0.0), next(n, 0.0);
    v[x] = 1.0;
    for (u32 step = 0; step < t; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (size_t y = 0; y < n; ++y) {
            const double m = v[y];
            if (m == 0.0) continue;
            next[y] += 0.5 * m;
            const double share = m * inv2d;
            for (u32 i = 0; i < g.d(); ++i) next[g.slot(y, i)] += share;
        }
        std::swap(v, next);
    }
    return v;
}

inline double tv_distance(const WalkDistribution& est, const std::vector<double>& exact) {
    double sum = 0.0;
    size_t idx = 0;
    for (size_t v = 0; v < exact.size(); ++v) {
        double emp = 0.0;
        if (idx < est.counts.size() && est.counts[idx].first == v) {
            emp = static_cast<double>(est.counts[idx].second) / static_cast<double>(est.walks);
            ++idx;
        }
        sum += std::abs(emp - exact[v]);
    }
    return 0.5 * sum;
}

// Columns are empirical walk distributions out of the sampled vertices I_S.
struct TransitionSample {
    std::vector<u32> sample;                // I_S, ordered, may repeat
    std::vector<WalkDistribution> columns;  // columns[j] starts at sample[j]
    u64 walks = 0;
    u32 t = 0;
};

// Duplicate sample entries get distinct walk-index keys (walk_base = j * R),
// so their columns are independent estimates sharing the start vertex.
inline TransitionSample estimate_transition_matrix(const RegularGraph& g,
                                                   const std::vector<u32>& I_S, u64 R, u32 t,
                                                   const Seed& seed, StreamTag tag, u64 rep) {
    if (I_S.empty()) throw std::invalid_argument("estimate_transition_matrix: empty sample");
    TransitionSample out;
    out.sample = I_S;
    out.walks = R;
    out.t = t;
    out.columns.resize(I_S.size());
    for (size_t j = 0; j < I_S.size(); ++j)
        out.columns[j] =
            run_random_walks(g, R, t, I_S[j], seed, tag, rep, static_cast<u64>(j) * R);
    return out;
}

// Exact M^t S as dense columns; oracle counterpart of TransitionSample.
inline std::vector<std::vector<double>> exact_transition_columns(const RegularGraph& g,
                                                                 const std::vector<u32>& I_S,
                                                                 u32 t,
                                                                 size_t dense_limit = 50000) {
    std::vector<std::vector<double>> cols(I_S.size());
    parallel_for(I_S.size(),
                 [&](size_t j) { cols[j] = exact_walk_distribution(g, t, I_S[j], dense_limit); });
    return cols;
}

namespace detail {

// <col_a of P, col_b of Q> for sparse endpoint counts via scatter + gather.
class SparseDotScratch {
public:
    explicit SparseDotScratch(size_t n) : dense_(n, 0.0) {}

    void scatter(const WalkDistribution& w) {
        clear();
        for (const auto& [v, c] : w.counts) {
            dense_[v] = static_cast<double>(c) / static_cast<double>(w.walks);
            touched_.push_back(v);
        }
    }

    double dot(const WalkDistribution& w) const {
        double s = 0.0;
        for (const auto& [v, c] : w.counts)
            s += dense_[v] * (static_cast<double>(c) / static_cast<double>(w.walks));
        return s;
    }

    void clear() {
        for (u32 v : touched_) dense_[v] = 0.0;
        touched_.clear();
    }

private:
    std::vector<double> dense_;
    std::vector<u32> touched_;
};

}  // namespace detail

// Gram estimate: for each repetition draw two independent transition samples
// P_i, Q_i, form the symmetrized product (P_i^T Q_i + Q_i^T P_i) / 2, and
// take the entrywise median over the (odd) repetition count.
inline Matrix estimate_collision_probabilities(const RegularGraph& g, const std::vector<u32>& I_S,
                                               u64 R, u32 t, u32 repetitions, const Seed& seed) {
    if (repetitions < 1 || repetitions % 2 == 0)
        throw std::invalid_argument("estimate_collision_probabilities: repetitions must be odd");
    const size_t s = I_S.size();
    std::vector<Matrix> grams;
    grams.reserve(repetitions);
    for (u32 i = 0; i < repetitions; ++i) {
        TransitionSample p = estimate_transition_matrix(g, I_S, R, t, seed, StreamTag::GramInitPair, i);
        TransitionSample q = estimate_transition_matrix(g, I_S, R, t, seed, StreamTag::GramInit, i);
        Matrix gi(s, s);
        parallel_for(s, [&](size_t a) {
            detail::SparseDotScratch pa(g.n()), qa(g.n());
            pa.scatter(p.columns[a]);
            qa.scatter(q.columns[a]);
            for (size_t b = a; b < s; ++b) {
                const double v = 0.5 * (pa.dot(q.columns[b]) + qa.dot(p.columns[b]));
                gi(a, b) = v;
                gi(b, a) = v;
            }
        });
        grams.push_back(std::move(gi));
    }
    if (repetitions == 1) return grams[0];
    Matrix out(s, s);
    std::vector<double> vals(repetitions);
    for (size_t a = 0; a < s; ++a)
        for (size_t b = a; b < s; ++b) {
            for (u32 i = 0; i < repetitions; ++i) vals[i] = grams[i](a, b);
            std::nth_element(vals.begin(), vals.begin() + repetitions / 2, vals.end());
            out(a, b) = vals[repetitions / 2];
            out(b, a) = out(a, b);
        }
    return out;
}

// Default walk length ceil(20 ln n / phi^2).
inline u32 default_walk_length(size_t n, double phi) {
    if (phi <= 0.0 || phi > 1.0) throw std::invalid_argument("default_walk_length: phi in (0,1]");
    return static_cast<u32>(std::ceil(20.0 * std::log(static_cast<double>(std::max<size_t>(n, 2))) /
                                      (phi * phi)));
}

// Default repetition count 2 ceil(log2 n) + 1 (odd).
inline u32 default_repetitions(size_t n) {
    u32 bits = 0;
    size_t v = std::max<size_t>(n, 2) - 1;
    while (v) {
        ++bits;
        v >>= 1;
    }
    return 2 * bits + 1;
}

}  // namespace sco
