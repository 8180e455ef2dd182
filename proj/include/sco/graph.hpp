// Bounded-degree graph model: d slots per vertex, self-loop padding, and
// probe-counted neighbor access. Conductance utilities work directly on the
// slot representation (self-loops never count as crossing edges).
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sco/common.hpp"

namespace sco {

class RegularGraph {
public:
    RegularGraph() = default;
    RegularGraph(size_t n, u32 d) : n_(n), d_(d), slots_(n * d, 0) {
        for (size_t x = 0; x < n; ++x)
            for (u32 i = 0; i < d; ++i) slots_[x * d + i] = static_cast<u32>(x);
    }

    RegularGraph(const RegularGraph& other)
        : n_(other.n_), d_(other.d_), slots_(other.slots_),
          probes_(other.probes_.load(std::memory_order_relaxed)) {}
    RegularGraph& operator=(const RegularGraph& other) {
        n_ = other.n_;
        d_ = other.d_;
        slots_ = other.slots_;
        probes_.store(other.probes_.load(std::memory_order_relaxed), std::memory_order_relaxed);
        return *this;
    }
    RegularGraph(RegularGraph&& other) noexcept
        : n_(other.n_), d_(other.d_), slots_(std::move(other.slots_)),
          probes_(other.probes_.load(std::memory_order_relaxed)) {}
    RegularGraph& operator=(RegularGraph&& other) noexcept {
        n_ = other.n_;
        d_ = other.d_;
        slots_ = std::move(other.slots_);
        probes_.store(other.probes_.load(std::memory_order_relaxed), std::memory_order_relaxed);
        return *this;
    }

    size_t n() const { return n_; }
    u32 d() const { return d_; }

    // The probe-counted access path: one neighbor-slot read, one probe.
    u32 neighbor(size_t x, u32 i) const {
        if (x >= n_) throw std::invalid_argument("neighbor: vertex out of range");
        if (i >= d_) throw std::invalid_argument("neighbor: slot out of range");
        probes_.fetch_add(1, std::memory_order_relaxed);
        return slots_[x * d_ + i];
    }

    // Uncounted slot read for bulk internal loops; callers account probes in
    // batches via add_probes so totals stay exact without per-read contention.
    u32 slot(size_t x, u32 i) const { return slots_[x * d_ + i]; }
    void add_probes(u64 count) const { probes_.fetch_add(count, std::memory_order_relaxed); }
    u64 probe_count() const { return probes_.load(std::memory_order_relaxed); }

    void set_slot(size_t x, u32 i, u32 y) { slots_[x * d_ + i] = y; }

    // Checks the multiset of non-loop slot endpoints equals its transpose.
    bool slot_symmetric() const {
        std::vector<std::pair<u32, u32>> fwd, rev;
        fwd.reserve(n_ * d_);
        rev.reserve(n_ * d_);
        for (size_t x = 0; x < n_; ++x)
            for (u32 i = 0; i < d_; ++i) {
                const u32 y = slots_[x * d_ + i];
                if (y == x) continue;
                fwd.emplace_back(static_cast<u32>(x), y);
                rev.emplace_back(y, static_cast<u32>(x));
            }
        std::sort(fwd.begin(), fwd.end());
        std::sort(rev.begin(), rev.end());
        return fwd == rev;
    }

private:
    size_t n_ = 0;
    u32 d_ = 0;
    std::vector<u32> slots_;
    mutable std::atomic<u64> probes_{0};
};

// Pads adjacency lists (max degree <= d) to exactly d slots per vertex with
// self-loops. Existing edges keep their multiplicity and slot order.
inline RegularGraph degree_regularize(const std::vector<std::vector<u32>>& adjacency, u32 d) {
    const size_t n = adjacency.size();
    RegularGraph g(n, d);
    for (size_t x = 0; x < n; ++x) {
        if (adjacency[x].size() > d) {
            throw std::invalid_argument("degree_regularize: vertex " + std::to_string(x) +
                                        " has degree " + std::to_string(adjacency[x].size()) +
                                        " > d");
        }
        u32 i = 0;
        for (u32 y : adjacency[x]) g.set_slot(x, i++, y);
        for (; i < d; ++i) g.set_slot(x, i, static_cast<u32>(x));
    }
    return g;
}

namespace detail {
inline std::vector<char> membership_mask(size_t n, const std::vector<u32>& set) {
    std::vector<char> mask(n, 0);
    for (u32 v : set) {
        if (v >= n) throw std::invalid_argument("vertex set: id out of range");
        mask[v] = 1;
    }
    return mask;
}
}  // namespace detail

// phi_C(S) = |E(S, C \ S)| / (d |S|), exact. Self-loops never cross.
inline double conductance_within(const RegularGraph& g, const std::vector<u32>& S,
                                 const std::vector<u32>& C) {
    if (S.empty()) throw std::invalid_argument("conductance_within: S is empty");
    auto in_s = detail::membership_mask(g.n(), S);
    auto in_c = detail::membership_mask(g.n(), C);
    for (u32 v : S)
        if (!in_c[v]) throw std::invalid_argument("conductance_within: S not contained in C");
    u64 crossing = 0;  // slot count from S into C\S; each edge contributes once per endpoint slot
    for (u32 x : S)
        for (u32 i = 0; i < g.d(); ++i) {
            const u32 y = g.slot(x, i);
            if (y != x && in_c[y] && !in_s[y]) ++crossing;
        }
    return static_cast<double>(crossing) / (static_cast<double>(g.d()) * static_cast<double>(S.size()));
}

inline double outer_conductance(const RegularGraph& g, const std::vector<u32>& C) {
    if (C.empty()) throw std::invalid_argument("outer_conductance: C is empty");
    auto in_c = detail::membership_mask(g.n(), C);
    u64 crossing = 0;
    for (u32 x : C)
        for (u32 i = 0; i < g.d(); ++i) {
            const u32 y = g.slot(x, i);
            if (y != x && !in_c[y]) ++crossing;
        }
    return static_cast<double>(crossing) / (static_cast<double>(g.d()) * static_cast<double>(C.size()));
}

// Exact internal conductance by exhaustive enumeration of S <= C, |S| <= |C|/2.
// Exponential in |C|; refuse above the limit.
inline double inner_conductance(const RegularGraph& g, const std::vector<u32>& C,
                                size_t exhaustive_limit = 20) {
    if (C.empty()) throw std::invalid_argument("inner_conductance: C is empty");
    if (C.size() == 1) return 1.0;
    if (C.size() > exhaustive_limit) {
        throw CapabilityError(
            "inner_conductance: |C| exceeds the exhaustive limit; use the spectral "
            "lower-bound check (lambda_{k+1} >= phi^2/2) instead");
    }
    const size_t m = C.size();
    auto in_c = detail::membership_mask(g.n(), C);
    std::vector<u32> index_of(g.n(), 0);
    for (size_t i = 0; i < m; ++i) index_of[C[i]] = static_cast<u32>(i);
    double best = 1.0;
    for (u64 mask = 1; mask + 1 < (1ULL << m); ++mask) {
        const int size = __builtin_popcountll(mask);
        if (static_cast<size_t>(2 * size) > m) continue;
        u64 crossing = 0;
        for (size_t i = 0; i < m; ++i) {
            if (!((mask >> i) & 1)) continue;
            const u32 x = C[i];
            for (u32 j = 0; j < g.d(); ++j) {
                const u32 y = g.slot(x, j);
                if (y != x && in_c[y] && !((mask >> index_of[y]) & 1)) ++crossing;
            }
        }
        best = std::min(best, static_cast<double>(crossing) /
                                  (static_cast<double>(g.d()) * static_cast<double>(size)));
    }
    return best;
}

// Text format: header "n d k", k lines of half-open cluster ranges "lo hi",
// then n lines of d neighbor ids (self-loop = own id). k may be 0.
struct GraphFile {
    RegularGraph graph;
    std::vector<std::pair<u32, u32>> cluster_ranges;
};

inline void write_graph(std::ostream& out, const RegularGraph& g,
                        const std::vector<std::pair<u32, u32>>& cluster_ranges) {
    out << g.n() << ' ' << g.d() << ' ' << cluster_ranges.size() << '\n';
    for (const auto& [lo, hi] : cluster_ranges) out << lo << ' ' << hi << '\n';
    for (size_t x = 0; x < g.n(); ++x) {
        for (u32 i = 0; i < g.d(); ++i) {
            if (i) out << ' ';
            out << g.slot(x, i);
        }
        out << '\n';
    }
}

inline void write_graph_file(const std::string& path, const RegularGraph& g,
                             const std::vector<std::pair<u32, u32>>& cluster_ranges) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_graph(out, g, cluster_ranges);
}

inline GraphFile read_graph(std::istream& in) {
    size_t n = 0;
    u32 d = 0;
    size_t k = 0;
    if (!(in >> n >> d >> k)) throw std::runtime_error("graph file: bad header");
    GraphFile file;
    file.cluster_ranges.resize(k);
    for (auto& [lo, hi] : file.cluster_ranges) {
        if (!(in >> lo >> hi) || lo >= hi || hi > n)
            throw std::runtime_error("graph file: bad cluster range");
    }
    file.graph = RegularGraph(n, d);
    for (size_t x = 0; x < n; ++x)
        for (u32 i = 0; i < d; ++i) {
            u32 y = 0;
            if (!(in >> y) || y >= n) throw std::runtime_error("graph file: bad neighbor id");
            file.graph.set_slot(x, i, y);
        }
    return file;
}

inline GraphFile read_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_graph(in);
}

}  // namespace sco
