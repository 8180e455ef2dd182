// The spectral dot-product sketch: preprocessing samples s vertices, stores m
// transition samples plus Psi derived from the collision Gram matrix, and a
// query multiplies fresh walk statistics through Psi to approximate
// <f_x, f_y> within xi/n.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sco/common.hpp"
#include "sco/graph.hpp"
#include "sco/hash.hpp"
#include "sco/linalg.hpp"
#include "sco/walks.hpp"

namespace sco {

struct OracleParams {
    double delta = 0.5;  // preprocessing/query trade-off exponent, in (0, 1/2]
    double xi = 0.5;     // target accuracy: |apx - exact| <= xi / n
    u32 t = 0;           // walk length
    u64 R_init = 0;      // walks per preprocessing column
    u64 R_query = 0;     // walks per query batch
    u32 s = 0;           // sampled columns
    u32 m = 0;           // median repetitions (odd)
    u32 k = 0;           // cluster count
    double eig_floor = 1e-9;

    void validate(size_t n) const {
        if (k < 1) throw std::invalid_argument("OracleParams: k must be >= 1");
        if (s < k) throw std::invalid_argument("OracleParams: s must be >= k");
        if (m < 1 || m % 2 == 0) throw std::invalid_argument("OracleParams: m must be odd");
        if (R_init < 1 || R_query < 1) throw std::invalid_argument("OracleParams: R must be >= 1");
        if (delta <= 0.0 || delta > 0.5)
            throw std::invalid_argument("OracleParams: delta must be in (0, 1/2]");
        const double lo = std::pow(static_cast<double>(std::max<size_t>(n, 2)), -5.0);
        if (xi <= lo || xi >= 1.0)
            throw std::invalid_argument("OracleParams: xi must be in (n^-5, 1)");
    }
};

// Desk-scale defaults: R_init = c_R n^{1-delta} k^2 / xi^2,
// R_query = c_R n^{delta} k^2 / xi^2, s = c_s k^2 ceil(ln n). The c constants
// are deliberately small; the asymptotic settings are far out of reach.
inline OracleParams default_params(size_t n, u32 k, double phi, double delta = 0.5,
                                   double xi = 0.5, double c_R = 3.0, double c_s = 10.0) {
    OracleParams p;
    p.delta = delta;
    p.xi = xi;
    p.k = k;
    p.t = default_walk_length(n, phi);
    const double k2 = static_cast<double>(k) * static_cast<double>(k);
    const double nd = static_cast<double>(n);
    p.R_init = static_cast<u64>(std::llround(std::max(1.0, c_R * std::pow(nd, 1.0 - delta) * k2 / (xi * xi))));
    p.R_query = static_cast<u64>(std::llround(std::max(1.0, c_R * std::pow(nd, delta) * k2 / (xi * xi))));
    const u32 logn = static_cast<u32>(std::ceil(std::log(std::max(nd, 2.0))));
    p.s = static_cast<u32>(c_s * k2) * logn;
    p.m = default_repetitions(n);
    return p;
}

struct OracleData {
    Matrix psi;                             // s x s
    std::vector<TransitionSample> qhats;    // m stored transition samples
    std::vector<u32> I_S;
    OracleParams params;
    Seed seed;
    std::vector<double> eigen_report;       // top k+1 eigenvalues of (n/s) G
    u64 n = 0;
    u32 d = 0;
};

// InitializeOracle: sample I_S, store m transition samples, estimate the
// collision Gram, eigendecompose (n/s) G and keep the top-k pseudoinverse
// square Psi = (n/s) W_k diag(lambda^-2) W_k^T.
inline OracleData initialize_oracle(const RegularGraph& g, const OracleParams& params,
                                    const Seed& seed) {
    params.validate(g.n());
    OracleData data;
    data.params = params;
    data.seed = seed;
    data.n = g.n();
    data.d = g.d();
    data.I_S = sample_vertices(seed, StreamTag::SampleIS, 0, params.s, g.n(), true);

    data.qhats.reserve(params.m);
    for (u32 i = 0; i < params.m; ++i)
        data.qhats.push_back(estimate_transition_matrix(g, data.I_S, params.R_init, params.t,
                                                        seed, StreamTag::WalkInit, i));

    Matrix gram = estimate_collision_probabilities(g, data.I_S, params.R_init, params.t,
                                                   params.m, seed);
    const double scale = static_cast<double>(g.n()) / static_cast<double>(params.s);
    for (size_t a = 0; a < params.s; ++a)
        for (size_t b = 0; b < params.s; ++b) gram(a, b) *= scale;

    EigResult eig = symmetric_eig(gram);  // descending
    const size_t report = std::min<size_t>(params.k + 1, eig.values.size());
    data.eigen_report.assign(eig.values.begin(), eig.values.begin() + static_cast<long>(report));

    if (eig.values[params.k - 1] <= params.eig_floor) {
        throw InitFailure("initialize_oracle: k-th eigenvalue of (n/s) Gram is below the floor; "
                          "walk length too long or sample too small",
                          data.eigen_report);
    }

    data.psi = Matrix(params.s, params.s);
    for (u32 j = 0; j < params.k; ++j) {
        const double w = scale / (eig.values[j] * eig.values[j]);
        for (size_t a = 0; a < params.s; ++a) {
            const double va = eig.vectors(a, j);
            if (va == 0.0) continue;
            for (size_t b = 0; b < params.s; ++b)
                data.psi(a, b) += w * va * eig.vectors(b, j);
        }
    }
    return data;
}

// alpha_x: entrywise median over the m repetitions of Q_i^T m_x^i, where
// m_x^i is a fresh batch of R_query walks from x. Key streams depend only on
// the vertex, so recomputation is bit-identical.
inline std::vector<double> alpha_vector(const RegularGraph& g, u32 x, const OracleData& D) {
    const OracleParams& p = D.params;
    std::vector<std::vector<double>> per_rep(p.m, std::vector<double>(p.s, 0.0));
    std::vector<double> dense(g.n(), 0.0);
    for (u32 i = 0; i < p.m; ++i) {
        const WalkDistribution mx =
            run_random_walks(g, p.R_query, p.t, x, D.seed, StreamTag::WalkQuery, i);
        for (const auto& [v, c] : mx.counts)
            dense[v] = static_cast<double>(c) / static_cast<double>(mx.walks);
        const TransitionSample& q = D.qhats[i];
        for (u32 j = 0; j < p.s; ++j) {
            double dot = 0.0;
            for (const auto& [v, c] : q.columns[j].counts)
                dot += dense[v] * (static_cast<double>(c) / static_cast<double>(q.walks));
            per_rep[i][j] = dot;
        }
        for (const auto& [v, c] : mx.counts) dense[v] = 0.0;
    }
    std::vector<double> alpha(p.s, 0.0);
    std::vector<double> vals(p.m);
    for (u32 j = 0; j < p.s; ++j) {
        for (u32 i = 0; i < p.m; ++i) vals[i] = per_rep[i][j];
        std::nth_element(vals.begin(), vals.begin() + p.m / 2, vals.end());
        alpha[j] = vals[p.m / 2];
    }
    return alpha;
}

inline std::vector<double> psi_times(const OracleData& D, const std::vector<double>& v) {
    const size_t s = D.params.s;
    std::vector<double> out(s, 0.0);
    for (size_t a = 0; a < s; ++a) {
        double acc = 0.0;
        for (size_t b = 0; b < s; ++b) acc += D.psi(a, b) * v[b];
        out[a] = acc;
    }
    return out;
}

// SpectralDotProductOracle: alpha_x^T Psi alpha_y.
inline double spectral_dot_product(const RegularGraph& g, u32 x, u32 y, const OracleData& D) {
    if (x >= g.n() || y >= g.n())
        throw std::invalid_argument("spectral_dot_product: vertex out of range");
    const std::vector<double> ax = alpha_vector(g, x, D);
    const std::vector<double> psi_ay = psi_times(D, alpha_vector(g, y, D));
    double out = 0.0;
    for (size_t j = 0; j < ax.size(); ++j) out += ax[j] * psi_ay[j];
    return out;
}

// Memoizes alpha and Psi alpha per vertex. Queries through the cache are
// bit-identical to fresh computation (keyed walks), they just skip rework.
// Not thread-safe; each worker should own one.
class DotCache {
public:
    DotCache(const RegularGraph& g, const OracleData& D) : g_(&g), D_(&D) {}

    const std::vector<double>& alpha(u32 x) {
        auto it = alpha_.find(x);
        if (it == alpha_.end()) it = alpha_.emplace(x, alpha_vector(*g_, x, *D_)).first;
        return it->second;
    }

    const std::vector<double>& psi_alpha(u32 x) {
        auto it = psi_alpha_.find(x);
        if (it == psi_alpha_.end()) it = psi_alpha_.emplace(x, psi_times(*D_, alpha(x))).first;
        return it->second;
    }

    double dot(u32 x, u32 y) {
        const auto& ax = alpha(x);
        const auto& pay = psi_alpha(y);
        double out = 0.0;
        for (size_t j = 0; j < ax.size(); ++j) out += ax[j] * pay[j];
        return out;
    }

    const OracleData& data() const { return *D_; }
    const RegularGraph& graph() const { return *g_; }

private:
    const RegularGraph* g_;
    const OracleData* D_;
    std::unordered_map<u32, std::vector<double>> alpha_;
    std::unordered_map<u32, std::vector<double>> psi_alpha_;
};

// ---- binary serialization (explicit little-endian layout) ----

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "oracle files assume a little-endian host");

constexpr char kOracleMagic[8] = {'S', 'C', 'O', 'D', 'A', 'T', 'A', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("oracle file: truncated");
    return v;
}

}  // namespace detail

inline void save_oracle(std::ostream& out, const OracleData& D) {
    using detail::put;
    out.write(detail::kOracleMagic, 8);
    put<u32>(out, 1);  // version
    put<double>(out, D.params.delta);
    put<double>(out, D.params.xi);
    put<u32>(out, D.params.t);
    put<u64>(out, D.params.R_init);
    put<u64>(out, D.params.R_query);
    put<u32>(out, D.params.s);
    put<u32>(out, D.params.m);
    put<u32>(out, D.params.k);
    put<double>(out, D.params.eig_floor);
    put<u64>(out, D.seed.hi);
    put<u64>(out, D.seed.lo);
    put<u64>(out, D.n);
    put<u32>(out, D.d);
    put<u32>(out, static_cast<u32>(D.eigen_report.size()));
    for (double v : D.eigen_report) put<double>(out, v);
    for (u32 v : D.I_S) put<u32>(out, v);
    // CSC-style blocks: per sample, column pointers then (row, count) pairs.
    for (const TransitionSample& q : D.qhats) {
        u64 nnz = 0;
        put<u64>(out, q.walks);
        put<u32>(out, q.t);
        for (const auto& col : q.columns) nnz += col.counts.size();
        put<u64>(out, nnz);
        u64 ptr = 0;
        for (const auto& col : q.columns) {
            put<u64>(out, ptr);
            ptr += col.counts.size();
        }
        put<u64>(out, ptr);
        for (const auto& col : q.columns)
            for (const auto& [v, c] : col.counts) {
                put<u32>(out, v);
                put<u32>(out, c);
            }
    }
    out.write(reinterpret_cast<const char*>(D.psi.data()),
              static_cast<std::streamsize>(sizeof(double) * D.params.s * D.params.s));
}

inline OracleData load_oracle(std::istream& in) {
    using detail::get;
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::kOracleMagic, 8) != 0)
        throw std::runtime_error("oracle file: bad magic");
    if (get<u32>(in) != 1) throw std::runtime_error("oracle file: unsupported version");
    OracleData D;
    D.params.delta = get<double>(in);
    D.params.xi = get<double>(in);
    D.params.t = get<u32>(in);
    D.params.R_init = get<u64>(in);
    D.params.R_query = get<u64>(in);
    D.params.s = get<u32>(in);
    D.params.m = get<u32>(in);
    D.params.k = get<u32>(in);
    D.params.eig_floor = get<double>(in);
    D.seed.hi = get<u64>(in);
    D.seed.lo = get<u64>(in);
    D.n = get<u64>(in);
    D.d = get<u32>(in);
    const u32 reports = get<u32>(in);
    D.eigen_report.resize(reports);
    for (double& v : D.eigen_report) v = get<double>(in);
    D.I_S.resize(D.params.s);
    for (u32& v : D.I_S) v = get<u32>(in);
    D.qhats.resize(D.params.m);
    for (TransitionSample& q : D.qhats) {
        q.sample = D.I_S;
        q.walks = get<u64>(in);
        q.t = get<u32>(in);
        const u64 nnz = get<u64>(in);
        std::vector<u64> ptr(D.params.s + 1);
        for (u64& p : ptr) p = get<u64>(in);
        if (ptr.back() != nnz) throw std::runtime_error("oracle file: bad column pointers");
        q.columns.resize(D.params.s);
        for (u32 j = 0; j < D.params.s; ++j) {
            q.columns[j].start = D.I_S[j];
            q.columns[j].t = q.t;
            q.columns[j].walks = q.walks;
            q.columns[j].counts.resize(ptr[j + 1] - ptr[j]);
            for (auto& [v, c] : q.columns[j].counts) {
                v = get<u32>(in);
                c = get<u32>(in);
            }
        }
    }
    D.psi = Matrix(D.params.s, D.params.s);
    in.read(reinterpret_cast<char*>(D.psi.data()),
            static_cast<std::streamsize>(sizeof(double) * D.params.s * D.params.s));
    if (!in) throw std::runtime_error("oracle file: truncated psi");
    return D;
}

inline void save_oracle_file(const std::string& path, const OracleData& D) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_oracle(out, D);
}

inline OracleData load_oracle_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return load_oracle(in);
}

}  // namespace sco
