// Run orchestration: configuration with JSON round-trip, metrics reports,
// partition serialization, the full gen -> init -> search -> sweep pipeline,
// and the probe-count scaling bench.
#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sco/baseline.hpp"
#include "sco/cluster_oracle.hpp"
#include "sco/common.hpp"
#include "sco/dot_oracle.hpp"
#include "sco/generator.hpp"
#include "sco/graph.hpp"
#include "sco/hash.hpp"

namespace sco {

using json = nlohmann::ordered_json;

inline std::string fnv1a_hex(const std::string& bytes) {
    u64 h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

struct RunConfig {
    // generator
    std::vector<size_t> sizes{1000, 1000};
    u32 d = 12;
    double p_cross = 0.1;
    double target_phi = 0.5;
    double max_size_ratio = 4.0;
    double expansion_floor = 0.05;
    bool certify = true;
    // oracle
    double delta = 0.5;
    double xi = 0.5;
    double c_R = 3.0;
    double c_s = 10.0;
    u32 m_override = 0;       // 0 = 2 ceil(log2 n) + 1
    u32 t_override = 0;       // 0 = ceil(20 ln n / phi_hat^2)
    u64 R_init_override = 0;  // 0 = c_R n^{1-delta} k^2 / xi^2
    u64 R_query_override = 0;
    u32 s_override = 0;
    // clustering
    double c_tau = 8.0;
    u64 s1 = 0, s2 = 0;        // 0 = derived defaults
    double size_floor = 0.0;   // 0 = n / (2 k ratio)
    double eta = 0.5;
    bool warmstart = true;
    size_t sample_size = 0;
    // evaluation thresholds (exit-code contract)
    double max_ratio_threshold = 0.05;
    size_t dot_error_pairs = 0;  // 0 = skip the dot-error quantile stage
    // misc
    Seed seed;
    int threads = 0;  // execution detail; never serialized, never hashed

    size_t k() const { return sizes.size(); }
    size_t n() const {
        size_t total = 0;
        for (size_t s : sizes) total += s;
        return total;
    }

    json to_json() const {
        json j;
        j["sizes"] = sizes;
        j["d"] = d;
        j["p_cross"] = p_cross;
        j["target_phi"] = target_phi;
        j["max_size_ratio"] = max_size_ratio;
        j["expansion_floor"] = expansion_floor;
        j["certify"] = certify;
        j["delta"] = delta;
        j["xi"] = xi;
        j["c_R"] = c_R;
        j["c_s"] = c_s;
        j["m_override"] = m_override;
        j["t_override"] = t_override;
        j["R_init_override"] = R_init_override;
        j["R_query_override"] = R_query_override;
        j["s_override"] = s_override;
        j["c_tau"] = c_tau;
        j["s1"] = s1;
        j["s2"] = s2;
        j["size_floor"] = size_floor;
        j["eta"] = eta;
        j["warmstart"] = warmstart;
        j["sample_size"] = sample_size;
        j["max_ratio_threshold"] = max_ratio_threshold;
        j["dot_error_pairs"] = dot_error_pairs;
        j["seed"] = seed.to_hex();
        return j;
    }

    static RunConfig from_json(const json& j) {
        RunConfig c;
        c.sizes = j.at("sizes").get<std::vector<size_t>>();
        c.d = j.at("d").get<u32>();
        c.p_cross = j.at("p_cross").get<double>();
        c.target_phi = j.at("target_phi").get<double>();
        c.max_size_ratio = j.at("max_size_ratio").get<double>();
        c.expansion_floor = j.at("expansion_floor").get<double>();
        c.certify = j.at("certify").get<bool>();
        c.delta = j.at("delta").get<double>();
        c.xi = j.at("xi").get<double>();
        c.c_R = j.at("c_R").get<double>();
        c.c_s = j.at("c_s").get<double>();
        c.m_override = j.at("m_override").get<u32>();
        c.t_override = j.at("t_override").get<u32>();
        c.R_init_override = j.at("R_init_override").get<u64>();
        c.R_query_override = j.at("R_query_override").get<u64>();
        c.s_override = j.at("s_override").get<u32>();
        c.c_tau = j.at("c_tau").get<double>();
        c.s1 = j.at("s1").get<u64>();
        c.s2 = j.at("s2").get<u64>();
        c.size_floor = j.at("size_floor").get<double>();
        c.eta = j.at("eta").get<double>();
        c.warmstart = j.at("warmstart").get<bool>();
        c.sample_size = j.at("sample_size").get<size_t>();
        c.max_ratio_threshold = j.at("max_ratio_threshold").get<double>();
        c.dot_error_pairs = j.at("dot_error_pairs").get<size_t>();
        c.seed = Seed::from_hex(j.at("seed").get<std::string>());
        c.threads = j.value("threads", 0);
        return c;
    }

    std::string hash() const { return fnv1a_hex(to_json().dump()); }

    OracleParams oracle_params(size_t n, double phi_hat) const {
        OracleParams p = default_params(n, static_cast<u32>(k()), phi_hat, delta, xi, c_R, c_s);
        if (m_override) p.m = m_override;
        if (t_override) p.t = t_override;
        if (R_init_override) p.R_init = R_init_override;
        if (R_query_override) p.R_query = R_query_override;
        if (s_override) p.s = s_override;
        return p;
    }

    ClusterConfig cluster_config(const ClusterableInstance& inst) const {
        ClusterConfig cc;
        cc.s1 = s1;
        cc.s2 = s2;
        cc.c_tau = c_tau;
        cc.eps_hat = inst.eps_hat;
        cc.phi_hat = inst.phi_hat();
        cc.size_floor = size_floor;
        cc.max_size_ratio = max_size_ratio;
        return cc;
    }
};

inline json instance_metadata(const ClusterableInstance& inst, const std::string& config_hash) {
    json j;
    j["n"] = inst.graph.n();
    j["d"] = inst.graph.d();
    j["k"] = inst.k;
    j["seed"] = inst.seed.to_hex();
    j["target_phi"] = inst.target_phi;
    j["target_eps"] = inst.target_eps;
    j["max_size_ratio"] = inst.max_size_ratio;
    j["outer_conductance_per_cluster"] = inst.outer_per_cluster;
    j["eps_hat"] = inst.eps_hat;
    j["certified"] = inst.certified;
    if (inst.certified) {
        j["lambda_k"] = inst.lambda_k;
        j["lambda_k1"] = inst.lambda_k1;
        j["phi_hat"] = inst.phi_hat();
    }
    j["config_hash"] = config_hash;
    return j;
}

// ---- partition serialization ----

inline json partition_to_json(const OrderedPartition& part, const Seed& seed,
                              const std::string& config_hash) {
    json j;
    j["k"] = part.k();
    j["warmstart"] = part.warmstart;
    j["seed"] = seed.to_hex();
    j["config_hash"] = config_hash;
    json centers = json::array();
    for (const auto& c : part.centers) centers.push_back(c.members);
    j["centers"] = centers;
    // spec format: stages as arrays of member-vertex arrays
    json stages = json::array();
    for (const auto& stage : part.stages) {
        json st = json::array();
        for (u32 c : stage) st.push_back(part.centers[c].members);
        stages.push_back(st);
    }
    j["stages"] = stages;
    return j;
}

inline OrderedPartition partition_from_json(const json& j, Seed* seed_out = nullptr) {
    OrderedPartition part;
    part.warmstart = j.at("warmstart").get<bool>();
    if (seed_out) *seed_out = Seed::from_hex(j.at("seed").get<std::string>());
    for (const auto& members : j.at("centers"))
        part.centers.push_back(CenterRef{members.get<std::vector<u32>>()});
    for (const auto& st : j.at("stages")) {
        std::vector<u32> stage;
        for (const auto& members : st) {
            const auto m = members.get<std::vector<u32>>();
            u32 found = kUnassigned;
            for (size_t c = 0; c < part.centers.size(); ++c)
                if (part.centers[c].members == m) {
                    found = static_cast<u32>(c);
                    break;
                }
            if (found == kUnassigned) throw std::runtime_error("partition file: unknown stage center");
            stage.push_back(found);
        }
        part.stages.push_back(stage);
    }
    return part;
}

// ---- full pipeline ----

struct MetricsReport {
    json data;  // everything except wall clock is deterministic for a fixed config

    std::string dump() const { return data.dump(2); }

    // byte comparison target: the report with the wall-clock field removed
    std::string deterministic_dump() const {
        json copy = data;
        copy.erase("wall_clock_sec");
        return copy.dump(2);
    }

    bool passed() const { return data.at("thresholds_met").get<bool>(); }
};

// gen -> init -> find-centers -> full sweep -> evaluation (+ optional
// dot-error quantiles vs the exact baseline). Exit contract: thresholds_met.
inline MetricsReport full_pipeline(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.threads > 0) set_thread_count(cfg.threads);
    MetricsReport rep;
    rep.data["config"] = cfg.to_json();
    rep.data["config_hash"] = cfg.hash();

    GenParams gp;
    gp.sizes = cfg.sizes;
    gp.d = cfg.d;
    gp.p_cross = cfg.p_cross;
    gp.seed = cfg.seed;
    gp.target_phi = cfg.target_phi;
    gp.max_size_ratio = cfg.max_size_ratio;
    gp.expansion_floor = cfg.expansion_floor;
    gp.certify = cfg.certify;
    ClusterableInstance inst = generate_clusterable(gp);
    const RegularGraph& g = inst.graph;
    rep.data["instance"] = instance_metadata(inst, cfg.hash());

    const u64 probes_gen = g.probe_count();
    OracleParams params = cfg.oracle_params(g.n(), inst.phi_hat());
    OracleData D = initialize_oracle(g, params, cfg.seed);
    const u64 probes_init = g.probe_count() - probes_gen;
    rep.data["oracle"] = {{"t", params.t},         {"R_init", params.R_init},
                          {"R_query", params.R_query}, {"s", params.s},
                          {"m", params.m},         {"eigen_report", D.eigen_report},
                          {"probes_init", probes_init}};

    DotCache cache(g, D);
    FindCentersConfig fc;
    fc.cluster = cfg.cluster_config(inst);
    fc.sample_size = cfg.sample_size;
    std::vector<u32> gt_labels(g.n(), 0);
    const auto gt = inst.ground_truth();
    for (size_t c = 0; c < gt.size(); ++c)
        for (u32 x : gt[c]) gt_labels[x] = static_cast<u32>(c);
    if (cfg.warmstart) fc.ground_truth = gt_labels;
    OrderedPartition part =
        find_centers(g, cache, inst.k, cfg.eta,
                     cfg.warmstart ? SearchMode::GroundTruthWarmstart : SearchMode::Exhaustive,
                     cfg.seed, fc);
    const u64 probes_search = g.probe_count() - probes_gen - probes_init;

    StagedMembership mem(cache, part.centers, part.stages);
    std::vector<u32> labels(g.n(), 0);
    const u64 before_sweep = g.probe_count();
    for (size_t x = 0; x < g.n(); ++x)
        labels[x] = assign_query(mem, part, static_cast<u32>(x), cfg.seed);
    const u64 probes_sweep = g.probe_count() - before_sweep;

    EvalReport eval = evaluate_clustering(labels, gt, inst.k);
    std::vector<double> out_conductance(inst.k, 0.0);
    {
        std::vector<std::vector<u32>> found(inst.k);
        for (size_t x = 0; x < g.n(); ++x) found[labels[x]].push_back(static_cast<u32>(x));
        for (size_t c = 0; c < inst.k; ++c)
            out_conductance[c] = found[c].empty() ? 1.0 : outer_conductance(g, found[c]);
    }

    rep.data["partition"] = partition_to_json(part, cfg.seed, cfg.hash());
    rep.data["eval"] = {{"per_cluster_ratio", eval.per_cluster_ratio},
                        {"max_ratio", eval.max_ratio},
                        {"output_cluster_conductance", out_conductance},
                        {"probes_search", probes_search},
                        {"probes_sweep", probes_sweep},
                        {"probes_per_query_amortized",
                         static_cast<double>(probes_sweep) / static_cast<double>(g.n())}};

    bool thresholds_met = eval.max_ratio <= cfg.max_ratio_threshold;

    if (cfg.dot_error_pairs > 0 && g.n() <= kDenseEigLimit) {
        const SpectralEmbedding emb = bottom_k_embedding(g, inst.k);
        std::vector<double> errors;
        errors.reserve(cfg.dot_error_pairs);
        for (size_t i = 0; i < cfg.dot_error_pairs; ++i) {
            const u32 x = static_cast<u32>(uniform_below(cfg.seed, StreamTag::SampleS, 1u << 20, 2 * i, g.n()));
            const u32 y = static_cast<u32>(uniform_below(cfg.seed, StreamTag::SampleS, 1u << 20, 2 * i + 1, g.n()));
            errors.push_back(std::abs(cache.dot(x, y) - exact_dot(emb, x, y)));
        }
        std::sort(errors.begin(), errors.end());
        const double median = errors[errors.size() / 2];
        const double p90 = errors[static_cast<size_t>(0.9 * static_cast<double>(errors.size() - 1))];
        rep.data["dot_error"] = {{"pairs", cfg.dot_error_pairs},
                                 {"median", median},
                                 {"p90", p90},
                                 {"xi_over_n", cfg.xi / static_cast<double>(g.n())}};
        thresholds_met = thresholds_met && p90 <= cfg.xi / static_cast<double>(g.n());
    }

    rep.data["thresholds_met"] = thresholds_met;
    rep.data["wall_clock_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---- probe-count scaling bench ----

struct BenchCell {
    size_t n = 0;
    u64 probes_init = 0;
    double probes_per_query = 0.0;
    u32 t = 0;
    u64 R_init = 0, R_query = 0;
    u32 s = 0, m = 0;
};

// For each n: generate (uncertified), initialize at the configured delta,
// then run fresh uncached queries over random pairs and average the probes.
inline std::vector<BenchCell> bench_scaling(const RunConfig& base, const std::vector<size_t>& ns,
                                            size_t queries = 100) {
    std::vector<BenchCell> cells;
    for (size_t n : ns) {
        RunConfig cfg = base;
        const size_t k = cfg.k();
        cfg.sizes.assign(k, n / k);
        GenParams gp;
        gp.sizes = cfg.sizes;
        gp.d = cfg.d;
        gp.p_cross = cfg.p_cross;
        gp.seed = cfg.seed;
        gp.target_phi = cfg.target_phi;
        gp.certify = false;  // probe accounting only; keep cells uniform
        ClusterableInstance inst = generate_clusterable(gp);
        const RegularGraph& g = inst.graph;

        OracleParams params = cfg.oracle_params(g.n(), cfg.target_phi);
        const u64 before_init = g.probe_count();
        OracleData D = initialize_oracle(g, params, cfg.seed);
        BenchCell cell;
        cell.n = g.n();
        cell.probes_init = g.probe_count() - before_init;
        cell.t = params.t;
        cell.R_init = params.R_init;
        cell.R_query = params.R_query;
        cell.s = params.s;
        cell.m = params.m;

        const u64 before_q = g.probe_count();
        for (size_t i = 0; i < queries; ++i) {
            const u32 x = static_cast<u32>(uniform_below(cfg.seed, StreamTag::SampleS, 7, 2 * i, g.n()));
            const u32 y = static_cast<u32>(uniform_below(cfg.seed, StreamTag::SampleS, 7, 2 * i + 1, g.n()));
            spectral_dot_product(g, x, y, D);
        }
        cell.probes_per_query =
            static_cast<double>(g.probe_count() - before_q) / static_cast<double>(queries);
        cells.push_back(cell);
    }
    return cells;
}

inline json bench_to_json(const std::vector<BenchCell>& cells) {
    json j = json::array();
    for (size_t i = 0; i < cells.size(); ++i) {
        json c;
        c["n"] = cells[i].n;
        c["probes_init"] = cells[i].probes_init;
        c["probes_per_query"] = cells[i].probes_per_query;
        c["t"] = cells[i].t;
        c["R_init"] = cells[i].R_init;
        c["R_query"] = cells[i].R_query;
        c["s"] = cells[i].s;
        c["m"] = cells[i].m;
        if (i > 0) {
            c["query_probe_ratio_vs_prev"] =
                cells[i].probes_per_query / cells[i - 1].probes_per_query;
            c["init_probe_ratio_vs_prev"] = static_cast<double>(cells[i].probes_init) /
                                            static_cast<double>(cells[i - 1].probes_init);
        }
        j.push_back(c);
    }
    return j;
}

inline std::string bench_to_csv(const std::vector<BenchCell>& cells) {
    std::ostringstream out;
    out << "n,probes_init,probes_per_query,t,R_init,R_query,s,m\n";
    for (const auto& c : cells)
        out << c.n << ',' << c.probes_init << ',' << c.probes_per_query << ',' << c.t << ','
            << c.R_init << ',' << c.R_query << ',' << c.s << ',' << c.m << '\n';
    return out.str();
}

}  // namespace sco
