// Command-line surface: gen, spectrum, init-oracle, dot, walk-stats,
// find-centers, query, eval, bench-scaling, full-pipeline.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sco/baseline.hpp"
#include "sco/cluster_oracle.hpp"
#include "sco/dot_oracle.hpp"
#include "sco/generator.hpp"
#include "sco/graph.hpp"
#include "sco/pipeline.hpp"
#include "sco/walks.hpp"

namespace {

std::string output_dir() {
    const char* dir = std::getenv("SCO_OUTPUT_DIR");
    return dir && *dir ? std::string(dir) : std::string(".");
}

std::string resolve(const std::string& path) {
    if (path.empty() || path[0] == '/' || path.rfind("./", 0) == 0) return path;
    return output_dir() + "/" + path;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

sco::RunConfig load_config(const std::string& path) {
    if (path.empty()) return sco::RunConfig{};
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    sco::json j;
    in >> j;
    return sco::RunConfig::from_json(j);
}

// metadata sidecar lets later stages reuse measured conductance proxies
sco::json read_metadata(const std::string& graph_path) {
    std::ifstream in(graph_path + ".meta.json");
    if (!in) return sco::json{};
    sco::json j;
    in >> j;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sublinear spectral clustering oracle"};
    app.require_subcommand(1);
    std::string seed_hex = "1";
    app.add_option("--seed", seed_hex, "root seed as up to 32 hex digits");
    int threads = 0;
    app.add_option("--threads", threads, "worker thread count (0 = hardware)");

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate a clusterable instance");
    std::vector<size_t> sizes;
    sco::u32 d = 12;
    double p_cross = 0.0, target_phi = 0.5, max_ratio = 4.0, floor = 0.05;
    size_t gen_k = 0;
    bool no_certify = false;
    std::string out_path = "graph.txt";
    gen->add_option("--k", gen_k, "cluster count (used with equal sizes via --n)");
    gen->add_option("--sizes", sizes, "cluster sizes")->delimiter(',');
    gen->add_option("--d", d, "slot degree");
    gen->add_option("--pcross", p_cross, "expected cross-edges per vertex");
    gen->add_option("--phi", target_phi, "target inner conductance (recorded)");
    gen->add_option("--max-size-ratio", max_ratio, "allowed max/min cluster size ratio");
    gen->add_option("--expansion-floor", floor, "required lambda_{k+1}");
    gen->add_flag("--no-certify", no_certify, "skip the spectral certificate");
    gen->add_option("--out", out_path, "output graph path");

    // ---- spectrum ----
    auto* spectrum = app.add_subcommand("spectrum", "bottom eigenvalues of a graph file");
    std::string spec_graph;
    size_t spec_k = 2;
    spectrum->add_option("--graph", spec_graph)->required();
    spectrum->add_option("--k", spec_k);

    // ---- init-oracle ----
    auto* init = app.add_subcommand("init-oracle", "preprocess the dot-product sketch");
    std::string init_graph, init_out = "oracle.bin";
    double delta = 0.5, xi = 0.5, c_R = 3.0, c_s = 10.0, init_phi = 0.0;
    sco::u32 m_override = 0, t_override = 0, s_override = 0;
    sco::u64 r_init_override = 0, r_query_override = 0;
    size_t init_k = 0;
    init->add_option("--graph", init_graph)->required();
    init->add_option("--delta", delta);
    init->add_option("--xi", xi);
    init->add_option("--k", init_k, "cluster count (default: from graph header)");
    init->add_option("--phi", init_phi, "conductance for the walk length (default: metadata)");
    init->add_option("--c-r", c_R);
    init->add_option("--c-s", c_s);
    init->add_option("--m", m_override);
    init->add_option("--t", t_override);
    init->add_option("--s", s_override);
    init->add_option("--r-init", r_init_override);
    init->add_option("--r-query", r_query_override);
    init->add_option("--out", init_out);

    // ---- dot ----
    auto* dot = app.add_subcommand("dot", "query one approximate dot product");
    std::string dot_graph, dot_oracle;
    sco::u32 dot_x = 0, dot_y = 0;
    dot->add_option("--graph", dot_graph)->required();
    dot->add_option("--oracle", dot_oracle)->required();
    dot->add_option("--x", dot_x)->required();
    dot->add_option("--y", dot_y)->required();

    // ---- walk-stats ----
    auto* walk_stats = app.add_subcommand("walk-stats", "TV diagnostics of walk estimates");
    std::string ws_graph;
    sco::u64 ws_R = 10000;
    sco::u32 ws_t = 0;
    size_t ws_starts = 10;
    double ws_phi = 0.5;
    walk_stats->add_option("--graph", ws_graph)->required();
    walk_stats->add_option("--r", ws_R);
    walk_stats->add_option("--t", ws_t, "walk length (default from --phi)");
    walk_stats->add_option("--phi", ws_phi);
    walk_stats->add_option("--starts", ws_starts);

    // ---- find-centers ----
    auto* fc = app.add_subcommand("find-centers", "search for an accepted ordered partition");
    std::string fc_graph, fc_oracle, fc_mode = "exhaustive", fc_out = "partition.json";
    double fc_eta = 0.5, fc_ctau = 8.0;
    size_t fc_sample = 0;
    sco::u64 fc_s1 = 0, fc_s2 = 0;
    fc->add_option("--graph", fc_graph)->required();
    fc->add_option("--oracle", fc_oracle)->required();
    fc->add_option("--eta", fc_eta);
    fc->add_option("--mode", fc_mode)->check(CLI::IsMember({"exhaustive", "ground-truth-warmstart"}));
    fc->add_option("--sample", fc_sample);
    fc->add_option("--s1", fc_s1);
    fc->add_option("--s2", fc_s2);
    fc->add_option("--c-tau", fc_ctau);
    fc->add_option("--out", fc_out);

    // ---- query ----
    auto* query = app.add_subcommand("query", "label one vertex");
    std::string q_graph, q_oracle, q_partition;
    sco::u32 q_x = 0;
    query->add_option("--graph", q_graph)->required();
    query->add_option("--oracle", q_oracle)->required();
    query->add_option("--partition", q_partition)->required();
    query->add_option("--x", q_x)->required();

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "sweep all vertices and score vs ground truth");
    std::string e_graph, e_oracle, e_partition;
    eval->add_option("--graph", e_graph)->required();
    eval->add_option("--oracle", e_oracle)->required();
    eval->add_option("--partition", e_partition)->required();

    // ---- bench-scaling ----
    auto* bench = app.add_subcommand("bench-scaling", "probe-count scaling across sizes");
    std::vector<size_t> bench_ns;
    std::string bench_config, bench_csv;
    size_t bench_queries = 100;
    bench->add_option("--n", bench_ns, "total vertex counts")->delimiter(',')->required();
    bench->add_option("--config", bench_config);
    bench->add_option("--queries", bench_queries);
    bench->add_option("--csv", bench_csv, "also write a CSV table");

    // ---- full-pipeline ----
    auto* full = app.add_subcommand("full-pipeline", "gen + init + search + sweep + eval");
    std::string full_config, full_out;
    full->add_option("--config", full_config);
    full->add_option("--out", full_out, "write the metrics report here");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) sco::set_thread_count(threads);
    const sco::Seed seed = sco::Seed::from_hex(seed_hex);

    try {
        if (*gen) {
            sco::GenParams gp;
            if (sizes.empty() && gen_k > 0)
                throw std::invalid_argument("gen: provide --sizes (comma separated)");
            gp.sizes = sizes;
            gp.d = d;
            gp.p_cross = p_cross;
            gp.seed = seed;
            gp.target_phi = target_phi;
            gp.max_size_ratio = max_ratio;
            gp.expansion_floor = floor;
            gp.certify = !no_certify;
            sco::ClusterableInstance inst = sco::generate_clusterable(gp);
            const std::string path = resolve(out_path);
            sco::write_graph_file(path, inst.graph, inst.cluster_ranges);
            write_text(path + ".meta.json", sco::instance_metadata(inst, "").dump(2) + "\n");
            std::cout << sco::instance_metadata(inst, "").dump(2) << std::endl;
        } else if (*spectrum) {
            auto file = sco::read_graph_file(resolve(spec_graph));
            const auto emb = sco::bottom_k_embedding(file.graph, spec_k);
            sco::json j;
            j["eigenvalues"] = emb.eigenvalues;
            j["lambda_k"] = emb.eigenvalues[spec_k - 1];
            j["lambda_k1"] = emb.eigenvalues[spec_k];
            j["gap"] = emb.eigenvalues[spec_k] - emb.eigenvalues[spec_k - 1];
            j["degenerate_gap"] = emb.degenerate_gap;
            j["phi_hat"] = std::min(1.0, std::sqrt(std::max(0.0, 2.0 * emb.eigenvalues[spec_k])));
            j["seed"] = seed.to_hex();
            std::cout << j.dump(2) << std::endl;
        } else if (*init) {
            auto file = sco::read_graph_file(resolve(init_graph));
            size_t k = init_k ? init_k : file.cluster_ranges.size();
            if (k == 0) throw std::invalid_argument("init-oracle: need --k (graph has no clusters)");
            double phi = init_phi;
            if (phi <= 0.0) {
                const sco::json meta = read_metadata(resolve(init_graph));
                phi = meta.contains("phi_hat") ? meta["phi_hat"].get<double>()
                                               : meta.value("target_phi", 0.5);
            }
            sco::OracleParams p = sco::default_params(file.graph.n(), static_cast<sco::u32>(k),
                                                      phi, delta, xi, c_R, c_s);
            if (m_override) p.m = m_override;
            if (t_override) p.t = t_override;
            if (s_override) p.s = s_override;
            if (r_init_override) p.R_init = r_init_override;
            if (r_query_override) p.R_query = r_query_override;
            const sco::OracleData D = sco::initialize_oracle(file.graph, p, seed);
            sco::save_oracle_file(resolve(init_out), D);
            sco::json j;
            j["t"] = p.t;
            j["R_init"] = p.R_init;
            j["R_query"] = p.R_query;
            j["s"] = p.s;
            j["m"] = p.m;
            j["eigen_report"] = D.eigen_report;
            j["probes"] = file.graph.probe_count();
            j["seed"] = seed.to_hex();
            std::cout << j.dump(2) << std::endl;
        } else if (*dot) {
            auto file = sco::read_graph_file(resolve(dot_graph));
            const sco::OracleData D = sco::load_oracle_file(resolve(dot_oracle));
            const sco::u64 before = file.graph.probe_count();
            const double value = sco::spectral_dot_product(file.graph, dot_x, dot_y, D);
            sco::json j;
            j["x"] = dot_x;
            j["y"] = dot_y;
            j["dot_apx"] = value;
            j["probes"] = file.graph.probe_count() - before;
            j["seed"] = D.seed.to_hex();
            std::cout << j.dump(2) << std::endl;
        } else if (*walk_stats) {
            auto file = sco::read_graph_file(resolve(ws_graph));
            const sco::u32 t = ws_t ? ws_t : sco::default_walk_length(file.graph.n(), ws_phi);
            sco::json starts = sco::json::array();
            for (size_t i = 0; i < ws_starts; ++i) {
                const sco::u32 x = static_cast<sco::u32>(
                    sco::uniform_below(seed, sco::StreamTag::SampleS, 99, i, file.graph.n()));
                const auto est = sco::run_random_walks(file.graph, ws_R, t, x, seed,
                                                       sco::StreamTag::WalkQuery, i);
                const auto exact = sco::exact_walk_distribution(file.graph, t, x);
                sco::json s;
                s["start"] = x;
                s["tv_distance"] = sco::tv_distance(est, exact);
                s["support"] = est.counts.size();
                starts.push_back(s);
            }
            sco::json j;
            j["R"] = ws_R;
            j["t"] = t;
            j["seed"] = seed.to_hex();
            j["starts"] = starts;
            std::cout << j.dump(2) << std::endl;
        } else if (*fc) {
            auto file = sco::read_graph_file(resolve(fc_graph));
            const sco::OracleData D = sco::load_oracle_file(resolve(fc_oracle));
            const sco::json meta = read_metadata(resolve(fc_graph));
            sco::DotCache cache(file.graph, D);
            sco::FindCentersConfig cfg;
            cfg.cluster.s1 = fc_s1;
            cfg.cluster.s2 = fc_s2;
            cfg.cluster.c_tau = fc_ctau;
            cfg.cluster.eps_hat = meta.value("eps_hat", 0.0);
            cfg.cluster.phi_hat = meta.value("phi_hat", meta.value("target_phi", 1.0));
            cfg.sample_size = fc_sample;
            const size_t k = D.params.k;
            sco::SearchMode mode = sco::SearchMode::Exhaustive;
            if (fc_mode == "ground-truth-warmstart") {
                mode = sco::SearchMode::GroundTruthWarmstart;
                cfg.ground_truth.assign(file.graph.n(), 0);
                for (size_t c = 0; c < file.cluster_ranges.size(); ++c)
                    for (sco::u32 v = file.cluster_ranges[c].first;
                         v < file.cluster_ranges[c].second; ++v)
                        cfg.ground_truth[v] = static_cast<sco::u32>(c);
            }
            const sco::OrderedPartition part =
                sco::find_centers(file.graph, cache, k, fc_eta, mode, D.seed, cfg);
            const sco::json pj = sco::partition_to_json(part, D.seed, "");
            write_text(resolve(fc_out), pj.dump(2) + "\n");
            std::cout << pj.dump(2) << std::endl;
        } else if (*query) {
            auto file = sco::read_graph_file(resolve(q_graph));
            const sco::OracleData D = sco::load_oracle_file(resolve(q_oracle));
            std::ifstream in(resolve(q_partition));
            if (!in) throw std::runtime_error("cannot open partition");
            sco::json pj;
            in >> pj;
            sco::Seed part_seed;
            const sco::OrderedPartition part = sco::partition_from_json(pj, &part_seed);
            sco::DotCache cache(file.graph, D);
            sco::StagedMembership mem(cache, part.centers, part.stages);
            const sco::u32 label = sco::assign_query(mem, part, q_x, part_seed);
            sco::json j;
            j["x"] = q_x;
            j["label"] = label + 1;  // labels are 1-based on the external surface
            j["seed"] = part_seed.to_hex();
            std::cout << j.dump(2) << std::endl;
        } else if (*eval) {
            auto file = sco::read_graph_file(resolve(e_graph));
            const sco::OracleData D = sco::load_oracle_file(resolve(e_oracle));
            std::ifstream in(resolve(e_partition));
            if (!in) throw std::runtime_error("cannot open partition");
            sco::json pj;
            in >> pj;
            sco::Seed part_seed;
            const sco::OrderedPartition part = sco::partition_from_json(pj, &part_seed);
            sco::DotCache cache(file.graph, D);
            sco::StagedMembership mem(cache, part.centers, part.stages);
            const sco::u64 before = file.graph.probe_count();
            std::vector<sco::u32> labels(file.graph.n(), 0);
            for (size_t x = 0; x < file.graph.n(); ++x)
                labels[x] = sco::assign_query(mem, part, static_cast<sco::u32>(x), part_seed);
            std::vector<std::vector<sco::u32>> gt;
            for (const auto& [lo, hi] : file.cluster_ranges) {
                gt.emplace_back();
                for (sco::u32 v = lo; v < hi; ++v) gt.back().push_back(v);
            }
            const auto rep = sco::evaluate_clustering(labels, gt, part.k());
            std::vector<double> conductances;
            std::vector<std::vector<sco::u32>> found(part.k());
            for (size_t x = 0; x < labels.size(); ++x) found[labels[x]].push_back(static_cast<sco::u32>(x));
            for (const auto& cluster : found)
                conductances.push_back(cluster.empty() ? 1.0 : sco::outer_conductance(file.graph, cluster));
            sco::json j;
            j["per_cluster_ratio"] = rep.per_cluster_ratio;
            j["max_ratio"] = rep.max_ratio;
            j["output_cluster_conductance"] = conductances;
            j["probes"] = file.graph.probe_count() - before;
            j["seed"] = part_seed.to_hex();
            j["warmstart"] = part.warmstart;
            std::cout << j.dump(2) << std::endl;
        } else if (*bench) {
            sco::RunConfig cfg = load_config(bench_config.empty() ? "" : resolve(bench_config));
            cfg.seed = seed;
            const auto cells = sco::bench_scaling(cfg, bench_ns, bench_queries);
            if (!bench_csv.empty()) write_text(resolve(bench_csv), sco::bench_to_csv(cells));
            std::cout << sco::bench_to_json(cells).dump(2) << std::endl;
        } else if (*full) {
            sco::RunConfig cfg = load_config(full_config.empty() ? "" : resolve(full_config));
            if (full_config.empty()) cfg.seed = seed;
            const sco::MetricsReport rep = sco::full_pipeline(cfg);
            if (!full_out.empty()) write_text(resolve(full_out), rep.dump() + "\n");
            std::cout << rep.dump() << std::endl;
            return rep.passed() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
