#include "sco/pipeline.hpp"

#include <gtest/gtest.h>

namespace {

using namespace sco;

RunConfig clique_like_config() {
    // two disconnected expanders: exactly separable end to end
    RunConfig cfg;
    cfg.sizes = {40, 40};
    cfg.d = 8;
    cfg.p_cross = 0.0;
    cfg.xi = 0.5;
    cfg.c_R = 8.0;
    cfg.m_override = 3;
    cfg.s_override = 24;
    cfg.s1 = 48;
    cfg.s2 = 48;
    cfg.eta = 0.5;
    cfg.warmstart = true;
    cfg.sample_size = 10;
    cfg.seed = Seed::from_hex("91");
    return cfg;
}

TEST(RunConfig, JsonRoundTripIdentity) {
    RunConfig cfg = clique_like_config();
    const json j = cfg.to_json();
    const RunConfig back = RunConfig::from_json(j);
    EXPECT_EQ(back.to_json().dump(), j.dump());
    EXPECT_EQ(back.hash(), cfg.hash());
}

TEST(RunConfig, HashChangesWithContent) {
    RunConfig a = clique_like_config();
    RunConfig b = a;
    b.xi = 0.25;
    EXPECT_NE(a.hash(), b.hash());
}

TEST(Partition, JsonRoundTrip) {
    OrderedPartition part;
    part.centers = {CenterRef{{1, 2, 3}}, CenterRef{{7, 9}}, CenterRef{{4}}};
    part.stages = {{2, 0}, {1}};
    part.warmstart = true;
    const json j = partition_to_json(part, Seed::from_hex("92"), "deadbeef");
    Seed seed;
    const OrderedPartition back = partition_from_json(j, &seed);
    EXPECT_EQ(seed.to_hex(), Seed::from_hex("92").to_hex());
    ASSERT_EQ(back.centers.size(), 3u);
    EXPECT_EQ(back.centers[1].members, (std::vector<u32>{7, 9}));
    EXPECT_EQ(back.stages, part.stages);
    EXPECT_TRUE(back.warmstart);
}

TEST(FullPipeline, SeparableInstanceIsPerfect) {
    const MetricsReport rep = full_pipeline(clique_like_config());
    EXPECT_TRUE(rep.passed());
    for (double r : rep.data["eval"]["per_cluster_ratio"].get<std::vector<double>>())
        EXPECT_DOUBLE_EQ(r, 0.0);
    EXPECT_EQ(rep.data["config_hash"], rep.data["instance"]["config_hash"]);
}

TEST(FullPipeline, ByteIdenticalAcrossRunsAndThreadCounts) {
    RunConfig cfg = clique_like_config();
    cfg.threads = 1;
    const std::string once = full_pipeline(cfg).deterministic_dump();
    const std::string twice = full_pipeline(cfg).deterministic_dump();
    EXPECT_EQ(once, twice);
    cfg.threads = 8;
    const std::string eight = full_pipeline(cfg).deterministic_dump();
    EXPECT_EQ(once, eight);
    set_thread_count(2);
}

TEST(BenchScaling, DirectionAndAccounting) {
    RunConfig cfg;
    cfg.sizes = {150, 150};
    cfg.d = 8;
    cfg.p_cross = 0.2;
    cfg.target_phi = 0.6;
    cfg.xi = 0.9;
    cfg.c_R = 1.0;
    cfg.m_override = 3;
    cfg.seed = Seed::from_hex("93");
    const auto cells = bench_scaling(cfg, {300, 1200}, 20);
    ASSERT_EQ(cells.size(), 2u);
    // delta = 1/2: quadrupling n should roughly double query probes
    const double ratio = cells[1].probes_per_query / cells[0].probes_per_query;
    EXPECT_GT(ratio, 1.5);
    EXPECT_LT(ratio, 2.6);

    // R_query override doubling doubles the per-query walk budget
    RunConfig doubled = cfg;
    doubled.R_query_override = 2 * cells[0].R_query;
    const auto cells2 = bench_scaling(doubled, {300}, 20);
    const double probe_ratio = cells2[0].probes_per_query / cells[0].probes_per_query;
    EXPECT_NEAR(probe_ratio, 2.0, 0.05);

    // smaller delta: cheaper queries, costlier preprocessing
    RunConfig low_delta = cfg;
    low_delta.delta = 0.3;
    const auto cells3 = bench_scaling(low_delta, {1200}, 20);
    EXPECT_LT(cells3[0].probes_per_query, cells[1].probes_per_query);
    EXPECT_GT(cells3[0].probes_init, cells[1].probes_init);
}

TEST(BenchScaling, CsvHasHeaderAndRows) {
    RunConfig cfg;
    cfg.sizes = {80, 80};
    cfg.d = 6;
    cfg.p_cross = 0.2;
    cfg.target_phi = 0.6;
    cfg.xi = 0.9;
    cfg.c_R = 1.0;
    cfg.m_override = 3;
    cfg.seed = Seed::from_hex("94");
    const auto cells = bench_scaling(cfg, {160}, 5);
    const std::string csv = bench_to_csv(cells);
    EXPECT_NE(csv.find("n,probes_init,probes_per_query"), std::string::npos);
    EXPECT_NE(csv.find("160,"), std::string::npos);
}

TEST(MetricsReport, WallClockExcludedFromDeterministicDump) {
    MetricsReport rep;
    rep.data["thresholds_met"] = true;
    rep.data["wall_clock_sec"] = 1.23;
    EXPECT_EQ(rep.deterministic_dump().find("wall_clock"), std::string::npos);
}

}  // namespace
