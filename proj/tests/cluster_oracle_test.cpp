#include "sco/cluster_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "sco/generator.hpp"

namespace {

using namespace sco;

struct CliqueWorld {
    ClusterableInstance inst;
    OracleData D;
    std::vector<CenterRef> true_centers;
};

// memoized by (k, seed): the oracle is immutable, initialization dominates
const CliqueWorld& make_cliques(size_t k, const char* seed_hex) {
    static std::map<std::pair<size_t, std::string>, CliqueWorld*> cache;
    auto& slot = cache[{k, seed_hex}];
    if (!slot) {
        auto* w = new CliqueWorld{make_disjoint_cliques(k, 13, 12), {}, {}};
        OracleParams p;
        p.k = static_cast<u32>(k);
        p.s = static_cast<u32>(80 * k);
        p.m = 3;
        p.t = 20;
        p.R_init = 20000;
        p.R_query = 20000;
        w->D = initialize_oracle(w->inst.graph, p, Seed::from_hex(seed_hex));
        for (size_t c = 0; c < k; ++c) {
            CenterRef ref;
            for (u32 v = static_cast<u32>(13 * c); v < 13 * (c + 1); v += 3)
                ref.members.push_back(v);
            w->true_centers.push_back(ref);
        }
        slot = w;
    }
    return *slot;
}

ClusterConfig clique_config() {
    ClusterConfig cc;
    cc.eps_hat = 0.0;
    cc.phi_hat = 1.0;
    cc.s1 = 64;
    cc.s2 = 64;
    return cc;
}

TEST(IsInside, TrueCentersClaimOwnClique) {
    const CliqueWorld& w = make_cliques(2, "a1");
    DotCache cache(w.inst.graph, w.D);
    StagedMembership mem(cache, w.true_centers, {});
    const std::vector<u32> remaining{0, 1};
    EXPECT_TRUE(is_inside(mem, 3, 0, {}, remaining));
    EXPECT_FALSE(is_inside(mem, 3, 1, {}, remaining));
    EXPECT_TRUE(is_inside(mem, 20, 1, {}, remaining));
    EXPECT_FALSE(is_inside(mem, 20, 0, {}, remaining));
}

TEST(IsInside, ForeignCentersClaimNothing) {
    const CliqueWorld& w = make_cliques(2, "a1");
    // both centers sampled from clique 2: vertices of clique 1 match neither
    std::vector<CenterRef> centers{CenterRef{{13, 16, 19}}, CenterRef{{14, 20, 25}}};
    DotCache cache(w.inst.graph, w.D);
    StagedMembership mem(cache, centers, {});
    EXPECT_FALSE(is_inside(mem, 2, 0, {}, {0, 1}));
    EXPECT_FALSE(is_inside(mem, 2, 1, {}, {0, 1}));
}

TEST(IsInside, EarlierStageShortCircuits) {
    const CliqueWorld& w = make_cliques(2, "a1");
    DotCache cache(w.inst.graph, w.D);
    const std::vector<std::vector<u32>> stages{{0}};
    StagedMembership mem(cache, w.true_centers, stages);
    // x = 3 is captured exclusively by center 0 at stage 1, so it cannot be
    // inside center 1's final-stage candidate
    EXPECT_FALSE(is_inside(mem, 3, 1, stages, {1}));
    EXPECT_TRUE(is_inside(mem, 20, 1, stages, {1}));
}

TEST(HyperplanePartitioning, CliquesSingleStageLabelsEveryone) {
    const CliqueWorld& w = make_cliques(3, "a4");
    DotCache cache(w.inst.graph, w.D);
    OrderedPartition part;
    part.centers = w.true_centers;
    part.stages = {{0, 1, 2}};
    StagedMembership mem(cache, part.centers, part.stages);
    for (u32 x = 0; x < w.inst.graph.n(); ++x)
        EXPECT_EQ(hyperplane_partitioning(mem, x, part), x / 13);
}

TEST(HyperplanePartitioning, DoublyClaimedVertexStaysUnassigned) {
    const CliqueWorld& w = make_cliques(2, "a1");
    DotCache cache(w.inst.graph, w.D);
    OrderedPartition part;
    // two copies of the same center both claim all of clique 1
    part.centers = {w.true_centers[0], CenterRef{{1, 4, 7, 10}}};
    part.stages = {{0, 1}};
    StagedMembership mem(cache, part.centers, part.stages);
    EXPECT_EQ(hyperplane_partitioning(mem, 3, part), kUnassigned);
}

TEST(OuterConductanceEstimate, ExactClusterIsZero) {
    const CliqueWorld& w = make_cliques(2, "a6");
    DotCache cache(w.inst.graph, w.D);
    StagedMembership mem(cache, w.true_centers, {});
    const auto est = outer_conductance_estimate(w.inst.graph, mem, 0, {}, {0, 1}, 64, 64, 3.0,
                                                Seed::from_hex("a6"), 1);
    ASSERT_FALSE(est.infinite());
    EXPECT_DOUBLE_EQ(est.value, 0.0);
    EXPECT_NEAR(est.size_estimate, 13.0, 6.0);
}

TEST(OuterConductanceEstimate, MixedCenterIsSubFloor) {
    const CliqueWorld& w = make_cliques(2, "a6");
    DotCache cache(w.inst.graph, w.D);
    // candidate mean mixing both cliques; with the true centers also in the
    // remaining set, the exclusivity rule empties its candidate cluster
    std::vector<CenterRef> centers = w.true_centers;
    centers.push_back(CenterRef{{0, 3, 13, 16}});
    StagedMembership mem(cache, centers, {});
    int infinite = 0;
    for (u64 salt = 0; salt < 20; ++salt) {
        const auto est = outer_conductance_estimate(w.inst.graph, mem, 2, {}, {0, 1, 2}, 48, 48,
                                                    3.0, Seed::from_hex("a7"), salt);
        if (est.infinite()) ++infinite;
    }
    EXPECT_GE(infinite, 19);  // >= 95% of trials
}

TEST(OuterConductanceEstimate, UsageErrors) {
    const CliqueWorld& w = make_cliques(2, "a6");
    DotCache cache(w.inst.graph, w.D);
    StagedMembership mem(cache, w.true_centers, {});
    EXPECT_THROW(outer_conductance_estimate(w.inst.graph, mem, 0, {}, {0, 1}, 0, 8, 1.0,
                                            Seed::from_hex("a8"), 0),
                 std::invalid_argument);
}

TEST(ComputeOrderedPartition, TrueCentersAcceptedInOneStage) {
    const CliqueWorld& w = make_cliques(2, "a9");
    DotCache cache(w.inst.graph, w.D);
    const auto res =
        compute_ordered_partition(w.inst.graph, cache, w.true_centers, clique_config(),
                                  Seed::from_hex("a9"), 0);
    ASSERT_TRUE(res.accepted);
    ASSERT_EQ(res.partition.stages.size(), 1u);
    EXPECT_EQ(res.partition.stages[0].size(), 2u);
}

TEST(ComputeOrderedPartition, MixedCenterRejected) {
    const CliqueWorld& w = make_cliques(2, "a9");
    DotCache cache(w.inst.graph, w.D);
    // one candidate mixes the cliques: its set stays empty (sub-floor), so
    // the candidate set never empties and the search rejects
    std::vector<CenterRef> centers{w.true_centers[0], CenterRef{{0, 3, 13, 16}}};
    const auto res = compute_ordered_partition(w.inst.graph, cache, centers, clique_config(),
                                               Seed::from_hex("aa"), 0);
    EXPECT_FALSE(res.accepted);
}

TEST(ComputeOrderedPartition, SingleClusterTrivial) {
    auto inst = make_disjoint_cliques(1, 13, 12);
    OracleParams p = default_params(13, 1, 1.0, 0.5, 0.5, 8.0, 10.0);
    p.m = 3;
    p.s = 8;
    const OracleData D = initialize_oracle(inst.graph, p, Seed::from_hex("ab"));
    DotCache cache(inst.graph, D);
    ClusterConfig cc = clique_config();
    cc.size_floor = 4.0;
    const auto res = compute_ordered_partition(inst.graph, cache, {CenterRef{{0, 5, 9}}}, cc,
                                               Seed::from_hex("ab"), 0);
    ASSERT_TRUE(res.accepted);
    EXPECT_EQ(res.partition.stages[0], std::vector<u32>{0});
}

TEST(FindCenters, ExhaustiveRecoversCliques) {
    const CliqueWorld& w = make_cliques(2, "ac");
    DotCache cache(w.inst.graph, w.D);
    FindCentersConfig cfg;
    cfg.cluster = clique_config();
    cfg.sample_size = 6;
    const OrderedPartition part = find_centers(w.inst.graph, cache, 2, 0.5,
                                               SearchMode::Exhaustive, Seed::from_hex("ac"), cfg);
    EXPECT_FALSE(part.warmstart);
    ASSERT_TRUE(part.is_final());
    StagedMembership mem(cache, part.centers, part.stages);
    std::vector<u32> labels(26);
    for (u32 x = 0; x < 26; ++x) labels[x] = assign_query(mem, part, x, Seed::from_hex("ac"));
    const EvalReport rep = evaluate_clustering(labels, w.inst.ground_truth(), 2);
    EXPECT_DOUBLE_EQ(rep.max_ratio, 0.0);
}

TEST(FindCenters, SingleClusterImmediate) {
    auto inst = make_disjoint_cliques(1, 13, 12);
    OracleParams p = default_params(13, 1, 1.0, 0.5, 0.5, 8.0, 10.0);
    p.m = 3;
    p.s = 8;
    const OracleData D = initialize_oracle(inst.graph, p, Seed::from_hex("ad"));
    DotCache cache(inst.graph, D);
    FindCentersConfig cfg;
    cfg.cluster = clique_config();
    cfg.cluster.size_floor = 4.0;
    cfg.sample_size = 4;
    const OrderedPartition part = find_centers(inst.graph, cache, 1, 0.5, SearchMode::Exhaustive,
                                               Seed::from_hex("ad"), cfg);
    EXPECT_TRUE(part.is_final());
}

TEST(FindCenters, WarmstartUsesGroundTruth) {
    const CliqueWorld& w = make_cliques(3, "a4");
    DotCache cache(w.inst.graph, w.D);
    FindCentersConfig cfg;
    cfg.cluster = clique_config();
    cfg.sample_size = 9;
    cfg.ground_truth.assign(39, 0);
    for (u32 x = 0; x < 39; ++x) cfg.ground_truth[x] = x / 13;
    const OrderedPartition part =
        find_centers(w.inst.graph, cache, 3, 0.5, SearchMode::GroundTruthWarmstart,
                     Seed::from_hex("ae"), cfg);
    EXPECT_TRUE(part.warmstart);
    StagedMembership mem(cache, part.centers, part.stages);
    std::vector<u32> labels(39);
    for (u32 x = 0; x < 39; ++x) labels[x] = assign_query(mem, part, x, Seed::from_hex("ae"));
    const EvalReport rep = evaluate_clustering(labels, w.inst.ground_truth(), 3);
    EXPECT_DOUBLE_EQ(rep.max_ratio, 0.0);
}

TEST(FindCenters, AllRejectedRaisesSearchFailure) {
    const CliqueWorld& w = make_cliques(2, "ac");
    DotCache cache(w.inst.graph, w.D);
    FindCentersConfig cfg;
    cfg.cluster = clique_config();
    cfg.cluster.size_floor = 26.0;  // impossible: no candidate can cover everything
    cfg.sample_size = 4;
    try {
        find_centers(w.inst.graph, cache, 2, 0.5, SearchMode::Exhaustive, Seed::from_hex("af"),
                     cfg);
        FAIL() << "expected SearchFailure";
    } catch (const SearchFailure& e) {
        EXPECT_FALSE(e.round_diagnostics.empty());
    }
}

TEST(AssignQuery, DeterministicAndCoversAllVertices) {
    const CliqueWorld& w = make_cliques(2, "a1");
    DotCache cache(w.inst.graph, w.D);
    OrderedPartition part;
    part.centers = w.true_centers;
    part.stages = {{0, 1}};
    StagedMembership mem(cache, part.centers, part.stages);
    std::vector<u32> first(26), second(26);
    for (u32 x = 0; x < 26; ++x) first[x] = assign_query(mem, part, x, Seed::from_hex("b0"));
    for (int x = 25; x >= 0; --x)
        second[static_cast<size_t>(x)] =
            assign_query(mem, part, static_cast<u32>(x), Seed::from_hex("b0"));
    EXPECT_EQ(first, second);  // order independence
    std::set<u32> used(first.begin(), first.end());
    for (u32 l : used) EXPECT_LT(l, 2u);
}

TEST(AssignQuery, UnassignedGetsStableTieBreakLabel) {
    const CliqueWorld& w = make_cliques(2, "a1");
    DotCache cache(w.inst.graph, w.D);
    OrderedPartition part;
    // centers that claim nobody: every vertex goes through the tie-break
    part.centers = {CenterRef{{0, 13}}, CenterRef{{5, 20}}};
    part.stages = {{0, 1}};
    StagedMembership mem(cache, part.centers, part.stages);
    std::vector<u32> labels(26);
    std::set<u32> distinct;
    for (u32 x = 0; x < 26; ++x) {
        labels[x] = assign_query(mem, part, x, Seed::from_hex("b1"));
        EXPECT_EQ(labels[x], assign_query(mem, part, x, Seed::from_hex("b1")));
        distinct.insert(labels[x]);
    }
    EXPECT_GE(distinct.size(), 2u);  // the uniform completion uses both labels
}

TEST(EvaluateClustering, IdentityIsPerfect) {
    std::vector<std::vector<u32>> gt{{0, 1, 2}, {3, 4, 5}};
    const EvalReport rep = evaluate_clustering({0, 0, 0, 1, 1, 1}, gt, 2);
    EXPECT_DOUBLE_EQ(rep.max_ratio, 0.0);
}

TEST(EvaluateClustering, PermutationInvariant) {
    std::vector<std::vector<u32>> gt{{0, 1, 2}, {3, 4, 5}};
    const EvalReport rep = evaluate_clustering({1, 1, 1, 0, 0, 0}, gt, 2);
    EXPECT_DOUBLE_EQ(rep.max_ratio, 0.0);
    EXPECT_EQ(rep.permutation[0], 1u);
}

TEST(EvaluateClustering, SingleFlipCountsOnBothClusters) {
    std::vector<std::vector<u32>> gt{{0, 1, 2, 3}, {4, 5, 6, 7}};
    // vertex 3 flips to cluster 2: |C1 sym C1'| = 1, |C2 sym C2'| = 1
    const EvalReport rep = evaluate_clustering({0, 0, 0, 1, 1, 1, 1, 1}, gt, 2);
    EXPECT_DOUBLE_EQ(rep.per_cluster_ratio[0], 1.0 / 4.0);
    EXPECT_DOUBLE_EQ(rep.per_cluster_ratio[1], 1.0 / 4.0);
}

TEST(EvaluateClustering, EmptyPredictedClusterPads) {
    std::vector<std::vector<u32>> gt{{0, 1}, {2, 3}, {4, 5}};
    // all mass on two labels; the third ground-truth cluster pairs with an
    // empty predicted class and scores ratio 1 + |Chat|/|C|
    const EvalReport rep = evaluate_clustering({0, 0, 1, 1, 1, 1}, gt, 3);
    EXPECT_DOUBLE_EQ(rep.per_cluster_ratio[0], 0.0);
    EXPECT_GE(rep.max_ratio, 1.0);
}

TEST(StagedMembership, StageMonotonicity) {
    const CliqueWorld& w = make_cliques(2, "a9");
    DotCache cache(w.inst.graph, w.D);
    const auto res = compute_ordered_partition(w.inst.graph, cache, w.true_centers,
                                               clique_config(), Seed::from_hex("b2"), 5);
    ASSERT_TRUE(res.accepted);
    std::set<u32> seen;
    for (const auto& stage : res.partition.stages)
        for (u32 c : stage) EXPECT_TRUE(seen.insert(c).second);  // never reappears
    EXPECT_LE(res.partition.stages.size(),
              static_cast<size_t>(std::ceil(std::log2(2.0))) + 1);
}

}  // namespace
