#include "sco/dot_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sco/baseline.hpp"
#include "sco/generator.hpp"

namespace {

using namespace sco;

OracleParams small_params(size_t n, u32 k, double phi, double c_R = 6.0, u32 m = 3,
                          u32 s_override = 0) {
    OracleParams p = default_params(n, k, phi, 0.5, 0.5, c_R, 10.0);
    p.m = m;
    if (s_override) p.s = s_override;
    return p;
}

TEST(InitializeOracle, SingletonSelfLoopGraph) {
    // all-self-loop vertices: the sampled column is an exact indicator, the
    // Gram matrix is [1], and Psi = (n/s) W ((n/s) G)^-2 W^T = 1/n.
    RegularGraph g(8, 3);
    OracleParams p;
    p.k = 1;
    p.s = 1;
    p.m = 1;
    p.t = 5;
    p.R_init = 64;
    p.R_query = 64;
    p.xi = 0.5;
    const OracleData D = initialize_oracle(g, p, Seed::from_hex("e1"));
    EXPECT_DOUBLE_EQ(D.eigen_report[0], 8.0);  // (n/s) * 1
    EXPECT_DOUBLE_EQ(D.psi(0, 0), 1.0 / 8.0);
    const u32 x = D.I_S[0];
    EXPECT_DOUBLE_EQ(spectral_dot_product(g, x, x, D), 1.0 / 8.0);
}

TEST(InitializeOracle, DisjointCliquesEigenReport) {
    // cliques mix in ~10 steps; s large enough that the sampled-column Gram
    // concentrates (per-cluster sample counts drive the top-k accuracy)
    auto inst = make_disjoint_cliques(2, 13, 12);
    OracleParams p;
    p.k = 2;
    p.s = 160;
    p.m = 3;
    p.t = 20;
    p.R_init = 20000;
    p.R_query = 20000;
    const OracleData D = initialize_oracle(inst.graph, p, Seed::from_hex("e2"));
    ASSERT_EQ(D.eigen_report.size(), 3u);
    EXPECT_NEAR(D.eigen_report[0], 1.0, 0.25);
    EXPECT_NEAR(D.eigen_report[1], 1.0, 0.25);
    EXPECT_LE(std::abs(D.eigen_report[2]), 1e-3);
}

TEST(InitializeOracle, RankDeficiencyRaisesInitFailure) {
    // two all-self-loop vertices but k = 3: the walk columns span at most a
    // two-dimensional space, so the k-th eigenvalue sits at the floor
    RegularGraph g(2, 3);
    OracleParams p;
    p.k = 3;
    p.s = 6;
    p.m = 1;
    p.t = 0;
    p.R_init = 4;
    p.R_query = 4;
    try {
        initialize_oracle(g, p, Seed::from_hex("e3"));
        FAIL() << "expected InitFailure";
    } catch (const InitFailure& e) {
        ASSERT_GE(e.eigen_report.size(), 3u);
        EXPECT_LE(e.eigen_report[2], p.eig_floor);
    }
}

TEST(InitializeOracle, ValidatesParams) {
    RegularGraph g(10, 2);
    OracleParams p;
    p.k = 1;
    p.s = 2;
    p.m = 2;  // even
    p.t = 3;
    p.R_init = 10;
    p.R_query = 10;
    EXPECT_THROW(initialize_oracle(g, p, Seed::from_hex("e4")), std::invalid_argument);
    p.m = 3;
    p.s = 0;  // below k
    EXPECT_THROW(initialize_oracle(g, p, Seed::from_hex("e4")), std::invalid_argument);
}

class ExpanderOracle : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        GenParams gp;
        gp.sizes = {50};
        gp.d = 8;
        gp.seed = Seed::from_hex("e5");
        inst_ = new ClusterableInstance(generate_clusterable(gp));
        OracleParams p = small_params(50, 1, inst_->phi_hat(), 8.0, 3, 12);
        D_ = new OracleData(initialize_oracle(inst_->graph, p, gp.seed));
    }
    static void TearDownTestSuite() {
        delete inst_;
        delete D_;
    }
    static ClusterableInstance* inst_;
    static OracleData* D_;
};
ClusterableInstance* ExpanderOracle::inst_ = nullptr;
OracleData* ExpanderOracle::D_ = nullptr;

TEST_F(ExpanderOracle, SingleClusterDotsNearOneOverN) {
    // k=1: the bottom eigenvector is constant, every exact dot is 1/n
    const RegularGraph& g = inst_->graph;
    const double target = 1.0 / 50.0;
    const double tol = D_->params.xi / 50.0;
    int ok = 0, total = 0;
    DotCache cache(g, *D_);
    for (u32 x = 0; x < 50; x += 5)
        for (u32 y = 1; y < 50; y += 5) {
            ++total;
            if (std::abs(cache.dot(x, y) - target) <= tol) ++ok;
        }
    EXPECT_GE(ok, (total * 9) / 10);
}

TEST_F(ExpanderOracle, DeterministicAndSymmetric) {
    const RegularGraph& g = inst_->graph;
    const double a = spectral_dot_product(g, 3, 41, *D_);
    const double b = spectral_dot_product(g, 3, 41, *D_);
    EXPECT_EQ(a, b);
    // role-free walk keys make the estimate exactly symmetric, well within
    // the 2 xi / n asymmetry allowance
    const double c = spectral_dot_product(g, 41, 3, *D_);
    EXPECT_EQ(a, c);
}

TEST_F(ExpanderOracle, DeterministicAcrossThreadCounts) {
    const RegularGraph& g = inst_->graph;
    const int saved = thread_count();
    set_thread_count(1);
    const double a = spectral_dot_product(g, 7, 12, *D_);
    set_thread_count(8);
    const double b = spectral_dot_product(g, 7, 12, *D_);
    set_thread_count(saved);
    EXPECT_EQ(a, b);
}

TEST_F(ExpanderOracle, PsiIsPositiveSemidefinite) {
    HashRng rng(Seed::from_hex("e6"), StreamTag::TieBreak, 0);
    const size_t s = D_->params.s;
    double psi_norm = 0;
    for (size_t i = 0; i < s; ++i) psi_norm = std::max(psi_norm, std::abs(D_->psi(i, i)));
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(s);
        double norm2 = 0;
        for (auto& c : v) {
            c = double(rng.below(2001)) - 1000.0;
            norm2 += c * c;
        }
        double quad = 0;
        for (size_t i = 0; i < s; ++i)
            for (size_t j = 0; j < s; ++j) quad += v[i] * D_->psi(i, j) * v[j];
        EXPECT_GE(quad, -1e-10 * psi_norm * norm2);
    }
}

TEST_F(ExpanderOracle, QueryProbeBudget) {
    const RegularGraph& g = inst_->graph;
    const u64 before = g.probe_count();
    spectral_dot_product(g, 11, 29, *D_);
    const u64 used = g.probe_count() - before;
    EXPECT_LE(used, 2ull * D_->params.m * D_->params.R_query * D_->params.t);
    EXPECT_GT(used, 0u);
}

TEST_F(ExpanderOracle, SerializationRoundTrip) {
    std::stringstream buf;
    save_oracle(buf, *D_);
    const OracleData loaded = load_oracle(buf);
    EXPECT_EQ(loaded.params.s, D_->params.s);
    EXPECT_EQ(loaded.I_S, D_->I_S);
    EXPECT_EQ(loaded.eigen_report, D_->eigen_report);
    for (u32 i = 0; i < D_->params.m; ++i)
        for (u32 j = 0; j < D_->params.s; ++j)
            ASSERT_EQ(loaded.qhats[i].columns[j].counts, D_->qhats[i].columns[j].counts);
    const double a = spectral_dot_product(inst_->graph, 5, 17, *D_);
    const double b = spectral_dot_product(inst_->graph, 5, 17, loaded);
    EXPECT_EQ(a, b);
    // byte-identical on re-save
    std::stringstream buf2;
    save_oracle(buf2, loaded);
    std::stringstream buf3;
    save_oracle(buf3, *D_);
    EXPECT_EQ(buf2.str(), buf3.str());
}

TEST(DotOracle, TwoCliquesSeparateClusters) {
    auto inst = make_disjoint_cliques(2, 13, 12);
    OracleParams p;
    p.k = 2;
    p.s = 96;
    p.m = 3;
    p.t = 20;
    p.R_init = 20000;
    p.R_query = 20000;
    const OracleData D = initialize_oracle(inst.graph, p, Seed::from_hex("e7"));
    DotCache cache(inst.graph, D);
    // exact dots: 2/n same cluster, 0 across
    int ok = 0, total = 0;
    for (u32 x = 0; x < 26; x += 3)
        for (u32 y = 0; y < 26; y += 2) {
            const bool same = (x < 13) == (y < 13);
            const double v = cache.dot(x, y);
            ++total;
            const double target = same ? 2.0 / 26.0 : 0.0;
            if (std::abs(v - target) <= 0.5 / 26.0) ++ok;
        }
    EXPECT_GE(ok, (total * 9) / 10);
}

TEST(DotOracle, MatchesExactEmbeddingOnMidInstance) {
    GenParams gp;
    gp.sizes = {200, 200};
    gp.d = 12;
    gp.p_cross = 0.02;
    gp.seed = Seed::from_hex("e8");
    auto inst = generate_clusterable(gp);
    OracleParams p = small_params(400, 2, inst.phi_hat(), 6.0, 3, 80);
    const OracleData D = initialize_oracle(inst.graph, p, gp.seed);
    const SpectralEmbedding emb = bottom_k_embedding(inst.graph, 2);
    DotCache cache(inst.graph, D);
    const double tol = p.xi / 400.0;
    int ok = 0;
    const int total = 200;
    std::vector<double> errors;
    for (int i = 0; i < total; ++i) {
        const u32 x = static_cast<u32>(uniform_below(gp.seed, StreamTag::SampleS, 50, 2 * static_cast<u64>(i), 400));
        const u32 y = static_cast<u32>(uniform_below(gp.seed, StreamTag::SampleS, 50, 2 * static_cast<u64>(i) + 1, 400));
        const double err = std::abs(cache.dot(x, y) - exact_dot(emb, x, y));
        errors.push_back(err);
        if (err <= tol) ++ok;
    }
    EXPECT_GE(ok, (total * 9) / 10);
}

}  // namespace
