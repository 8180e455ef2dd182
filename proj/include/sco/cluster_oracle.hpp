// End-to-end clustering oracle: staged threshold-set membership, sampled
// outer-conductance testing, ordered-partition construction, center search,
// and the consistent query surface with random completion.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sco/common.hpp"
#include "sco/dot_oracle.hpp"
#include "sco/graph.hpp"
#include "sco/hash.hpp"
#include "sco/subspace.hpp"

namespace sco {

inline constexpr double kMembershipThreshold = 0.93;

struct OrderedPartition {
    std::vector<CenterRef> centers;        // canonical center order
    std::vector<std::vector<u32>> stages;  // center indices per stage, disjoint
    bool warmstart = false;                // which search mode produced it

    size_t k() const { return centers.size(); }

    bool is_final() const {
        size_t assigned = 0;
        for (const auto& t : stages) assigned += t.size();
        return assigned == centers.size();
    }
};

// Caches the per-stage projection contexts, per-center probe vectors, and
// threshold norms for a fixed ordered (partial) partition, so membership
// tests cost O(s) flops per query. Contexts are built on first use; a
// degenerate context (collinear removed centers) only surfaces as
// ContextFailure when a test actually needs it. All cached quantities are
// evaluated with the same operation order as the subspace primitives, so
// results are bit-identical to calling them directly.
class StagedMembership {
public:
    StagedMembership(DotCache& cache, const std::vector<CenterRef>& centers,
                     std::vector<std::vector<u32>> stages)
        : cache_(&cache), centers_(&centers), stages_(std::move(stages)) {
        contexts_.resize(stages_.size() + 1);
        probes_.assign(stages_.size() + 1, std::vector<CenterProbe>(centers.size()));
        center_alpha_.resize(centers.size());
        center_psi_alpha_.resize(centers.size());
    }

    // x in C_apx(Pi_stage mu_c, 0.93)?
    bool in_threshold(u32 x, u32 center, size_t stage) {
        const SubspaceContext& ctx = context(stage);
        const CenterProbe& probe = center_probe(stage, center);
        const auto& ax = cache_->alpha(x);
        const auto& v = *center_psi_alpha_[center];
        double dot = 0.0;
        for (size_t j = 0; j < ax.size(); ++j) dot += ax[j] * v[j];
        if (!ctx.empty()) {
            const auto hx = detail::correction_coordinates(ctx, ax);
            for (size_t i = 0; i < hx.size(); ++i) dot -= hx[i] * probe.correction[i];
        }
        return dot >= kMembershipThreshold * probe.norm;
    }

    // removed = all centers of stages before `stage`
    const SubspaceContext& context(size_t stage) {
        auto& slot = contexts_[stage];
        if (!slot) {
            std::vector<CenterRef> removed;
            for (size_t j = 0; j < stage; ++j)
                for (u32 c : stages_[j]) removed.push_back((*centers_)[c]);
            if (removed.empty())
                slot.emplace();
            else
                slot = build_subspace(*cache_, removed, cache_->data().params.xi);
        }
        return *slot;
    }

private:
    struct CenterProbe {
        bool ready = false;
        double norm = 0.0;                // ||Pi mu_c||^2_apx, clamped
        std::vector<double> correction;   // X^{-1} h_c per removed direction
    };

    const CenterProbe& center_probe(size_t stage, u32 center) {
        CenterProbe& probe = probes_[stage][center];
        if (probe.ready) return probe;
        if (!center_alpha_[center]) {
            center_alpha_[center] = std::make_unique<std::vector<double>>(
                center_alpha(*cache_, (*centers_)[center]));
            center_psi_alpha_[center] = std::make_unique<std::vector<double>>(
                psi_times(cache_->data(), *center_alpha_[center]));
        }
        const SubspaceContext& ctx = context(stage);
        const auto& ab = *center_alpha_[center];
        const auto& v = *center_psi_alpha_[center];
        double norm = 0.0;
        for (size_t j = 0; j < ab.size(); ++j) norm += ab[j] * v[j];
        if (!ctx.empty()) {
            const auto hb = detail::correction_coordinates(ctx, ab);
            probe.correction.assign(hb.size(), 0.0);
            for (size_t i = 0; i < hb.size(); ++i) {
                double w = 0.0;
                for (size_t j = 0; j < hb.size(); ++j) w += ctx.X_inv(i, j) * hb[j];
                probe.correction[i] = w;
                norm -= hb[i] * w;
            }
        }
        probe.norm = norm < 0.0 ? 0.0 : norm;
        probe.ready = true;
        return probe;
    }

    DotCache* cache_;
    const std::vector<CenterRef>* centers_;
    std::vector<std::vector<u32>> stages_;
    std::vector<std::optional<SubspaceContext>> contexts_;
    std::vector<std::vector<CenterProbe>> probes_;
    std::vector<std::unique_ptr<std::vector<double>>> center_alpha_;
    std::vector<std::unique_ptr<std::vector<double>>> center_psi_alpha_;
};

// IsInside: false if some earlier stage exclusively claims x, true iff at the
// final stage x lands in mu_hat's threshold set and no other remaining
// center's. `remaining` must contain mu_hat.
inline bool is_inside(StagedMembership& mem, u32 x, u32 mu_hat,
                      const std::vector<std::vector<u32>>& stages,
                      const std::vector<u32>& remaining) {
    const size_t b = stages.size();
    for (size_t i = 0; i < b; ++i) {
        for (u32 c : stages[i]) {
            if (!mem.in_threshold(x, c, i)) continue;
            bool exclusive = true;
            for (size_t j = i; j < b && exclusive; ++j)
                for (u32 other : stages[j])
                    if (other != c && mem.in_threshold(x, other, i)) {
                        exclusive = false;
                        break;
                    }
            for (u32 other : remaining)
                if (exclusive && other != c && mem.in_threshold(x, other, i)) exclusive = false;
            if (exclusive) return false;  // captured by an earlier stage
        }
    }
    if (!mem.in_threshold(x, mu_hat, b)) return false;
    for (u32 other : remaining)
        if (other != mu_hat && mem.in_threshold(x, other, b)) return false;
    return true;
}

inline constexpr u32 kUnassigned = std::numeric_limits<u32>::max();

// HyperplanePartitioning over a final ordered partition: scan stages in
// order, return the unique claiming center, or kUnassigned.
inline u32 hyperplane_partitioning(StagedMembership& mem, u32 x, const OrderedPartition& part) {
    for (size_t i = 0; i < part.stages.size(); ++i) {
        for (u32 c : part.stages[i]) {
            if (!mem.in_threshold(x, c, i)) continue;
            bool exclusive = true;
            for (size_t j = i; j < part.stages.size() && exclusive; ++j)
                for (u32 other : part.stages[j])
                    if (other != c && mem.in_threshold(x, other, i)) {
                        exclusive = false;
                        break;
                    }
            if (exclusive) return c;
        }
    }
    return kUnassigned;
}

struct ConductanceEstimate {
    double value = 0.0;  // infinity() when the size gate failed
    double size_estimate = 0.0;
    u64 s1 = 0, s2 = 0;

    bool infinite() const { return std::isinf(value); }
};

// OuterConductance: estimate the candidate's size by sampling; if it clears
// the floor, estimate the boundary fraction by sampling vertices and one
// uniform neighbor slot each.
inline ConductanceEstimate outer_conductance_estimate(const RegularGraph& g, StagedMembership& mem,
                                                      u32 mu_hat,
                                                      const std::vector<std::vector<u32>>& stages,
                                                      const std::vector<u32>& remaining, u64 s1,
                                                      u64 s2, double size_floor, const Seed& seed,
                                                      u64 salt) {
    if (s1 < 1 || s2 < 1)
        throw std::invalid_argument("outer_conductance_estimate: s1, s2 must be >= 1");
    ConductanceEstimate est;
    est.s1 = s1;
    est.s2 = s2;
    u64 cnt = 0;
    for (u64 i = 0; i < s1; ++i) {
        const u32 x = static_cast<u32>(uniform_below(seed, StreamTag::ConductanceSize, salt, i, g.n()));
        if (is_inside(mem, x, mu_hat, stages, remaining)) ++cnt;
    }
    est.size_estimate =
        static_cast<double>(g.n()) * static_cast<double>(cnt) / static_cast<double>(s1);
    if (est.size_estimate < size_floor) {
        est.value = std::numeric_limits<double>::infinity();
        return est;
    }
    u64 hits = 0, boundary = 0;
    for (u64 i = 0; i < s2; ++i) {
        const u32 x = static_cast<u32>(
            uniform_below(seed, StreamTag::ConductanceEdge, salt, 2 * i, g.n()));
        const u32 slot = static_cast<u32>(
            uniform_below(seed, StreamTag::ConductanceEdge, salt, 2 * i + 1, g.d()));
        const u32 y = g.neighbor(x, slot);
        if (is_inside(mem, x, mu_hat, stages, remaining)) {
            ++hits;
            if (!is_inside(mem, y, mu_hat, stages, remaining)) ++boundary;
        }
    }
    if (hits == 0) {
        est.value = std::numeric_limits<double>::infinity();
        return est;
    }
    est.value = static_cast<double>(boundary) / static_cast<double>(hits);
    return est;
}

struct ClusterConfig {
    u64 s1 = 0, s2 = 0;          // conductance tester samples (0 = derive defaults)
    double c_tau = 8.0;          // stage threshold constant
    double eps_hat = 0.0;        // instance conductance scale for tau
    double phi_hat = 1.0;
    double size_floor = 0.0;     // 0 = derive n / (2 k ratio)
    double max_size_ratio = 4.0;

    // tau_cond(stage) = c_tau * eps_hat * stage * ln(k+1) / phi_hat^2; the
    // allowance grows per stage as later stages compound earlier slack.
    double tau(size_t stage, size_t k) const {
        return c_tau * eps_hat * static_cast<double>(stage) *
               std::log(static_cast<double>(k) + 1.0) / (phi_hat * phi_hat);
    }

    u64 effective_s1(size_t n, size_t k) const {
        if (s1) return s1;
        const double v = 40.0 * static_cast<double>(k) *
                         std::max(1.0, std::log2(static_cast<double>(k)));
        return static_cast<u64>(std::min<double>(static_cast<double>(4 * n), std::max(16.0, v)));
    }

    u64 effective_s2(size_t n, size_t k) const {
        if (s2) return s2;
        const double ratio = eps_hat > 0.0 ? phi_hat * phi_hat / eps_hat : 64.0;
        const double v = 40.0 * static_cast<double>(k) * ratio;
        return static_cast<u64>(std::min<double>(static_cast<double>(4 * n), std::max(64.0, v)));
    }

    double effective_floor(size_t n, size_t k) const {
        if (size_floor > 0.0) return size_floor;
        return static_cast<double>(n) / (2.0 * static_cast<double>(k) * max_size_ratio);
    }
};

struct PartitionResult {
    bool accepted = false;
    OrderedPartition partition;
    std::string diagnostic;
};

// ComputeOrderedPartition: up to ceil(log2 k) stages; a center moves into the
// current stage when its candidate's conductance estimate passes the stage
// threshold. Accepts iff every center is placed.
inline PartitionResult compute_ordered_partition(const RegularGraph& g, DotCache& cache,
                                                 const std::vector<CenterRef>& centers,
                                                 const ClusterConfig& cfg, const Seed& seed,
                                                 u64 salt_base) {
    const size_t k = centers.size();
    if (k < 1) throw std::invalid_argument("compute_ordered_partition: k must be >= 1");
    const u64 s1 = cfg.effective_s1(g.n(), k);
    const u64 s2 = cfg.effective_s2(g.n(), k);
    const double floor = cfg.effective_floor(g.n(), k);
    const size_t max_stages =
        std::max<size_t>(1, static_cast<size_t>(std::ceil(std::log2(static_cast<double>(k)))));

    PartitionResult res;
    res.partition.centers = centers;
    std::vector<u32> remaining(k);
    for (size_t c = 0; c < k; ++c) remaining[c] = static_cast<u32>(c);

    try {
        for (size_t stage = 1; stage <= max_stages; ++stage) {
            StagedMembership mem(cache, res.partition.centers, res.partition.stages);
            const double tau = cfg.tau(stage, k);
            std::vector<u32> accepted_now;
            for (u32 c : remaining) {
                const u64 salt = (salt_base << 16) ^ (static_cast<u64>(stage) << 8) ^ c;
                const ConductanceEstimate est = outer_conductance_estimate(
                    g, mem, c, res.partition.stages, remaining, s1, s2, floor, seed, salt);
                if (!est.infinite() && est.value <= tau) accepted_now.push_back(c);
            }
            res.partition.stages.push_back(accepted_now);
            std::vector<u32> still;
            for (u32 c : remaining)
                if (std::find(accepted_now.begin(), accepted_now.end(), c) == accepted_now.end())
                    still.push_back(c);
            remaining = std::move(still);
            if (remaining.empty()) {
                res.accepted = true;
                return res;
            }
        }
    } catch (const ContextFailure& e) {
        res.accepted = false;
        res.diagnostic = std::string("candidate invalid: ") + e.what();
        return res;
    }
    res.accepted = false;
    res.diagnostic = std::to_string(remaining.size()) + " centers never passed the conductance test";
    return res;
}

enum class SearchMode { Exhaustive, GroundTruthWarmstart };

struct FindCentersConfig {
    ClusterConfig cluster;
    size_t sample_size = 0;          // 0 = mode default
    u64 partition_budget = 200000;   // exhaustive enumeration cap
    size_t max_perturbations = 0;    // warmstart extra candidates (0 = 2k)
    std::vector<u32> ground_truth;   // labels per vertex, warmstart only
};

namespace detail {

// Set partitions of [0, n) into exactly k nonempty parts, enumerated in
// restricted-growth-string order. Calls fn(labels); fn returns false to stop.
template <typename Fn>
bool enumerate_partitions(size_t n, size_t k, Fn&& fn) {
    std::vector<u32> labels(n, 0);
    // recursive lexicographic RGS enumeration with parts capped at k
    struct Rec {
        size_t n, k;
        std::vector<u32>& labels;
        Fn& fn;
        bool go(size_t pos, u32 used) {
            if (pos == n) return used == k ? fn(labels) : true;
            const u32 top = std::min<u32>(used + (pos == 0 ? 0 : 1), static_cast<u32>(k));
            for (u32 l = 0; l < std::max<u32>(top, 1); ++l) {
                labels[pos] = l;
                if (!go(pos + 1, std::max(used, l + 1))) return false;
            }
            return true;
        }
    } rec{n, k, labels, fn};
    return rec.go(0, 0);
}

inline std::vector<CenterRef> centers_from_labels(const std::vector<u32>& sample,
                                                  const std::vector<u32>& labels, size_t k) {
    std::vector<CenterRef> centers(k);
    for (size_t i = 0; i < sample.size(); ++i) centers[labels[i]].members.push_back(sample[i]);
    return centers;
}

}  // namespace detail

// FindCenters: repeat ceil(log(2/eta)) rounds of sampling; per round try
// candidate assignments (all set partitions in exhaustive mode, the ground
// truth labeling plus single-element flips in warmstart mode) until one
// ordered partition is accepted.
inline OrderedPartition find_centers(const RegularGraph& g, DotCache& cache, size_t k, double eta,
                                     SearchMode mode, const Seed& seed,
                                     const FindCentersConfig& cfg) {
    if (k < 1) throw std::invalid_argument("find_centers: k must be >= 1");
    if (eta <= 0.0 || eta >= 1.0) throw std::invalid_argument("find_centers: eta in (0,1)");
    const size_t rounds =
        std::max<size_t>(1, static_cast<size_t>(std::ceil(std::log(2.0 / eta))));

    size_t sample_size = cfg.sample_size;
    if (mode == SearchMode::Exhaustive) {
        size_t cap = sample_size ? sample_size : 8;
        if (k >= 2) {
            const size_t budget_cap = static_cast<size_t>(
                std::floor(std::log(static_cast<double>(cfg.partition_budget)) /
                           std::log(static_cast<double>(k))));
            cap = std::min(cap, std::max<size_t>(k, budget_cap));
        }
        sample_size = cap;
    } else {
        if (cfg.ground_truth.size() != g.n())
            throw std::invalid_argument("find_centers: warmstart mode needs ground-truth labels");
        if (!sample_size) sample_size = 12 * k;
    }
    if (sample_size < k)
        throw std::invalid_argument("find_centers: sample smaller than k");

    std::vector<std::string> diags;
    for (size_t round = 0; round < rounds; ++round) {
        const std::vector<u32> sample =
            sample_vertices(seed, StreamTag::SampleS, round, sample_size, g.n(), false);
        u64 candidate_idx = 0;
        std::optional<OrderedPartition> found;

        auto try_labels = [&](const std::vector<u32>& labels) -> bool {
            for (size_t i = 0; i < sample.size(); ++i)
                if (labels[i] >= k) return true;  // skip malformed candidate
            auto centers = detail::centers_from_labels(sample, labels, k);
            for (const auto& c : centers)
                if (c.members.empty()) return true;
            const u64 salt = (static_cast<u64>(round) << 24) | candidate_idx;
            ++candidate_idx;
            PartitionResult res =
                compute_ordered_partition(g, cache, centers, cfg.cluster, seed, salt);
            if (res.accepted) {
                res.partition.warmstart = (mode == SearchMode::GroundTruthWarmstart);
                found = std::move(res.partition);
                return false;  // stop enumeration
            }
            return true;
        };

        if (mode == SearchMode::Exhaustive) {
            detail::enumerate_partitions(sample.size(), k, try_labels);
        } else {
            std::vector<u32> labels(sample.size());
            for (size_t i = 0; i < sample.size(); ++i) labels[i] = cfg.ground_truth[sample[i]];
            bool keep_going = try_labels(labels);
            const size_t max_pert = cfg.max_perturbations ? cfg.max_perturbations : 2 * k;
            size_t tried = 0;
            for (size_t i = 0; keep_going && i < sample.size() && tried < max_pert; ++i) {
                const u32 orig = labels[i];
                for (u32 l = 0; keep_going && l < k && tried < max_pert; ++l) {
                    if (l == orig) continue;
                    labels[i] = l;
                    keep_going = try_labels(labels);
                    ++tried;
                }
                labels[i] = orig;
            }
        }
        if (found) return *found;
        diags.push_back("round " + std::to_string(round) + ": " +
                        std::to_string(candidate_idx) + " candidates rejected");
    }
    throw SearchFailure("find_centers: no candidate partition accepted", diags);
}

// Consistent query surface: the hyperplane label when one exists, otherwise a
// seed-determined uniform label. Pure function of (graph, seed, x).
inline u32 assign_query(StagedMembership& mem, const OrderedPartition& part, u32 x,
                        const Seed& seed) {
    const u32 label = hyperplane_partitioning(mem, x, part);
    if (label != kUnassigned) return label;
    return static_cast<u32>(uniform_below(seed, StreamTag::TieBreak, x, 0, part.k()));
}

struct EvalReport {
    std::vector<double> per_cluster_ratio;  // |C_i sym-diff Chat_{pi(i)}| / |C_i|
    std::vector<size_t> permutation;        // pi: ground-truth cluster -> label
    double max_ratio = 0.0;
};

namespace detail {

// Hungarian algorithm (potentials form), minimizing total cost.
inline std::vector<size_t> hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
    const size_t n = cost.size();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<size_t> p(n + 1, n), way(n + 1, n);
    for (size_t i = 0; i < n; ++i) {
        p[n] = i;
        size_t j0 = n;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const size_t i0 = p[j0];
            double delta = std::numeric_limits<double>::infinity();
            size_t j1 = n;
            for (size_t j = 0; j < n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            const size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }
    std::vector<size_t> row_to_col(n, 0);
    for (size_t j = 0; j < n; ++j)
        if (p[j] != n) row_to_col[p[j]] = j;
    return row_to_col;
}

}  // namespace detail

// Matches output labels to ground-truth clusters by Hungarian assignment on
// overlap counts and reports per-cluster symmetric-difference ratios.
inline EvalReport evaluate_clustering(const std::vector<u32>& labels,
                                      const std::vector<std::vector<u32>>& ground_truth,
                                      size_t k) {
    std::vector<u64> label_sizes(k, 0);
    for (u32 l : labels) {
        if (l >= k) throw std::invalid_argument("evaluate_clustering: label out of range");
        ++label_sizes[l];
    }
    // Pad to a square problem when the cluster counts differ; padded rows or
    // columns behave as empty clusters.
    const size_t dim = std::max(k, ground_truth.size());
    label_sizes.resize(dim, 0);
    std::vector<std::vector<double>> cost(dim, std::vector<double>(dim, 0.0));
    for (size_t c = 0; c < ground_truth.size(); ++c)
        for (u32 x : ground_truth[c])
            cost[c][labels[x]] -= 1.0;  // negative overlap: Hungarian minimizes
    EvalReport rep;
    rep.permutation = detail::hungarian_min_cost(cost);
    rep.per_cluster_ratio.assign(ground_truth.size(), 0.0);
    for (size_t c = 0; c < ground_truth.size(); ++c) {
        const size_t j = rep.permutation[c];
        const double overlap = -cost[c][j];
        const double size_c = static_cast<double>(ground_truth[c].size());
        const double sym_diff = size_c + static_cast<double>(label_sizes[j]) - 2.0 * overlap;
        rep.per_cluster_ratio[c] = sym_diff / size_c;
        rep.max_ratio = std::max(rep.max_ratio, rep.per_cluster_ratio[c]);
    }
    return rep;
}

}  // namespace sco
