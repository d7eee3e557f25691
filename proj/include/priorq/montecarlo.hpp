#pragma once

// Stochastic simulation of the actual team protocol: draw the state, draw
// one observation per agent, threshold, vote, fuse. Trials are organized
// in fixed-size blocks, each with its own seed-derived generator, so the
// result depends only on (seed, trials) and never on scheduling.

#include "priorq/design.hpp"
#include "priorq/detection.hpp"
#include "priorq/diverse.hpp"
#include "priorq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <thread>
#include <vector>

namespace priorq {

struct SimConfig {
    long long trials = 1000000;
    std::uint64_t seed = 1;
};

inline void validate(const SimConfig& cfg) {
    if (cfg.trials < 1) {
        throw validation_error("SimConfig: trials must be >= 1");
    }
}

struct SimResult {
    long long trials_run = 0;
    long long h0_trials = 0;
    long long h1_trials = 0;
    long long type1_count = 0; // global h1 decisions under h0
    long long type2_count = 0; // global h0 decisions under h1
    double empirical_p1 = 0.0;
    double se_p1 = 0.0;
    double empirical_p2 = 0.0;
    double se_p2 = 0.0;
    double empirical_risk = 0.0;
    double se_risk = 0.0;
};

namespace detail {

constexpr long long kSimBlock = 1 << 16;

inline std::uint64_t block_seed(std::uint64_t seed, long long block) {
    std::uint64_t s = seed + 0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(block + 1);
    return splitmix64(s);
}

struct SimCounts {
    long long h0 = 0, h1 = 0, t1 = 0, t2 = 0;

    SimCounts& operator+=(const SimCounts& o) {
        h0 += o.h0; h1 += o.h1; t1 += o.t1; t2 += o.t2;
        return *this;
    }
};

// One trial's fused vote for a threshold rule; observations drawn lazily.
template <class Rng>
inline bool fused_votes_h1(const Problem& prob, const DecisionRule& rule, bool under_h0,
                           Rng& rng) {
    if (rule.kind == DecisionRule::Kind::AlwaysH1) return true;
    if (rule.kind == DecisionRule::Kind::AlwaysH0) return false;
    const double s = under_h0 ? prob.model.s0 : prob.model.s1;
    int votes = 0;
    if (prob.model.kind == ModelKind::Gaussian) {
        std::normal_distribution<double> noise(0.0, prob.model.sigma);
        for (int i = 0; i < prob.fusion.n; ++i) {
            if (s + noise(rng) >= rule.threshold) ++votes;
        }
    } else {
        std::exponential_distribution<double> lifetime(s);
        for (int i = 0; i < prob.fusion.n; ++i) {
            if (lifetime(rng) >= rule.threshold) ++votes;
        }
    }
    return votes >= prob.fusion.l;
}

// Trials [first, first+count) of a fixed-(p0, rule) run.
inline SimCounts run_block_fixed(const Problem& prob, const DecisionRule& rule, double p0,
                                 std::uint64_t seed, long long block, long long count) {
    std::mt19937_64 rng(block_seed(seed, block));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    SimCounts counts;
    for (long long t = 0; t < count; ++t) {
        const bool under_h0 = unif(rng) < p0;
        const bool decided_h1 = fused_votes_h1(prob, rule, under_h0, rng);
        if (under_h0) {
            ++counts.h0;
            if (decided_h1) ++counts.t1;
        } else {
            ++counts.h1;
            if (!decided_h1) ++counts.t2;
        }
    }
    return counts;
}

inline SimResult finalize(const Problem& prob, const SimCounts& c, long long trials) {
    SimResult r;
    r.trials_run = trials;
    r.h0_trials = c.h0;
    r.h1_trials = c.h1;
    r.type1_count = c.t1;
    r.type2_count = c.t2;
    if (c.h0 > 0) {
        r.empirical_p1 = static_cast<double>(c.t1) / c.h0;
        r.se_p1 = std::sqrt(r.empirical_p1 * (1.0 - r.empirical_p1) / c.h0);
    }
    if (c.h1 > 0) {
        r.empirical_p2 = static_cast<double>(c.t2) / c.h1;
        r.se_p2 = std::sqrt(r.empirical_p2 * (1.0 - r.empirical_p2) / c.h1);
    }
    const double c10 = prob.costs.c10;
    const double c01 = prob.costs.c01;
    r.empirical_risk = (c10 * c.t1 + c01 * c.t2) / trials;
    const double second_moment = (c10 * c10 * c.t1 + c01 * c01 * c.t2) / trials;
    const double var = std::max(0.0, second_moment - r.empirical_risk * r.empirical_risk);
    r.se_risk = std::sqrt(var / trials);
    return r;
}

template <class BlockFn>
inline SimCounts run_blocks(long long trials, BlockFn&& fn) {
    const long long blocks = (trials + kSimBlock - 1) / kSimBlock;
    const unsigned max_workers =
        std::min<unsigned>(8, std::max(1u, std::thread::hardware_concurrency()));
    SimCounts total;
    if (blocks == 1 || max_workers == 1) {
        for (long long b = 0; b < blocks; ++b) {
            const long long count = std::min<long long>(kSimBlock, trials - b * kSimBlock);
            total += fn(b, count);
        }
        return total;
    }
    // counts are integers, so any summation order gives identical totals
    std::vector<std::future<SimCounts>> futures;
    futures.reserve(max_workers);
    for (unsigned w = 0; w < max_workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w]() {
            SimCounts part;
            for (long long b = w; b < blocks; b += max_workers) {
                const long long count = std::min<long long>(kSimBlock, trials - b * kSimBlock);
                part += fn(b, count);
            }
            return part;
        }));
    }
    for (auto& f : futures) total += f.get();
    return total;
}

} // namespace detail

/// Simulate the team with a fixed common rule at a fixed true prior.
inline SimResult simulate_team(const Problem& prob, const DecisionRule& rule, double p0,
                               const SimConfig& cfg) {
    validate(prob);
    validate(cfg);
    if (!(p0 >= 0.0 && p0 <= 1.0)) {
        throw validation_error("simulate_team: p0 must lie in [0,1]");
    }
    const detail::SimCounts counts =
        detail::run_blocks(cfg.trials, [&](long long b, long long count) {
            return detail::run_block_fixed(prob, rule, p0, cfg.seed, b, count);
        });
    return detail::finalize(prob, counts, cfg.trials);
}

/// Simulate with the common rule induced by a shared perceived prior.
inline SimResult simulate_team(const Problem& prob, double perceived_prior, double p0,
                               const SimConfig& cfg) {
    const DecisionRule rule =
        optimal_rule(prob.model, prob.fusion, perceived_prior, prob.costs);
    return simulate_team(prob, rule, p0, cfg);
}

/// Simulate with the rule the bank's effective prior induces at p0.
inline SimResult simulate_team(const Problem& prob, const QuantizerBank& bank, double p0,
                               const SimConfig& cfg) {
    return simulate_team(prob, effective_prior(bank, p0), p0, cfg);
}

/// Simulate with the true prior itself drawn from the ensemble each trial.
/// The empirical risk estimates the mean mismatched risk of the bank,
/// i.e. MBRE plus the mean matched risk. Rules are precomputed per merged
/// segment of the bank, one rule per distinct effective prior.
inline SimResult simulate_team_sampled(const Problem& prob, const QuantizerBank& bank,
                                       const PriorDensity& prior, const SimConfig& cfg) {
    validate(prob);
    validate(cfg);
    const QuantileTable table(prior);
    const std::vector<double> pts = merged_breakpoints(bank);
    std::vector<DecisionRule> segment_rules;
    segment_rules.reserve(pts.size());
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        segment_rules.push_back(
            optimal_rule(prob.model, prob.fusion, effective_prior(bank, pts[k]), prob.costs));
    }
    const detail::SimCounts counts =
        detail::run_blocks(cfg.trials, [&](long long b, long long count) {
            std::mt19937_64 rng(detail::block_seed(cfg.seed, b));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            detail::SimCounts part;
            for (long long t = 0; t < count; ++t) {
                const double p0 = table.quantile(unif(rng));
                const auto it = std::upper_bound(pts.begin() + 1, pts.end() - 1, p0);
                const auto seg = static_cast<std::size_t>(it - pts.begin()) - 1;
                const bool under_h0 = unif(rng) < p0;
                const bool decided_h1 =
                    detail::fused_votes_h1(prob, segment_rules[seg], under_h0, rng);
                if (under_h0) {
                    ++part.h0;
                    if (decided_h1) ++part.t1;
                } else {
                    ++part.h1;
                    if (!decided_h1) ++part.t2;
                }
            }
            return part;
        });
    return detail::finalize(prob, counts, cfg.trials);
}

/// Side-by-side comparison of the three design strategies at one level
/// count K: agents designing as if alone (against the base observation
/// noise), the optimal identical K-level design against the fused team,
/// and the optimal diverse bank disassembled from the (n(K-1)+1)-level
/// team design. Includes a sampled-prior simulation of the oblivious team
/// and the analytic value it should estimate.
struct ObliviousComparison {
    double oblivious_mbre = 0.0;
    double identical_mbre = 0.0;
    double diverse_mbre = 0.0;
    double analytic_mean_risk_oblivious = 0.0; // mean mismatched risk
    SimResult oblivious_sim;
};

inline ObliviousComparison simulate_oblivious(const Problem& prob, const PriorDensity& prior,
                                              int levels, const SimConfig& cfg,
                                              const LloydMaxOptions& opt = {}) {
    validate(prob);
    Problem solo = prob;
    solo.fusion = FusionRule{1, 1};
    DesignContext solo_ctx(solo, prior);
    DesignContext team_ctx(prob, prior);

    const ScalarQuantizer oblivious_q =
        lloyd_max(levels, solo_ctx, DesignCriterion::MeanBre, opt).quantizer;
    const ScalarQuantizer identical_q =
        lloyd_max(levels, team_ctx, DesignCriterion::MeanBre, opt).quantizer;
    const int source_levels = prob.fusion.n * (levels - 1) + 1;
    const ScalarQuantizer source_q =
        lloyd_max(source_levels, team_ctx, DesignCriterion::MeanBre, opt).quantizer;
    const Disassembly diverse = disassemble(source_q, prob.fusion.n);

    ObliviousComparison cmp;
    cmp.oblivious_mbre = mbre(oblivious_q, team_ctx);
    cmp.identical_mbre = mbre(identical_q, team_ctx);
    cmp.diverse_mbre = mbre(diverse.bank, team_ctx);
    cmp.analytic_mean_risk_oblivious = cmp.oblivious_mbre + team_ctx.mean_optimal_risk();
    cmp.oblivious_sim = simulate_team_sampled(
        prob, QuantizerBank::identical(oblivious_q, prob.fusion.n), prior, cfg);
    return cmp;
}

} // namespace priorq
