#pragma once

// Quantizer design for prior probabilities: the Bayes-risk-error
// divergence, its nearest-neighbor and centroid conditions, and the
// Lloyd-Max iteration under the mean and the maximum criterion. Designs
// always run against the fused team, i.e. the equivalent single agent
// observing the l-th largest observation.

#include "priorq/detection.hpp"
#include "priorq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace priorq {

/// Memoized risk evaluator for one detection problem. Threshold solves and
/// optimal-risk values are cached by exact argument, which makes repeated
/// sweeps over the same grids cheap. Instances are not safe to share
/// across threads; independent instances are.
class RiskModel {
public:
    explicit RiskModel(Problem p) : problem_(std::move(p)) { validate(problem_); }

    const Problem& problem() const { return problem_; }

    const DecisionRule& rule_at(double perceived_prior) const {
        return entry(perceived_prior).first;
    }

    const ErrorPair& errors_at(double perceived_prior) const {
        return entry(perceived_prior).second;
    }

    /// Risk realized at the true prior p0 by the rule designed for the
    /// perceived prior a.
    double mismatched_risk(double p0, double a) const {
        return bayes_risk(p0, errors_at(a), problem_.costs);
    }

    /// R(p0): risk of the rule designed at the true prior.
    double optimal_risk(double p0) const {
        auto it = risk_memo_.find(p0);
        if (it == risk_memo_.end()) {
            it = risk_memo_.emplace(p0, mismatched_risk(p0, p0)).first;
        }
        return it->second;
    }

    /// Bayes risk error d(p0, a) = R_M(a; p0) - R(p0).
    double bre(double p0, double a) const {
        return mismatched_risk(p0, a) - optimal_risk(p0);
    }

private:
    const std::pair<DecisionRule, ErrorPair>& entry(double a) const {
        auto it = rule_memo_.find(a);
        if (it == rule_memo_.end()) {
            DecisionRule rule = optimal_rule(problem_.model, problem_.fusion, a, problem_.costs);
            ErrorPair errors = global_errors(problem_.model, problem_.fusion, rule);
            it = rule_memo_.emplace(a, std::make_pair(rule, errors)).first;
        }
        return it->second;
    }

    Problem problem_;
    mutable std::map<double, std::pair<DecisionRule, ErrorPair>> rule_memo_;
    mutable std::map<double, double> risk_memo_;
};

/// One design setting: a detection problem plus the prior ensemble, with
/// the prior-independent pieces of the MBRE integral cached.
class DesignContext {
public:
    DesignContext(Problem p, PriorDensity prior)
        : risk_(std::move(p)), prior_(std::move(prior)) {
        validate(prior_);
    }

    RiskModel& risk() { return risk_; }
    const RiskModel& risk() const { return risk_; }
    const Problem& problem() const { return risk_.problem(); }
    const PriorDensity& prior() const { return prior_; }

    /// E[R(P0)]: the quantizer-independent part of every MBRE value.
    double mean_optimal_risk() const {
        if (!mean_optimal_risk_) {
            mean_optimal_risk_ = integrate(
                [this](double p0) { return risk_.optimal_risk(p0) * prior_.pdf(p0); },
                0.0, 1.0, 1e-10);
        }
        return *mean_optimal_risk_;
    }

    const QuantileTable& quantiles() const {
        if (!quantiles_) quantiles_.emplace(prior_);
        return *quantiles_;
    }

private:
    RiskModel risk_;
    PriorDensity prior_;
    mutable std::optional<double> mean_optimal_risk_;
    mutable std::optional<QuantileTable> quantiles_;
};

/// Cell boundary equalizing the Bayes risk error of two neighboring
/// representation points, from the closed form
///   b* = c01*dP2 / (c01*dP2 - c10*dP1).
/// When both error differences vanish (the two points induce the same
/// rule) the midpoint is returned and `degenerate`, if given, is set.
inline double nn_boundary(double a_k, double a_next, const RiskModel& rm,
                          bool* degenerate = nullptr) {
    if (!(a_k < a_next)) {
        throw validation_error("nn_boundary: requires a_k < a_next");
    }
    if (degenerate) *degenerate = false;
    const ErrorPair& ek = rm.errors_at(a_k);
    const ErrorPair& en = rm.errors_at(a_next);
    const CostPair& c = rm.problem().costs;
    const double d2 = c.c01 * (en.p2 - ek.p2);
    const double d1 = c.c10 * (en.p1 - ek.p1);
    const double denom = d2 - d1;
    if (denom == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.5 * (a_k + a_next);
    }
    return d2 / denom;
}

/// Mean-criterion centroid of a cell: the conditional mean of the prior
/// over [lo, hi). Empty cells (no prior mass) return nullopt so the caller
/// can collapse them.
inline std::optional<double> centroid_mbre(double lo, double hi, const PriorDensity& prior) {
    const double mass = prior_mass(prior, lo, hi);
    if (!(mass > 1e-14)) return std::nullopt;
    return prior_first_moment(prior, lo, hi) / mass;
}

/// Minimax-criterion centroid: the point equalizing the Bayes risk error
/// at the two cell edges, found by monotone root finding on their gap.
inline double centroid_minimax(double lo, double hi, const RiskModel& rm) {
    if (!(lo < hi)) {
        throw validation_error("centroid_minimax: requires lo < hi");
    }
    auto gap = [&](double a) { return rm.bre(lo, a) - rm.bre(hi, a); };
    return find_root_monotone(gap, lo, hi, 1e-13, false);
}

enum class DesignCriterion { MeanBre, MinimaxBre };

struct LloydMaxOptions {
    int max_iterations = 500;
    double tol = 1e-9;     // max parameter change at convergence
    int restarts = 8;      // extra seeded random initializations
    std::uint64_t seed = 0x5eedULL;
};

struct DesignResult {
    ScalarQuantizer quantizer;
    bool converged = false;
    int iterations = 0;
    double final_change = 0.0;
    double distortion = 0.0; // MBRE or max-BRE, per the design criterion
    std::vector<std::string> diagnostics;
};

/// Mean Bayes risk error of a quantizer under the context's prior. The
/// integral is split at every cell boundary; within a cell the mismatched
/// risk is affine in p0, so only the cell mass and first moment enter.
inline double mbre(const ScalarQuantizer& q, const DesignContext& ctx) {
    const auto& b = q.boundaries();
    const auto& reps = q.reps();
    const RiskModel& rm = ctx.risk();
    const CostPair& c = rm.problem().costs;
    double acc = 0.0;
    for (int k = 0; k < q.levels(); ++k) {
        const double m0 = prior_mass(ctx.prior(), b[k], b[k + 1]);
        if (m0 == 0.0) continue;
        const double m1 = prior_first_moment(ctx.prior(), b[k], b[k + 1]);
        const ErrorPair& e = rm.errors_at(reps[k]);
        acc += c.c10 * e.p1 * m1 + c.c01 * e.p2 * (m0 - m1);
    }
    return acc - ctx.mean_optimal_risk();
}

inline double mbre(const ScalarQuantizer& q, const Problem& p, const PriorDensity& prior) {
    DesignContext ctx(p, prior);
    return mbre(q, ctx);
}

/// Worst-case Bayes risk error of a quantizer over p0 in [0, 1]. The BRE
/// is convex within each cell, so the maximum sits at a cell edge; a
/// coarse safety grid is scanned as well.
inline double max_bre(const ScalarQuantizer& q, const RiskModel& rm) {
    const auto& b = q.boundaries();
    const auto& reps = q.reps();
    double worst = 0.0;
    for (int k = 0; k < q.levels(); ++k) {
        worst = std::max(worst, rm.bre(b[k], reps[k]));
        worst = std::max(worst, rm.bre(b[k + 1], reps[k]));
    }
    constexpr int kSafetyGrid = 257;
    for (int i = 0; i <= kSafetyGrid; ++i) {
        const double p0 = static_cast<double>(i) / kSafetyGrid;
        worst = std::max(worst, rm.bre(p0, q.quantize(p0)));
    }
    return worst;
}

inline double max_bre(const ScalarQuantizer& q, const Problem& p) {
    RiskModel rm(p);
    return max_bre(q, rm);
}

namespace detail {

struct SweepState {
    std::vector<double> boundaries; // size K+1, first 0, last 1
    std::vector<double> reps;       // size K
};

// Merge away cells the prior gives no mass, re-splitting the heaviest
// cell at its conditional mean to keep the level count. Only the mean
// criterion cares; minimax reps never weight by the prior.
inline void ensure_positive_mass_cells(SweepState& s, const DesignContext& ctx,
                                       std::vector<std::string>& diagnostics) {
    for (int guard = 0; guard < 64; ++guard) {
        int empty = -1;
        for (std::size_t k = 0; k + 1 < s.boundaries.size(); ++k) {
            if (prior_mass(ctx.prior(), s.boundaries[k], s.boundaries[k + 1]) <= 1e-14) {
                empty = static_cast<int>(k);
                break;
            }
        }
        if (empty < 0) return;
        diagnostics.push_back("collapsed empty cell " + std::to_string(empty));
        s.boundaries.erase(s.boundaries.begin() + (empty == 0 ? 1 : empty));
        int heaviest = 0;
        double best_mass = -1.0;
        for (std::size_t j = 0; j + 1 < s.boundaries.size(); ++j) {
            const double m = prior_mass(ctx.prior(), s.boundaries[j], s.boundaries[j + 1]);
            if (m > best_mass) {
                best_mass = m;
                heaviest = static_cast<int>(j);
            }
        }
        const auto split =
            centroid_mbre(s.boundaries[heaviest], s.boundaries[heaviest + 1], ctx.prior());
        s.boundaries.insert(
            s.boundaries.begin() + heaviest + 1,
            split.value_or(0.5 * (s.boundaries[heaviest] + s.boundaries[heaviest + 1])));
    }
    throw numerical_error("lloyd_max: could not eliminate empty cells");
}

inline void recompute_reps(SweepState& s, const DesignContext& ctx, DesignCriterion crit,
                           std::vector<std::string>& diagnostics) {
    if (crit == DesignCriterion::MeanBre) {
        ensure_positive_mass_cells(s, ctx, diagnostics);
    }
    const int K = static_cast<int>(s.reps.size());
    for (int k = 0; k < K; ++k) {
        if (crit == DesignCriterion::MinimaxBre) {
            s.reps[k] = centroid_minimax(s.boundaries[k], s.boundaries[k + 1], ctx.risk());
        } else {
            const auto cen = centroid_mbre(s.boundaries[k], s.boundaries[k + 1], ctx.prior());
            s.reps[k] = cen.value_or(0.5 * (s.boundaries[k] + s.boundaries[k + 1]));
        }
    }
}

inline double sweep_once(SweepState& s, const DesignContext& ctx, DesignCriterion crit,
                         std::vector<std::string>& diagnostics) {
    const int K = static_cast<int>(s.reps.size());
    double change = 0.0;
    for (int k = 1; k < K; ++k) {
        bool degen = false;
        const double b = nn_boundary(s.reps[k - 1], s.reps[k], ctx.risk(), &degen);
        if (degen) diagnostics.push_back("degenerate boundary between cells " +
                                         std::to_string(k - 1) + " and " + std::to_string(k));
        change = std::max(change, std::abs(b - s.boundaries[k]));
        s.boundaries[k] = b;
    }
    SweepState before = s;
    recompute_reps(s, ctx, crit, diagnostics);
    for (int k = 0; k < K; ++k) {
        change = std::max(change, std::abs(s.reps[k] - before.reps[k]));
    }
    return change;
}

inline SweepState quantile_init(int K, const DesignContext& ctx) {
    SweepState s;
    s.boundaries.resize(K + 1);
    s.reps.resize(K);
    for (int k = 0; k <= K; ++k) {
        s.boundaries[k] = ctx.quantiles().quantile(static_cast<double>(k) / K);
    }
    s.boundaries.front() = 0.0;
    s.boundaries.back() = 1.0;
    // quantiles of a density with flat-zero stretches can repeat; nudge
    for (int k = 1; k <= K; ++k) {
        if (s.boundaries[k] <= s.boundaries[k - 1]) {
            s.boundaries[k] = s.boundaries[k - 1] + (1.0 - s.boundaries[k - 1]) / (K - k + 2);
        }
    }
    return s;
}

inline SweepState random_init(int K, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    SweepState s;
    s.reps.resize(K);
    while (true) {
        std::vector<double> b{0.0, 1.0};
        for (int k = 1; k < K; ++k) b.push_back(unif(eng));
        std::sort(b.begin(), b.end());
        bool ok = true;
        for (std::size_t i = 1; i < b.size(); ++i) {
            if (b[i] - b[i - 1] < 1e-4) { ok = false; break; }
        }
        if (ok) {
            s.boundaries = std::move(b);
            return s;
        }
    }
}

inline DesignResult run_lloyd_max(SweepState s, DesignContext& ctx, DesignCriterion crit,
                                  const LloydMaxOptions& opt) {
    std::vector<std::string> diagnostics;
    recompute_reps(s, ctx, crit, diagnostics);
    bool converged = false;
    int it = 0;
    double change = 0.0;
    for (; it < opt.max_iterations; ++it) {
        change = sweep_once(s, ctx, crit, diagnostics);
        if (change < opt.tol) {
            converged = true;
            ++it;
            break;
        }
    }
    ScalarQuantizer q(s.boundaries, s.reps);
    const double distortion =
        (crit == DesignCriterion::MeanBre) ? mbre(q, ctx) : max_bre(q, ctx.risk());
    if (!converged) {
        diagnostics.push_back("no convergence after " + std::to_string(it) +
                              " iterations; final change " + std::to_string(change));
    }
    return DesignResult{std::move(q), converged, it, change, distortion, std::move(diagnostics)};
}

} // namespace detail

/// Lloyd-Max design of a K-level quantizer: alternate the nearest-neighbor
/// boundary condition with the criterion's centroid condition until the
/// largest parameter move drops below tol. Starts from prior-quantile
/// boundaries, then from `restarts` seeded random initializations, and
/// keeps the lowest-distortion result. Non-convergence is reported through
/// the result, not thrown.
inline DesignResult lloyd_max(int levels, DesignContext& ctx, DesignCriterion crit,
                              const LloydMaxOptions& opt = {}) {
    if (levels < 1) {
        throw validation_error("lloyd_max: levels must be >= 1");
    }
    DesignResult best = detail::run_lloyd_max(detail::quantile_init(levels, ctx), ctx, crit, opt);
    std::uint64_t state = opt.seed;
    for (int r = 0; r < opt.restarts && levels > 1; ++r) {
        const std::uint64_t restart_seed = splitmix64(state);
        DesignResult cand =
            detail::run_lloyd_max(detail::random_init(levels, restart_seed), ctx, crit, opt);
        if ((cand.converged && !best.converged) ||
            (cand.converged == best.converged && cand.distortion < best.distortion)) {
            best = std::move(cand);
        }
    }
    return best;
}

inline DesignResult lloyd_max(int levels, const Problem& p, const PriorDensity& prior,
                              DesignCriterion crit, const LloydMaxOptions& opt = {}) {
    DesignContext ctx(p, prior);
    return lloyd_max(levels, ctx, crit, opt);
}

} // namespace priorq
