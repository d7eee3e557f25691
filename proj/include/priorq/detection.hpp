#pragma once

// Hypothesis-testing engine for an N-agent team fused by an L-out-of-N
// rule. All agents share one decision threshold, so the team behaves like
// a single agent observing the L-th largest of the N observations; that
// reduction drives both the optimal-threshold solve and the closed-form
// error probabilities.

#include "priorq/errors.hpp"
#include "priorq/numerics.hpp"
#include "priorq/order_stats.hpp"

#include <cmath>
#include <string>

namespace priorq {

enum class ModelKind { Gaussian, Exponential };

/// Observation distribution per hypothesis.
///
/// Gaussian: state h_m emits signal s_m, observed through additive
/// N(0, sigma^2) noise; requires s1 > s0. Exponential: state h_m gives an
/// Exp(s_m)-distributed lifetime; requires s0 > s1 > 0 (h0 decays faster),
/// and sigma is unused.
struct LikelihoodModel {
    ModelKind kind = ModelKind::Gaussian;
    double s0 = 0.0;
    double s1 = 1.0;
    double sigma = 1.0;

    static LikelihoodModel gaussian(double s0, double s1, double sigma) {
        return {ModelKind::Gaussian, s0, s1, sigma};
    }
    static LikelihoodModel exponential(double s0, double s1) {
        return {ModelKind::Exponential, s0, s1, 0.0};
    }
};

inline void validate(const LikelihoodModel& m) {
    if (m.kind == ModelKind::Gaussian) {
        if (!(m.s1 > m.s0)) {
            throw validation_error("LikelihoodModel: gaussian requires s1 > s0");
        }
        if (!(m.sigma > 0.0)) {
            throw validation_error("LikelihoodModel: gaussian requires sigma > 0");
        }
    } else {
        if (!(m.s0 > m.s1 && m.s1 > 0.0)) {
            throw validation_error("LikelihoodModel: exponential requires s0 > s1 > 0");
        }
    }
}

/// The global decision is h1 when at least l of the n agents vote h1.
struct FusionRule {
    int n = 1;
    int l = 1;

    static FusionRule majority(int n) { return {n, (n + 2) / 2}; }
    static FusionRule or_rule(int n) { return {n, 1}; }
};

inline void validate(const FusionRule& f) {
    if (f.n < 1 || f.l < 1 || f.l > f.n) {
        throw validation_error("FusionRule: requires 1 <= l <= n, got l=" +
                               std::to_string(f.l) + " n=" + std::to_string(f.n));
    }
}

struct CostPair {
    double c10 = 1.0; // false alarm (h0 read as h1)
    double c01 = 1.0; // missed detection (h1 read as h0)
};

inline void validate(const CostPair& c) {
    if (!(c.c10 > 0.0 && c.c01 > 0.0)) {
        throw validation_error("CostPair: costs must be strictly positive");
    }
}

/// Global Type I / Type II error probabilities of the fused decision.
struct ErrorPair {
    double p1 = 0.0; // P(decide h1 | h0)
    double p2 = 0.0; // P(decide h0 | h1)
};

/// A common per-agent decision rule: either a finite threshold (vote h1
/// when y >= threshold; ties go to h1) or one of the two degenerate rules
/// that arise from perceived priors 0 and 1.
struct DecisionRule {
    enum class Kind { Threshold, AlwaysH0, AlwaysH1 };

    Kind kind = Kind::Threshold;
    double threshold = 0.0;

    static DecisionRule at(double lambda) { return {Kind::Threshold, lambda}; }
    static DecisionRule always_h0() { return {Kind::AlwaysH0, 0.0}; }
    static DecisionRule always_h1() { return {Kind::AlwaysH1, 0.0}; }

    bool is_threshold() const { return kind == Kind::Threshold; }
};

/// One detection problem instance: likelihoods, fusion rule, Bayes costs.
struct Problem {
    LikelihoodModel model;
    FusionRule fusion;
    CostPair costs;
};

inline void validate(const Problem& p) {
    validate(p.model);
    validate(p.fusion);
    validate(p.costs);
}

/// Per-agent error probabilities of the threshold rule:
/// p1 = P(y >= t | h0), p2 = P(y < t | h1). For the exponential model the
/// observation is a nonnegative lifetime, so thresholds below 0 act as 0.
inline ErrorPair local_errors(const LikelihoodModel& m, double threshold) {
    if (m.kind == ModelKind::Gaussian) {
        return {norm_sf((threshold - m.s0) / m.sigma),
                norm_cdf((threshold - m.s1) / m.sigma)};
    }
    const double t = std::max(threshold, 0.0);
    return {std::exp(-m.s0 * t), -std::expm1(-m.s1 * t)};
}

/// P(X >= k) for X ~ Binomial(n, p). Coefficients come from a
/// multiplicative recurrence, exact in double up to n ~ 50.
inline double binomial_at_least(int n, int k, double p) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double total = 0.0;
    double coeff = 1.0; // C(n, j)
    for (int j = 0; j <= n; ++j) {
        if (j >= k) {
            total += coeff * std::pow(p, j) * std::pow(1.0 - p, n - j);
        }
        coeff *= static_cast<double>(n - j) / (j + 1.0);
    }
    return std::min(1.0, total);
}

/// Global fused error probabilities for a common rule, via the binomial
/// vote sums over identical per-agent errors.
inline ErrorPair global_errors(const LikelihoodModel& m, const FusionRule& f,
                               const DecisionRule& rule) {
    validate(m);
    validate(f);
    if (rule.kind == DecisionRule::Kind::AlwaysH1) return {1.0, 0.0};
    if (rule.kind == DecisionRule::Kind::AlwaysH0) return {0.0, 1.0};
    const ErrorPair local = local_errors(m, rule.threshold);
    return {binomial_at_least(f.n, f.l, local.p1),
            binomial_at_least(f.n, f.n - f.l + 1, local.p2)};
}

/// Bayes risk p0*c10*P1 + (1-p0)*c01*P2.
inline double bayes_risk(double prior, const ErrorPair& errors, const CostPair& costs) {
    if (!(prior >= 0.0 && prior <= 1.0)) {
        throw validation_error("bayes_risk: prior must lie in [0,1]");
    }
    return prior * costs.c10 * errors.p1 + (1.0 - prior) * costs.c01 * errors.p2;
}

/// Distribution of the l-th largest of the n observations under the given
/// hypothesis (0 or 1); the exact observable the fused team thresholds.
inline OrderStatisticNoise equivalent_observation(const LikelihoodModel& m,
                                                  const FusionRule& f, int hypothesis) {
    validate(m);
    validate(f);
    const double s = (hypothesis == 0) ? m.s0 : m.s1;
    OrderStatisticNoise noise;
    noise.n = f.n;
    noise.l = f.l;
    if (m.kind == ModelKind::Gaussian) {
        const double sigma = m.sigma;
        noise.base_cdf = [s, sigma](double y) { return norm_cdf((y - s) / sigma); };
        noise.base_pdf = [s, sigma](double y) { return norm_pdf((y - s) / sigma) / sigma; };
    } else {
        noise.base_cdf = [s](double y) { return y <= 0.0 ? 0.0 : -std::expm1(-s * y); };
        noise.base_pdf = [s](double y) { return y <= 0.0 ? 0.0 : s * std::exp(-s * y); };
    }
    return noise;
}

namespace detail {

// log f_V(y | h_m) up to hypothesis-independent constants, where V is the
// l-th largest observation. Gaussian case.
inline double log_os_density_gauss(const LikelihoodModel& m, const FusionRule& f,
                                   double y, double s) {
    const double z = (y - s) / m.sigma;
    return (f.n - f.l) * log_norm_cdf(z) + (f.l - 1) * log_norm_sf(z) - 0.5 * z * z;
}

// Exponential case; valid for y > 0.
inline double log_os_density_expo(const LikelihoodModel& m, const FusionRule& f,
                                  double y, double s) {
    return (f.n - f.l) * std::log(-std::expm1(-s * y)) + std::log(s) - s * y * f.l;
}

inline double log_odds(double perceived_prior, const CostPair& costs) {
    return std::log(perceived_prior * costs.c10) -
           std::log((1.0 - perceived_prior) * costs.c01);
}

inline DecisionRule optimal_rule_gauss(const LikelihoodModel& m, const FusionRule& f,
                                       double perceived_prior, const CostPair& costs) {
    const double tau = log_odds(perceived_prior, costs);
    auto gap = [&](double y) {
        return log_os_density_gauss(m, f, y, m.s1) - log_os_density_gauss(m, f, y, m.s0) - tau;
    };
    // center the bracket on the single-agent threshold, which is exact for
    // n = 1 and a good start otherwise
    const double center = 0.5 * (m.s0 + m.s1) + m.sigma * m.sigma * tau / (m.s1 - m.s0);
    try {
        const double lambda =
            find_root_monotone(gap, center - m.sigma, center + m.sigma, 1e-12, true);
        return DecisionRule::at(lambda);
    } catch (const numerical_error&) {
        // log-likelihood-ratio route failed; minimize the perceived risk directly
        auto risk = [&](double y) {
            return bayes_risk(perceived_prior, global_errors(m, f, DecisionRule::at(y)), costs);
        };
        const double w = 40.0 * m.sigma + std::abs(tau);
        return DecisionRule::at(golden_section_min(risk, m.s0 - w, m.s1 + w, 1e-11));
    }
}

inline DecisionRule optimal_rule_expo(const LikelihoodModel& m, const FusionRule& f,
                                      double perceived_prior, const CostPair& costs) {
    const double tau = log_odds(perceived_prior, costs);
    if (f.n == 1) {
        const double lambda = (std::log(m.s0 / m.s1) + tau) / (m.s0 - m.s1);
        return DecisionRule::at(std::max(lambda, 0.0));
    }
    // The likelihood ratio of the l-th longest lifetime starts at
    // (s1/s0)^(n-l+1) at y = 0+ and increases; below that the optimum is
    // the boundary rule y >= 0, i.e. vote h1 always.
    const double log_lr_at_zero = (f.n - f.l + 1) * std::log(m.s1 / m.s0);
    if (tau <= log_lr_at_zero) {
        return DecisionRule::at(0.0);
    }
    auto gap = [&](double y) {
        return log_os_density_expo(m, f, y, m.s1) - log_os_density_expo(m, f, y, m.s0) - tau;
    };
    const double scale = 1.0 / (m.s0 - m.s1);
    const double lambda =
        find_root_monotone(gap, 1e-12, std::max(scale, 1.0), 1e-13, true);
    return DecisionRule::at(lambda);
}

} // namespace detail

/// Common decision rule minimizing the perceived Bayes risk
/// p'*c10*P1(rule) + (1-p')*c01*P2(rule) over the fused team. Perceived
/// priors 0 and 1 yield the degenerate always-h1 / always-h0 rules.
inline DecisionRule optimal_rule(const LikelihoodModel& m, const FusionRule& f,
                                 double perceived_prior, const CostPair& costs) {
    validate(m);
    validate(f);
    validate(costs);
    if (!(perceived_prior >= 0.0 && perceived_prior <= 1.0)) {
        throw validation_error("optimal_rule: perceived prior must lie in [0,1]");
    }
    if (perceived_prior == 0.0) return DecisionRule::always_h1();
    if (perceived_prior == 1.0) return DecisionRule::always_h0();
    if (m.kind == ModelKind::Gaussian) {
        return detail::optimal_rule_gauss(m, f, perceived_prior, costs);
    }
    return detail::optimal_rule_expo(m, f, perceived_prior, costs);
}

/// Risk the team believes it is incurring when it trusts `perceived_prior`.
inline double perceived_risk(const LikelihoodModel& m, const FusionRule& f,
                             const CostPair& costs, double perceived_prior,
                             const DecisionRule& rule) {
    return bayes_risk(perceived_prior, global_errors(m, f, rule), costs);
}

/// Risk triple for operating at `perceived_prior` when the truth is
/// `prior`: the realized (mismatched) risk, the risk of the rule designed
/// at the true prior, and their gap (the Bayes risk error).
struct RiskReport {
    double prior = 0.0;
    double perceived_prior = 0.0;
    DecisionRule rule;
    ErrorPair errors;
    double true_risk = 0.0;
    double mismatched_risk = 0.0;
    double bre = 0.0;
};

inline RiskReport risk_report(const LikelihoodModel& m, const FusionRule& f,
                              const CostPair& costs, double prior, double perceived_prior) {
    if (!(prior >= 0.0 && prior <= 1.0)) {
        throw validation_error("risk_report: prior must lie in [0,1]");
    }
    RiskReport r;
    r.prior = prior;
    r.perceived_prior = perceived_prior;
    r.rule = optimal_rule(m, f, perceived_prior, costs);
    r.errors = global_errors(m, f, r.rule);
    r.mismatched_risk = bayes_risk(prior, r.errors, costs);
    if (perceived_prior == prior) {
        r.true_risk = r.mismatched_risk;
    } else {
        const DecisionRule matched = optimal_rule(m, f, prior, costs);
        r.true_risk = bayes_risk(prior, global_errors(m, f, matched), costs);
    }
    r.bre = r.mismatched_risk - r.true_risk;
    return r;
}

} // namespace priorq
