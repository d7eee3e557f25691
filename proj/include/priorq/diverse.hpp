#pragma once

// Diverse-quantizer machinery: the perceived common risk that lets agents
// with different quantizers share one objective, and the disassembly of a
// single (N(K-1)+1)-level quantizer into N equivalent K-level quantizers.

#include "priorq/design.hpp"
#include "priorq/detection.hpp"
#include "priorq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace priorq {

/// N per-agent quantizers plus their positive convex weights.
class QuantizerBank {
public:
    QuantizerBank(std::vector<ScalarQuantizer> quantizers, std::vector<double> weights)
        : quantizers_(std::move(quantizers)), weights_(std::move(weights)) {
        if (quantizers_.empty() || quantizers_.size() != weights_.size()) {
            throw validation_error("QuantizerBank: need one weight per quantizer");
        }
        double sum = 0.0;
        for (double u : weights_) {
            if (!(u > 0.0)) {
                throw validation_error("QuantizerBank: weights must be strictly positive");
            }
            sum += u;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw validation_error("QuantizerBank: weights must sum to 1, got " +
                                   std::to_string(sum));
        }
    }

    /// All agents sharing one quantizer.
    static QuantizerBank identical(const ScalarQuantizer& q, int agents) {
        std::vector<ScalarQuantizer> qs(agents, q);
        std::vector<double> w(agents, 1.0 / agents);
        return QuantizerBank(std::move(qs), std::move(w));
    }

    int agents() const { return static_cast<int>(quantizers_.size()); }
    const std::vector<ScalarQuantizer>& quantizers() const { return quantizers_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<ScalarQuantizer> quantizers_;
    std::vector<double> weights_;
};

/// The weighted quantized prior sum u_i q_i(p0) that drives the common
/// decision rule under the perceived common risk.
inline double effective_prior(const QuantizerBank& bank, double p0) {
    double acc = 0.0;
    for (int i = 0; i < bank.agents(); ++i) {
        acc += bank.weights()[i] * bank.quantizers()[i].quantize(p0);
    }
    return acc;
}

/// Perceived common risk of the bank at p0 for a fixed error pair. The
/// weighted sum of per-agent perceived risks and the single-agent risk at
/// the effective prior must agree by linearity; both are computed and
/// cross-checked.
inline double perceived_common_risk(const QuantizerBank& bank, double p0,
                                    const ErrorPair& errors, const CostPair& costs) {
    const double via_effective = bayes_risk(effective_prior(bank, p0), errors, costs);
    double via_sum = 0.0;
    for (int i = 0; i < bank.agents(); ++i) {
        via_sum += bank.weights()[i] *
                   bayes_risk(bank.quantizers()[i].quantize(p0), errors, costs);
    }
    const double scale = std::max({1.0, std::abs(via_effective), std::abs(via_sum)});
    if (std::abs(via_effective - via_sum) > 1e-12 * scale) {
        throw numerical_error("perceived_common_risk: weighted-sum and effective-prior "
                              "forms disagree", std::abs(via_effective - via_sum));
    }
    return via_effective;
}

/// Result of disassembling a source quantizer; representation points that
/// landed outside [0, 1] are listed as (agent, value) pairs. They are kept
/// unclamped, since clamping would break the equivalence.
struct Disassembly {
    QuantizerBank bank;
    std::vector<std::pair<int, double>> out_of_range_reps;
};

/// Split an (n(K-1)+1)-level quantizer q_S into n K-level quantizers whose
/// weighted sum reproduces q_S everywhere. Interior boundaries of q_S are
/// dealt round-robin to the agents, every agent's first representation
/// point starts at the first point of q_S, and crossing a boundary owned
/// by agent i moves only that agent's point by (x_{k+1} - x_k)/u_i, which
/// telescopes the weighted sum to x_{k+1}.
inline Disassembly disassemble(const ScalarQuantizer& source, int agents,
                               std::vector<double> weights = {}) {
    if (agents < 1) {
        throw validation_error("disassemble: need at least one agent");
    }
    if (weights.empty()) {
        weights.assign(agents, 1.0 / agents);
    }
    if (static_cast<int>(weights.size()) != agents) {
        throw validation_error("disassemble: need one weight per agent");
    }
    const int source_levels = source.levels();
    if ((source_levels - 1) % agents != 0) {
        throw validation_error(
            "disassemble: source must have n(K-1)+1 levels for integer K; got " +
            std::to_string(source_levels) + " levels for n=" + std::to_string(agents));
    }

    if (agents == 1) {
        return Disassembly{QuantizerBank({source}, {1.0}), {}};
    }

    const auto& sb = source.boundaries();
    const auto& sx = source.reps();

    std::vector<std::vector<double>> agent_bounds(agents, std::vector<double>{0.0});
    std::vector<std::vector<double>> agent_reps(agents);
    std::vector<double> current(agents, sx[0]);
    for (int i = 0; i < agents; ++i) {
        agent_reps[i].push_back(sx[0]);
    }
    for (int j = 1; j < source_levels; ++j) {
        const int owner = (j - 1) % agents;
        agent_bounds[owner].push_back(sb[j]);
        current[owner] += (sx[j] - sx[j - 1]) / weights[owner];
        agent_reps[owner].push_back(current[owner]);
    }

    std::vector<ScalarQuantizer> qs;
    std::vector<std::pair<int, double>> out_of_range;
    qs.reserve(agents);
    for (int i = 0; i < agents; ++i) {
        agent_bounds[i].push_back(1.0);
        for (double a : agent_reps[i]) {
            if (a < 0.0 || a > 1.0) out_of_range.emplace_back(i, a);
        }
        qs.emplace_back(std::move(agent_bounds[i]), std::move(agent_reps[i]));
    }
    return Disassembly{QuantizerBank(std::move(qs), std::move(weights)),
                       std::move(out_of_range)};
}

struct EquivalenceReport {
    double max_deviation = 0.0;
    bool pass = false;
    int points_checked = 0;
};

/// Largest gap between the bank's effective prior and the source quantizer
/// over a uniform grid plus points flanking every cell boundary involved.
inline EquivalenceReport verify_equivalence(const QuantizerBank& bank,
                                            const ScalarQuantizer& source, int grid_points) {
    std::vector<double> probes;
    probes.reserve(grid_points + 6 * (source.levels() + 1) * (bank.agents() + 1));
    for (int i = 0; i < grid_points; ++i) {
        probes.push_back(static_cast<double>(i) / (grid_points - 1));
    }
    auto add_flanked = [&probes](double b) {
        for (double x : {std::nextafter(b, 0.0), b, std::nextafter(b, 1.0)}) {
            if (x >= 0.0 && x <= 1.0) probes.push_back(x);
        }
    };
    for (double b : source.boundaries()) add_flanked(b);
    for (const auto& q : bank.quantizers()) {
        for (double b : q.boundaries()) add_flanked(b);
    }

    EquivalenceReport report;
    report.points_checked = static_cast<int>(probes.size());
    for (double p0 : probes) {
        const double dev = std::abs(effective_prior(bank, p0) - source.quantize(p0));
        report.max_deviation = std::max(report.max_deviation, dev);
    }
    report.pass = report.max_deviation <= 1e-10;
    return report;
}

/// Sorted union of all cell boundaries in the bank. Between consecutive
/// entries the effective prior is constant.
inline std::vector<double> merged_breakpoints(const QuantizerBank& bank) {
    std::vector<double> pts;
    for (const auto& q : bank.quantizers()) {
        pts.insert(pts.end(), q.boundaries().begin(), q.boundaries().end());
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

/// Mean Bayes risk error of a diverse bank: the effective prior is
/// piecewise constant on the merged segments, so the same per-cell
/// decomposition as for a single quantizer applies.
inline double mbre(const QuantizerBank& bank, const DesignContext& ctx) {
    const std::vector<double> pts = merged_breakpoints(bank);
    const RiskModel& rm = ctx.risk();
    const CostPair& c = rm.problem().costs;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double m0 = prior_mass(ctx.prior(), pts[k], pts[k + 1]);
        if (m0 == 0.0) continue;
        const double m1 = prior_first_moment(ctx.prior(), pts[k], pts[k + 1]);
        const ErrorPair& e = rm.errors_at(effective_prior(bank, pts[k]));
        acc += c.c10 * e.p1 * m1 + c.c01 * e.p2 * (m0 - m1);
    }
    return acc - ctx.mean_optimal_risk();
}

/// Worst-case Bayes risk error of the bank over p0.
inline double max_bre(const QuantizerBank& bank, const RiskModel& rm) {
    const std::vector<double> pts = merged_breakpoints(bank);
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double a = effective_prior(bank, pts[k]);
        worst = std::max(worst, rm.bre(pts[k], a));
        worst = std::max(worst, rm.bre(pts[k + 1], a));
    }
    return worst;
}

} // namespace priorq
