// Perceived common risk and the disassembly of identical designs into
// diverse per-agent quantizers.

#include "priorq/diverse.hpp"
#include "priorq/montecarlo.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace priorq;
using Catch::Approx;

namespace {

const Problem kGauss53{LikelihoodModel::gaussian(0.0, 1.0, 1.0), {5, 3}, {1.0, 1.0}};

QuantizerBank random_bank(std::mt19937_64& eng, int agents) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<ScalarQuantizer> qs;
    for (int i = 0; i < agents; ++i) {
        const double b = 0.2 + 0.6 * unif(eng);
        qs.push_back(ScalarQuantizer({0.0, b, 1.0}, {b * unif(eng), b + (1 - b) * unif(eng)}));
    }
    std::vector<double> w(agents, 0.0);
    double total = 0.0;
    for (double& x : w) {
        x = 0.1 + unif(eng);
        total += x;
    }
    for (double& x : w) x /= total;
    // renormalize the tiny float residue so the invariant holds exactly
    w.back() += 1.0 - std::accumulate(w.begin(), w.end(), 0.0);
    return QuantizerBank(std::move(qs), std::move(w));
}

} // namespace

TEST_CASE("effective_prior: identical bank reproduces the shared quantizer") {
    const ScalarQuantizer q({0.0, 0.4, 1.0}, {0.2, 0.7});
    const QuantizerBank bank = QuantizerBank::identical(q, 5);
    for (double p0 : {0.0, 0.39, 0.4, 0.95, 1.0}) {
        CHECK(effective_prior(bank, p0) == Approx(q.quantize(p0)).margin(1e-15));
    }
}

TEST_CASE("effective_prior: two-agent arithmetic") {
    const QuantizerBank bank(
        {ScalarQuantizer({0.0, 0.5, 1.0}, {0.2, 0.2}),
         ScalarQuantizer({0.0, 0.5, 1.0}, {0.6, 0.6})},
        {0.5, 0.5});
    CHECK(effective_prior(bank, 0.3) == Approx(0.4).margin(1e-15));
}

TEST_CASE("QuantizerBank: weight validation") {
    const ScalarQuantizer q({0.0, 1.0}, {0.5});
    CHECK_THROWS_AS(QuantizerBank({q, q}, {1.0, 0.0}), validation_error);
    CHECK_THROWS_AS(QuantizerBank({q, q}, {0.7, 0.2}), validation_error);
    CHECK_THROWS_AS(QuantizerBank({q, q}, {0.5}), validation_error);
    CHECK_NOTHROW(QuantizerBank({q, q}, {0.5, 0.5}));
}

TEST_CASE("perceived_common_risk: identical bank equals the perceived risk") {
    const ScalarQuantizer q({0.0, 0.4, 1.0}, {0.2, 0.7});
    const QuantizerBank bank = QuantizerBank::identical(q, 5);
    const ErrorPair errors{0.2, 0.3};
    const CostPair costs{1.0, 2.0};
    const double pcr = perceived_common_risk(bank, 0.3, errors, costs);
    CHECK(pcr == Approx(bayes_risk(q.quantize(0.3), errors, costs)).margin(1e-14));
}

TEST_CASE("perceived_common_risk: both forms agree on random banks") {
    std::mt19937_64 eng(20625);
    for (int trial = 0; trial < 30; ++trial) {
        const QuantizerBank bank = random_bank(eng, 2 + trial % 4);
        const ErrorPair errors{0.15, 0.4};
        const CostPair costs{1.3, 0.8};
        for (double p0 : {0.1, 0.5, 0.9}) {
            CHECK_NOTHROW(perceived_common_risk(bank, p0, errors, costs));
        }
    }
}

TEST_CASE("disassemble: one cell gives every agent the same point") {
    const ScalarQuantizer q({0.0, 1.0}, {0.44});
    const Disassembly d = disassemble(q, 5);
    CHECK(d.bank.agents() == 5);
    for (const auto& agent_q : d.bank.quantizers()) {
        CHECK(agent_q.levels() == 1);
        CHECK(agent_q.reps()[0] == Approx(0.44).margin(1e-15));
    }
    CHECK(d.out_of_range_reps.empty());
}

TEST_CASE("disassemble: single agent returns the source unchanged") {
    const ScalarQuantizer q({0.0, 0.3, 1.0}, {0.1, 0.6});
    const Disassembly d = disassemble(q, 1);
    CHECK(d.bank.agents() == 1);
    CHECK(d.bank.quantizers()[0].boundaries() == q.boundaries());
    CHECK(d.bank.quantizers()[0].reps() == q.reps());
}

TEST_CASE("disassemble: level-count shape is enforced") {
    // 7 levels cannot be n(K-1)+1 for n=5
    std::vector<double> b{0.0};
    for (int i = 1; i < 7; ++i) b.push_back(i / 7.0);
    b.push_back(1.0);
    std::vector<double> reps;
    for (int i = 0; i < 7; ++i) reps.push_back((b[i] + b[i + 1]) / 2);
    CHECK_THROWS_AS(disassemble(ScalarQuantizer(b, reps), 5), validation_error);
}

TEST_CASE("disassemble: designed 6-level source splits into five 2-level agents") {
    DesignContext ctx(kGauss53, PriorDensity::uniform());
    const ScalarQuantizer source = lloyd_max(6, ctx, DesignCriterion::MeanBre).quantizer;
    const Disassembly d = disassemble(source, 5);

    REQUIRE(d.bank.agents() == 5);
    for (const auto& q : d.bank.quantizers()) {
        CHECK(q.levels() == 2);
    }

    // defining property on a fine grid including boundary-adjacent points
    const EquivalenceReport rep = verify_equivalence(d.bank, source, 10000);
    CHECK(rep.pass);
    CHECK(rep.max_deviation <= 1e-10);

    // the bank inherits the source's mean distortion
    CHECK(mbre(d.bank, ctx) == Approx(mbre(source, ctx)).margin(1e-8));

    // interior boundaries of the source are dealt to exactly one agent
    std::multiset<double> dealt;
    for (const auto& q : d.bank.quantizers()) {
        for (std::size_t i = 1; i + 1 < q.boundaries().size(); ++i) {
            dealt.insert(q.boundaries()[i]);
        }
    }
    const auto& sb = source.boundaries();
    CHECK(dealt.size() == sb.size() - 2);
    for (std::size_t i = 1; i + 1 < sb.size(); ++i) {
        CHECK(dealt.count(sb[i]) == 1);
    }

    // row equations: weighted representation points reproduce the source
    // point on every source cell
    for (int k = 0; k < source.levels(); ++k) {
        const double probe = 0.5 * (sb[k] + sb[k + 1]);
        double weighted = 0.0;
        for (int i = 0; i < 5; ++i) {
            weighted += d.bank.weights()[i] * d.bank.quantizers()[i].quantize(probe);
        }
        CHECK(weighted == Approx(source.reps()[k]).margin(1e-12));
    }
}

TEST_CASE("disassemble: pointwise risk matches the source everywhere") {
    DesignContext ctx(kGauss53, PriorDensity::uniform());
    const ScalarQuantizer source = lloyd_max(11, ctx, DesignCriterion::MeanBre).quantizer;
    const Disassembly d = disassemble(source, 5);
    for (int i = 0; i <= 500; ++i) {
        const double p0 = i / 500.0;
        const double via_bank = ctx.risk().mismatched_risk(p0, effective_prior(d.bank, p0));
        const double via_source = ctx.risk().mismatched_risk(p0, source.quantize(p0));
        CHECK(via_bank == Approx(via_source).margin(1e-9));
    }
}

TEST_CASE("verify_equivalence: detects a perturbed representation point") {
    DesignContext ctx(kGauss53, PriorDensity::uniform());
    const ScalarQuantizer source = lloyd_max(6, ctx, DesignCriterion::MeanBre).quantizer;
    const Disassembly d = disassemble(source, 5);

    auto qs = d.bank.quantizers();
    auto reps = qs[2].reps();
    reps[1] += 1e-3;
    qs[2] = ScalarQuantizer(qs[2].boundaries(), reps);
    const QuantizerBank bent(std::move(qs), d.bank.weights());

    const EquivalenceReport rep = verify_equivalence(bent, source, 10000);
    CHECK_FALSE(rep.pass);
    // the deviation shows up scaled by that agent's weight
    CHECK(rep.max_deviation == Approx(0.2 * 1e-3).epsilon(1e-6));

    // the untouched bank matches itself to weight-summation rounding
    const EquivalenceReport self =
        verify_equivalence(QuantizerBank::identical(source, 5), source, 1000);
    CHECK(self.max_deviation <= 1e-15);
}

TEST_CASE("disassemble: non-uniform weights still telescope") {
    DesignContext ctx(kGauss53, PriorDensity::uniform());
    const ScalarQuantizer source = lloyd_max(11, ctx, DesignCriterion::MeanBre).quantizer;
    std::vector<double> w{0.3, 0.25, 0.2, 0.15, 0.1};
    const Disassembly d = disassemble(source, 5, w);
    const EquivalenceReport rep = verify_equivalence(d.bank, source, 10000);
    CHECK(rep.pass);
    if (!d.out_of_range_reps.empty()) {
        // unclamped by design; equivalence must hold regardless
        CHECK(rep.max_deviation <= 1e-10);
    }
}
