// priorq: design, evaluate, sweep, and simulate prior-probability
// quantizers for fused detection teams.
//
// Exit codes: 0 success, 1 configuration/validation error, 2 numerical
// non-convergence.

#include "priorq/bank_io.hpp"
#include "priorq/csv.hpp"
#include "priorq/design.hpp"
#include "priorq/detection.hpp"
#include "priorq/diverse.hpp"
#include "priorq/montecarlo.hpp"
#include "priorq/run_config.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace priorq;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;      // overrides config when nonempty
    std::optional<std::uint64_t> seed;
    std::optional<int> grid;
};

RunConfig load_with_overrides(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed) cfg.seed = *args.seed;
    if (args.grid) cfg.grid = *args.grid;
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

const char* criterion_name(DesignCriterion c) {
    return c == DesignCriterion::MeanBre ? "mbre" : "minimax";
}

// threshold column value for a rule; degenerate rules print as +/-inf
double rule_threshold(const DecisionRule& rule) {
    switch (rule.kind) {
        case DecisionRule::Kind::AlwaysH1: return -std::numeric_limits<double>::infinity();
        case DecisionRule::Kind::AlwaysH0: return std::numeric_limits<double>::infinity();
        default: return rule.threshold;
    }
}

int cmd_design(const CommonArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    DesignContext ctx(cfg.problem, cfg.prior);
    LloydMaxOptions opt;
    opt.seed = cfg.seed;

    CsvWriter summary(out_path(cfg, "design_summary.csv"),
                      {"K", "source_levels", "mbre_diverse", "mbre_identical_K",
                       "max_bre_diverse"});
    bool all_converged = true;
    for (int K = cfg.k_min; K <= cfg.k_max; ++K) {
        const int source_levels = cfg.problem.fusion.n * (K - 1) + 1;
        DesignResult source = lloyd_max(source_levels, ctx, cfg.criterion, opt);
        DesignResult ident = lloyd_max(K, ctx, cfg.criterion, opt);
        all_converged = all_converged && source.converged && ident.converged;
        for (const auto& note : source.diagnostics) {
            std::cerr << "design K=" << K << " (source): " << note << '\n';
        }
        for (const auto& note : ident.diagnostics) {
            std::cerr << "design K=" << K << " (identical): " << note << '\n';
        }

        Disassembly diverse = disassemble(source.quantizer, cfg.problem.fusion.n, cfg.weights);
        for (const auto& [agent, rep] : diverse.out_of_range_reps) {
            std::cerr << "design K=" << K << ": agent " << (agent + 1)
                      << " has representation point " << rep << " outside [0,1]\n";
        }

        BankFile bf{cfg.problem.model, cfg.problem.fusion, cfg.problem.costs,
                    criterion_name(cfg.criterion), source.quantizer, diverse.bank};
        const std::string bank_path = out_path(cfg, "quantizer_K" + std::to_string(K) + ".txt");
        write_bank_file(bank_path, bf);

        const double mbre_div = mbre(diverse.bank, ctx);
        const double mbre_idn = mbre(ident.quantizer, ctx);
        const double maxbre_div = max_bre(diverse.bank, ctx.risk());
        summary.row({static_cast<double>(K), static_cast<double>(source_levels), mbre_div,
                     mbre_idn, maxbre_div});
        std::cout << "K=" << K << " source_levels=" << source_levels
                  << " mbre_diverse=" << format_sig12(mbre_div)
                  << " mbre_identical_K=" << format_sig12(mbre_idn)
                  << " max_bre_diverse=" << format_sig12(maxbre_div) << " -> " << bank_path
                  << '\n';

        if (cfg.criterion == DesignCriterion::MinimaxBre) {
            // equal-boundary report: BRE of the source design at every cell edge
            const auto& b = source.quantizer.boundaries();
            const auto& a = source.quantizer.reps();
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
            for (int k = 0; k < source.quantizer.levels(); ++k) {
                for (double edge : {ctx.risk().bre(b[k], a[k]), ctx.risk().bre(b[k + 1], a[k])}) {
                    lo = std::min(lo, edge);
                    hi = std::max(hi, edge);
                }
            }
            std::cout << "K=" << K << " boundary-BRE spread=" << format_sig12(hi - lo)
                      << " (min=" << format_sig12(lo) << ", max=" << format_sig12(hi) << ")\n";
        }
    }
    summary.close();
    if (!all_converged) {
        std::cerr << "design: at least one run did not converge\n";
        return 2;
    }
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& bank_path) {
    const RunConfig cfg = load_with_overrides(args);
    const BankFile bf = read_bank_file(bank_path);
    RiskModel rm(Problem{bf.model, bf.fusion, bf.costs});

    CsvWriter csv(out_path(cfg, "evaluate.csv"),
                  {"p0", "effective_prior", "threshold", "true_risk", "mismatched_risk",
                   "bre"});
    for (int i = 0; i < cfg.grid; ++i) {
        const double p0 = static_cast<double>(i) / (cfg.grid - 1);
        const double eff = effective_prior(bf.bank, p0);
        const double mismatched = rm.mismatched_risk(p0, eff);
        const double true_risk = rm.optimal_risk(p0);
        csv.row({p0, eff, rule_threshold(rm.rule_at(eff)), true_risk, mismatched,
                 mismatched - true_risk});
    }
    csv.close();
    std::cout << "evaluate: wrote " << out_path(cfg, "evaluate.csv") << " (" << cfg.grid
              << " rows)\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    LloydMaxOptions opt;
    opt.seed = cfg.seed;

    // MBRE vs K for the three strategies; cells run concurrently and are
    // written in K order.
    struct SweepCell {
        double identical, diverse, oblivious;
    };
    std::vector<std::future<SweepCell>> cells;
    for (int K = cfg.k_min; K <= cfg.k_max; ++K) {
        cells.push_back(std::async(std::launch::async, [&cfg, &opt, K]() {
            DesignContext team_ctx(cfg.problem, cfg.prior);
            Problem solo = cfg.problem;
            solo.fusion = FusionRule{1, 1};
            DesignContext solo_ctx(solo, cfg.prior);

            SweepCell cell{};
            cell.identical = mbre(lloyd_max(K, team_ctx, cfg.criterion, opt).quantizer, team_ctx);
            const int source_levels = cfg.problem.fusion.n * (K - 1) + 1;
            const ScalarQuantizer source =
                lloyd_max(source_levels, team_ctx, cfg.criterion, opt).quantizer;
            cell.diverse = mbre(disassemble(source, cfg.problem.fusion.n, cfg.weights).bank,
                                team_ctx);
            cell.oblivious =
                mbre(lloyd_max(K, solo_ctx, cfg.criterion, opt).quantizer, team_ctx);
            return cell;
        }));
    }
    CsvWriter mbre_csv(out_path(cfg, "mbre_vs_k.csv"),
                       {"K", "mbre_identical", "mbre_diverse", "mbre_oblivious"});
    for (int K = cfg.k_min; K <= cfg.k_max; ++K) {
        const SweepCell cell = cells[K - cfg.k_min].get();
        mbre_csv.row({static_cast<double>(K), cell.identical, cell.diverse, cell.oblivious});
    }
    mbre_csv.close();

    // Optimal threshold vs perceived prior for odd team sizes up to n,
    // under both standard rules.
    CsvWriter thr_csv(out_path(cfg, "thresholds_vs_p0.csv"), {"rule", "n", "p0", "threshold"});
    for (const std::string rule_name : {"majority", "or"}) {
        for (int n = 1; n <= cfg.problem.fusion.n; n += 2) {
            const FusionRule fusion =
                rule_name == "majority" ? FusionRule::majority(n) : FusionRule::or_rule(n);
            for (int i = 1; i + 1 < cfg.grid; ++i) {
                const double p0 = static_cast<double>(i) / (cfg.grid - 1);
                const DecisionRule rule =
                    optimal_rule(cfg.problem.model, fusion, p0, cfg.problem.costs);
                thr_csv.row({rule_name, std::to_string(n), format_sig12(p0),
                             format_sig12(rule_threshold(rule))});
            }
        }
    }
    thr_csv.close();

    // Mean unquantized Bayes risk as a function of the fusion threshold.
    CsvWriter risk_csv(out_path(cfg, "risk_vs_l.csv"), {"l", "mean_bayes_risk"});
    for (int l = 1; l <= cfg.problem.fusion.n; ++l) {
        Problem p = cfg.problem;
        p.fusion.l = l;
        DesignContext ctx(p, cfg.prior);
        risk_csv.row({static_cast<double>(l), ctx.mean_optimal_risk()});
    }
    risk_csv.close();

    std::cout << "sweep: wrote " << out_path(cfg, "mbre_vs_k.csv") << ", "
              << out_path(cfg, "thresholds_vs_p0.csv") << ", "
              << out_path(cfg, "risk_vs_l.csv") << '\n';
    return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& bank_path) {
    const RunConfig cfg = load_with_overrides(args);
    const BankFile bf = read_bank_file(bank_path);
    const Problem prob{bf.model, bf.fusion, bf.costs};
    RiskModel rm(prob);

    SimConfig sim;
    sim.trials = cfg.trials;
    sim.seed = cfg.seed;

    // pass/fail uses the analytic-null standard error; with very few
    // trials the binomial form is meaningless, so no claim is made
    const bool judged = cfg.trials >= 100;

    CsvWriter csv(out_path(cfg, "simulate.csv"),
                  {"p0", "analytic_p1", "empirical_p1", "se_p1", "analytic_p2", "empirical_p2",
                   "se_p2", "analytic_risk", "empirical_risk", "se_risk", "pass"});
    int failures = 0;
    for (int i = 1; i <= 9; ++i) {
        const double p0 = i / 10.0;
        const double eff = effective_prior(bf.bank, p0);
        const ErrorPair analytic = rm.errors_at(eff);
        const double analytic_risk = rm.mismatched_risk(p0, eff);
        SimConfig cell_cfg = sim;
        cell_cfg.seed = sim.seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL;
        const SimResult r = simulate_team(prob, bf.bank, p0, cell_cfg);

        std::string verdict = "na";
        if (judged) {
            auto within = [&](double emp, double ana, double p, long long m) {
                const double se = std::sqrt(std::max(0.0, p * (1.0 - p)) / std::max<long long>(m, 1));
                return std::abs(emp - ana) <= 4.0 * se + 1e-15;
            };
            const double c10 = prob.costs.c10, c01 = prob.costs.c01;
            const double risk_var = p0 * c10 * c10 * analytic.p1 + (1 - p0) * c01 * c01 * analytic.p2 -
                                    analytic_risk * analytic_risk;
            const double se_risk = std::sqrt(std::max(0.0, risk_var) / cfg.trials);
            const bool ok = within(r.empirical_p1, analytic.p1, analytic.p1, r.h0_trials) &&
                            within(r.empirical_p2, analytic.p2, analytic.p2, r.h1_trials) &&
                            std::abs(r.empirical_risk - analytic_risk) <= 4.0 * se_risk + 1e-15;
            verdict = ok ? "pass" : "fail";
            if (!ok) ++failures;
        }
        csv.row({format_sig12(p0), format_sig12(analytic.p1), format_sig12(r.empirical_p1),
                 format_sig12(r.se_p1), format_sig12(analytic.p2), format_sig12(r.empirical_p2),
                 format_sig12(r.se_p2), format_sig12(analytic_risk),
                 format_sig12(r.empirical_risk), format_sig12(r.se_risk), verdict});
    }
    csv.close();
    if (judged) {
        std::cout << "simulate: " << (9 - failures) << "/9 cells within 4 standard errors\n";
    } else {
        std::cout << "simulate: trials too few for pass/fail claims\n";
    }
    std::cout << "simulate: wrote " << out_path(cfg, "simulate.csv") << '\n';
    return failures == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"prior-probability quantizer design for fused detection teams"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string bank_path;

    auto add_common = [&args](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "JSON run configuration")->required();
        sub->add_option("--out", args.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", args.seed, "random seed (overrides config)");
        sub->add_option("--grid", args.grid, "evaluation grid points (overrides config)");
    };

    CLI::App* design = app.add_subcommand("design", "design quantizer banks over the K range");
    add_common(design);
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "tabulate risks of a designed bank over a p0 grid");
    evaluate->add_option("bank", bank_path, "quantizer bank file")->required();
    add_common(evaluate);
    CLI::App* sweep = app.add_subcommand("sweep", "MBRE/threshold/risk sweep tables");
    add_common(sweep);
    CLI::App* simulate =
        app.add_subcommand("simulate", "Monte Carlo validation of a designed bank");
    simulate->add_option("bank", bank_path, "quantizer bank file")->required();
    add_common(simulate);

    CLI11_PARSE(app, argc, argv);

    try {
        if (design->parsed()) return cmd_design(args);
        if (evaluate->parsed()) return cmd_evaluate(args, bank_path);
        if (sweep->parsed()) return cmd_sweep(args);
        if (simulate->parsed()) return cmd_simulate(args, bank_path);
    } catch (const priorq::validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const priorq::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
