// Bank-file round trips, config validation, and CSV determinism.

#include "priorq/bank_io.hpp"
#include "priorq/csv.hpp"
#include "priorq/run_config.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace priorq;
using Catch::Approx;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

BankFile sample_bank() {
    DesignContext ctx({LikelihoodModel::gaussian(0.0, 1.0, 1.0), {5, 3}, {1.0, 1.0}},
                      PriorDensity::uniform());
    const ScalarQuantizer source = lloyd_max(6, ctx, DesignCriterion::MeanBre).quantizer;
    return BankFile{ctx.problem().model, ctx.problem().fusion, ctx.problem().costs, "mbre",
                    source, disassemble(source, 5).bank};
}

} // namespace

TEST_CASE("bank file: write/read round trip is exact") {
    const BankFile bf = sample_bank();
    const auto path = temp_file("priorq_roundtrip.txt");
    write_bank_file(path.string(), bf);
    const BankFile back = read_bank_file(path.string());

    CHECK(back.model.kind == bf.model.kind);
    CHECK(back.fusion.n == bf.fusion.n);
    CHECK(back.fusion.l == bf.fusion.l);
    CHECK(back.criterion == bf.criterion);
    REQUIRE(back.source.levels() == bf.source.levels());
    for (int k = 0; k < bf.source.levels(); ++k) {
        CHECK(back.source.reps()[k] == bf.source.reps()[k]);  // bitwise
        CHECK(back.source.boundaries()[k] == bf.source.boundaries()[k]);
    }
    REQUIRE(back.bank.agents() == bf.bank.agents());
    for (int i = 0; i < bf.bank.agents(); ++i) {
        CHECK(back.bank.quantizers()[i].boundaries() == bf.bank.quantizers()[i].boundaries());
        CHECK(back.bank.quantizers()[i].reps() == bf.bank.quantizers()[i].reps());
        CHECK(back.bank.weights()[i] == bf.bank.weights()[i]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("bank file: parse errors carry the offending line") {
    const auto path = temp_file("priorq_badbank.txt");
    write_text(path, "priorq-bank v1\nmodel gaussian 0 1 1\nfusion five 3\n");
    try {
        read_bank_file(path.string());
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        const std::string what = e.what();
        CHECK(what.find(":3:") != std::string::npos);
        CHECK(what.find("five") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("bank file: truncated files are rejected with the expected key") {
    const auto path = temp_file("priorq_truncated.txt");
    write_text(path, "priorq-bank v1\nmodel gaussian 0 1 1\n");
    try {
        read_bank_file(path.string());
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find("fusion") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("run config: full document parses with overridable defaults") {
    const auto path = temp_file("priorq_cfg.json");
    write_text(path, R"({
        "model": {"kind": "gaussian", "s0": 0.0, "s1": 1.0, "sigma": 1.0},
        "fusion": {"n": 5, "l": 3},
        "costs": {"c10": 1.0, "c01": 1.0},
        "prior": {"kind": "uniform"},
        "weights": [0.2, 0.2, 0.2, 0.2, 0.2],
        "K_range": [1, 4],
        "criterion": "mbre",
        "trials": 100000,
        "seed": 7,
        "grid": 501,
        "output": "out"
    })");
    const RunConfig cfg = load_run_config(path.string());
    CHECK(cfg.problem.fusion.n == 5);
    CHECK(cfg.k_min == 1);
    CHECK(cfg.k_max == 4);
    CHECK(cfg.trials == 100000);
    CHECK(cfg.grid == 501);
    CHECK(cfg.weights.size() == 5);
    std::filesystem::remove(path);
}

TEST_CASE("run config: minimal document uses defaults") {
    const auto path = temp_file("priorq_cfg_min.json");
    write_text(path, R"({"model": {"kind": "exponential", "s0": 2, "s1": 1},
                         "fusion": {"n": 5, "l": 1}})");
    const RunConfig cfg = load_run_config(path.string());
    CHECK(cfg.problem.model.kind == ModelKind::Exponential);
    CHECK(cfg.problem.costs.c10 == 1.0);
    CHECK(cfg.k_min == 1);
    CHECK(cfg.grid == 1001);
    CHECK(cfg.prior.description == "uniform");
    std::filesystem::remove(path);
}

TEST_CASE("run config: unknown keys are rejected with their path") {
    const auto path = temp_file("priorq_cfg_unknown.json");
    write_text(path, R"({"model": {"kind": "gaussian", "s0": 0, "s1": 1, "sigma": 1},
                         "fusion": {"n": 3, "l": 2}, "trails": 5})");
    try {
        load_run_config(path.string());
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find("/trails") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("run config: domain invariants are re-checked on load") {
    const auto path = temp_file("priorq_cfg_bad.json");
    write_text(path, R"({"model": {"kind": "gaussian", "s0": 0, "s1": 1, "sigma": -2},
                         "fusion": {"n": 3, "l": 2}})");
    CHECK_THROWS_AS(load_run_config(path.string()), validation_error);
    write_text(path, R"({"model": {"kind": "gaussian", "s0": 0, "s1": 1, "sigma": 1},
                         "fusion": {"n": 3, "l": 5}})");
    CHECK_THROWS_AS(load_run_config(path.string()), validation_error);
    std::filesystem::remove(path);
}

TEST_CASE("run config: syntax errors report the line") {
    const auto path = temp_file("priorq_cfg_syntax.json");
    write_text(path, "{\n  \"model\": {\n  BROKEN\n}\n");
    try {
        load_run_config(path.string());
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("csv: 12-significant-digit serialization is deterministic") {
    CHECK(format_sig12(1.0 / 3.0) == "0.333333333333");
    CHECK(format_sig12(0.0) == "0");
    CHECK(format_sig12(-1.5e-9) == "-1.5e-09");

    const auto path = temp_file("priorq_csv.csv");
    for (int pass = 0; pass < 2; ++pass) {
        CsvWriter csv(path.string(), {"a", "b"});
        csv.row({1.0 / 7.0, 2.0 / 7.0});
        csv.row({3.0 / 7.0, 4.0 / 7.0});
        csv.close();
        static std::string first;
        if (pass == 0) {
            first = read_text(path);
        } else {
            CHECK(read_text(path) == first);
        }
    }
    CHECK(read_text(path).substr(0, 4) == "a,b\n");
    std::filesystem::remove(path);
}
