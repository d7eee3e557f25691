#pragma once

// JSON run configuration for the command-line tool. Validation is strict:
// unknown keys anywhere in the document are errors, every referenced
// domain invariant is re-checked on load, and messages carry the JSON
// path (or line/column for syntax errors).

#include "priorq/design.hpp"
#include "priorq/detection.hpp"
#include "priorq/quantizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace priorq {

struct RunConfig {
    Problem problem;
    PriorDensity prior;
    std::vector<double> weights; // empty means uniform 1/n
    int k_min = 1;
    int k_max = 1;
    DesignCriterion criterion = DesignCriterion::MeanBre;
    long long trials = 1000000;
    std::uint64_t seed = 1;
    int grid = 1001;
    std::string out_dir = "out";
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void cfg_fail(const std::string& path, const std::string& msg) {
    throw validation_error("config error at " + path + ": " + msg);
}

inline void reject_unknown_keys(const json& obj, const std::string& path,
                                const std::set<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            cfg_fail(path + "/" + item.key(), "unknown key");
        }
    }
}

inline double req_number(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) cfg_fail(path + "/" + key, "missing required key");
    if (!obj[key].is_number()) cfg_fail(path + "/" + key, "expected a number");
    return obj[key].get<double>();
}

inline double opt_number(const json& obj, const std::string& path, const std::string& key,
                         double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) cfg_fail(path + "/" + key, "expected a number");
    return obj[key].get<double>();
}

inline std::string req_string(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) cfg_fail(path + "/" + key, "missing required key");
    if (!obj[key].is_string()) cfg_fail(path + "/" + key, "expected a string");
    return obj[key].get<std::string>();
}

inline LikelihoodModel parse_model(const json& j) {
    if (!j.is_object()) cfg_fail("/model", "expected an object");
    reject_unknown_keys(j, "/model", {"kind", "s0", "s1", "sigma"});
    const std::string kind = req_string(j, "/model", "kind");
    if (kind == "gaussian") {
        return LikelihoodModel::gaussian(req_number(j, "/model", "s0"),
                                         req_number(j, "/model", "s1"),
                                         opt_number(j, "/model", "sigma", 1.0));
    }
    if (kind == "exponential") {
        if (j.contains("sigma")) cfg_fail("/model/sigma", "not used by the exponential model");
        return LikelihoodModel::exponential(req_number(j, "/model", "s0"),
                                            req_number(j, "/model", "s1"));
    }
    cfg_fail("/model/kind", "must be 'gaussian' or 'exponential'");
}

inline PriorDensity parse_prior(const json& j) {
    if (!j.is_object()) cfg_fail("/prior", "expected an object");
    reject_unknown_keys(j, "/prior", {"kind", "alpha", "beta", "points"});
    const std::string kind = req_string(j, "/prior", "kind");
    if (kind == "uniform") {
        return PriorDensity::uniform();
    }
    if (kind == "beta") {
        return PriorDensity::beta(req_number(j, "/prior", "alpha"),
                                  req_number(j, "/prior", "beta"));
    }
    if (kind == "tabulated") {
        if (!j.contains("points") || !j["points"].is_array()) {
            cfg_fail("/prior/points", "tabulated prior needs an array of [x, value] pairs");
        }
        std::vector<std::pair<double, double>> pts;
        for (const auto& e : j["points"]) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                cfg_fail("/prior/points", "each entry must be a [x, value] number pair");
            }
            pts.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
        return PriorDensity::tabulated(std::move(pts));
    }
    cfg_fail("/prior/kind", "must be 'uniform', 'beta', or 'tabulated'");
}

} // namespace detail

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw validation_error("cannot open config '" + path + "'");
    }
    detail::json j;
    try {
        j = detail::json::parse(in, nullptr, true, true); // throws, allows comments
    } catch (const detail::json::parse_error& e) {
        // recover the line from the byte offset for a readable message
        std::ifstream again(path);
        std::string text((std::istreambuf_iterator<char>(again)),
                         std::istreambuf_iterator<char>());
        int line = 1;
        for (std::size_t i = 0; i < text.size() && i < e.byte; ++i) {
            if (text[i] == '\n') ++line;
        }
        throw validation_error(path + ":" + std::to_string(line) + ": " + e.what());
    }
    if (!j.is_object()) {
        throw validation_error("config error at /: expected a JSON object");
    }
    detail::reject_unknown_keys(j, "", {"model", "fusion", "costs", "prior", "weights", "K",
                                        "K_range", "criterion", "trials", "seed", "grid",
                                        "output"});

    RunConfig cfg;
    if (!j.contains("model")) detail::cfg_fail("/model", "missing required key");
    cfg.problem.model = detail::parse_model(j["model"]);

    if (!j.contains("fusion") || !j["fusion"].is_object()) {
        detail::cfg_fail("/fusion", "missing required object");
    }
    detail::reject_unknown_keys(j["fusion"], "/fusion", {"n", "l"});
    cfg.problem.fusion = FusionRule{
        static_cast<int>(detail::req_number(j["fusion"], "/fusion", "n")),
        static_cast<int>(detail::req_number(j["fusion"], "/fusion", "l"))};

    if (j.contains("costs")) {
        if (!j["costs"].is_object()) detail::cfg_fail("/costs", "expected an object");
        detail::reject_unknown_keys(j["costs"], "/costs", {"c10", "c01"});
        cfg.problem.costs = CostPair{detail::opt_number(j["costs"], "/costs", "c10", 1.0),
                                     detail::opt_number(j["costs"], "/costs", "c01", 1.0)};
    }

    cfg.prior = j.contains("prior") ? detail::parse_prior(j["prior"]) : PriorDensity::uniform();

    if (j.contains("weights")) {
        if (!j["weights"].is_array()) detail::cfg_fail("/weights", "expected an array");
        for (const auto& w : j["weights"]) {
            if (!w.is_number()) detail::cfg_fail("/weights", "entries must be numbers");
            cfg.weights.push_back(w.get<double>());
        }
        if (static_cast<int>(cfg.weights.size()) != cfg.problem.fusion.n) {
            detail::cfg_fail("/weights", "need exactly n entries");
        }
    }

    if (j.contains("K") && j.contains("K_range")) {
        detail::cfg_fail("/K", "give either K or K_range, not both");
    }
    if (j.contains("K")) {
        if (!j["K"].is_number_integer()) detail::cfg_fail("/K", "expected an integer");
        cfg.k_min = cfg.k_max = j["K"].get<int>();
    } else if (j.contains("K_range")) {
        const auto& kr = j["K_range"];
        if (!kr.is_array() || kr.size() != 2 || !kr[0].is_number_integer() ||
            !kr[1].is_number_integer()) {
            detail::cfg_fail("/K_range", "expected [k_min, k_max] integers");
        }
        cfg.k_min = kr[0].get<int>();
        cfg.k_max = kr[1].get<int>();
    }
    if (cfg.k_min < 1 || cfg.k_max < cfg.k_min) {
        detail::cfg_fail("/K", "levels must satisfy 1 <= k_min <= k_max");
    }

    if (j.contains("criterion")) {
        const std::string c = detail::req_string(j, "", "criterion");
        if (c == "mbre") {
            cfg.criterion = DesignCriterion::MeanBre;
        } else if (c == "minimax") {
            cfg.criterion = DesignCriterion::MinimaxBre;
        } else {
            detail::cfg_fail("/criterion", "must be 'mbre' or 'minimax'");
        }
    }

    if (j.contains("trials")) {
        if (!j["trials"].is_number_integer()) detail::cfg_fail("/trials", "expected an integer");
        cfg.trials = j["trials"].get<long long>();
        if (cfg.trials < 1) detail::cfg_fail("/trials", "must be >= 1");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) detail::cfg_fail("/seed", "expected an integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("grid")) {
        if (!j["grid"].is_number_integer()) detail::cfg_fail("/grid", "expected an integer");
        cfg.grid = j["grid"].get<int>();
        if (cfg.grid < 2) detail::cfg_fail("/grid", "must be >= 2");
    }
    if (j.contains("output")) {
        cfg.out_dir = detail::req_string(j, "", "output");
    }

    // re-validate every domain invariant with config-level messages
    try {
        validate(cfg.problem);
        validate(cfg.prior);
        if (!cfg.weights.empty()) {
            QuantizerBank probe(std::vector<ScalarQuantizer>(
                                    cfg.weights.size(), ScalarQuantizer({0.0, 1.0}, {0.5})),
                                cfg.weights);
        }
    } catch (const validation_error& e) {
        throw validation_error("config '" + path + "': " + e.what());
    }
    return cfg;
}

} // namespace priorq
