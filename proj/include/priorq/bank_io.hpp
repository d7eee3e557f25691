#pragma once

// Plain-text persistence for designed quantizer banks. The format is
// line-oriented and human-diffable; numbers are written with 17 significant
// digits so a read-back reproduces the design bit for bit.

#include "priorq/detection.hpp"
#include "priorq/diverse.hpp"
#include "priorq/quantizer.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace priorq {

struct BankFile {
    LikelihoodModel model;
    FusionRule fusion;
    CostPair costs;
    std::string criterion; // "mbre" or "minimax"
    ScalarQuantizer source;
    QuantizerBank bank;
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string join17(const std::vector<double>& vals) {
    std::string out;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) out += ' ';
        out += fmt17(vals[i]);
    }
    return out;
}

struct LineReader {
    std::istream& in;
    std::string path;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw validation_error(path + ":" + std::to_string(line_no) + ": " + msg);
    }

    // next nonempty, non-comment line split into tokens
    std::vector<std::string> next(const std::string& expected_key) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            std::vector<std::string> toks;
            std::string tok;
            while (ss >> tok) toks.push_back(tok);
            if (toks.empty()) continue;
            if (toks[0] != expected_key) {
                fail("expected '" + expected_key + "', found '" + toks[0] + "'");
            }
            return toks;
        }
        ++line_no;
        fail("unexpected end of file, expected '" + expected_key + "'");
    }

    double num(const std::string& tok) const {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            fail("not a number: '" + tok + "'");
        }
        if (used != tok.size()) fail("not a number: '" + tok + "'");
        return v;
    }

    std::vector<double> nums(const std::vector<std::string>& toks, std::size_t from) const {
        std::vector<double> out;
        for (std::size_t i = from; i < toks.size(); ++i) out.push_back(num(toks[i]));
        return out;
    }
};

} // namespace detail

inline void write_bank_file(const std::string& path, const BankFile& bf) {
    std::ofstream out(path);
    if (!out) {
        throw validation_error("cannot open '" + path + "' for writing");
    }
    out << "priorq-bank v1\n";
    if (bf.model.kind == ModelKind::Gaussian) {
        out << "model gaussian " << detail::fmt17(bf.model.s0) << ' '
            << detail::fmt17(bf.model.s1) << ' ' << detail::fmt17(bf.model.sigma) << '\n';
    } else {
        out << "model exponential " << detail::fmt17(bf.model.s0) << ' '
            << detail::fmt17(bf.model.s1) << '\n';
    }
    out << "fusion " << bf.fusion.n << ' ' << bf.fusion.l << '\n';
    out << "costs " << detail::fmt17(bf.costs.c10) << ' ' << detail::fmt17(bf.costs.c01) << '\n';
    out << "criterion " << bf.criterion << '\n';
    out << "source-boundaries " << detail::join17(bf.source.boundaries()) << '\n';
    out << "source-reps " << detail::join17(bf.source.reps()) << '\n';
    out << "agents " << bf.bank.agents() << '\n';
    out << "weights " << detail::join17(bf.bank.weights()) << '\n';
    for (int i = 0; i < bf.bank.agents(); ++i) {
        const auto& q = bf.bank.quantizers()[i];
        out << "agent " << (i + 1) << " boundaries " << detail::join17(q.boundaries()) << '\n';
        out << "agent " << (i + 1) << " reps " << detail::join17(q.reps()) << '\n';
    }
    if (!out) {
        throw validation_error("write failed for '" + path + "'");
    }
}

inline BankFile read_bank_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw validation_error("cannot open '" + path + "'");
    }
    detail::LineReader r{in, path};

    {
        auto t = r.next("priorq-bank");
        if (t.size() != 2 || t[1] != "v1") r.fail("unsupported bank file version");
    }
    LikelihoodModel model;
    {
        auto t = r.next("model");
        if (t.size() < 2) r.fail("model line needs a kind");
        if (t[1] == "gaussian") {
            if (t.size() != 5) r.fail("gaussian model needs s0 s1 sigma");
            model = LikelihoodModel::gaussian(r.num(t[2]), r.num(t[3]), r.num(t[4]));
        } else if (t[1] == "exponential") {
            if (t.size() != 4) r.fail("exponential model needs s0 s1");
            model = LikelihoodModel::exponential(r.num(t[2]), r.num(t[3]));
        } else {
            r.fail("unknown model kind '" + t[1] + "'");
        }
    }
    FusionRule fusion;
    {
        auto t = r.next("fusion");
        if (t.size() != 3) r.fail("fusion line needs n and l");
        fusion = FusionRule{static_cast<int>(r.num(t[1])), static_cast<int>(r.num(t[2]))};
    }
    CostPair costs;
    {
        auto t = r.next("costs");
        if (t.size() != 3) r.fail("costs line needs c10 and c01");
        costs = CostPair{r.num(t[1]), r.num(t[2])};
    }
    std::string criterion;
    {
        auto t = r.next("criterion");
        if (t.size() != 2 || (t[1] != "mbre" && t[1] != "minimax")) {
            r.fail("criterion must be 'mbre' or 'minimax'");
        }
        criterion = t[1];
    }
    std::vector<double> sb, sx;
    {
        auto t = r.next("source-boundaries");
        sb = r.nums(t, 1);
        t = r.next("source-reps");
        sx = r.nums(t, 1);
    }
    int agents = 0;
    {
        auto t = r.next("agents");
        if (t.size() != 2) r.fail("agents line needs a count");
        agents = static_cast<int>(r.num(t[1]));
        if (agents < 1) r.fail("agent count must be positive");
    }
    std::vector<double> weights;
    {
        auto t = r.next("weights");
        weights = r.nums(t, 1);
        if (static_cast<int>(weights.size()) != agents) {
            r.fail("expected " + std::to_string(agents) + " weights");
        }
    }
    std::vector<ScalarQuantizer> qs;
    qs.reserve(agents);
    for (int i = 1; i <= agents; ++i) {
        auto tb = r.next("agent");
        if (tb.size() < 3 || tb[1] != std::to_string(i) || tb[2] != "boundaries") {
            r.fail("expected 'agent " + std::to_string(i) + " boundaries'");
        }
        auto ta = r.next("agent");
        if (ta.size() < 3 || ta[1] != std::to_string(i) || ta[2] != "reps") {
            r.fail("expected 'agent " + std::to_string(i) + " reps'");
        }
        try {
            qs.emplace_back(r.nums(tb, 3), r.nums(ta, 3));
        } catch (const validation_error& e) {
            r.fail(std::string("invalid agent quantizer: ") + e.what());
        }
    }

    try {
        validate(model);
        validate(fusion);
        validate(costs);
        return BankFile{model, fusion, costs, criterion,
                        ScalarQuantizer(std::move(sb), std::move(sx)),
                        QuantizerBank(std::move(qs), std::move(weights))};
    } catch (const validation_error& e) {
        throw validation_error(path + ": " + e.what());
    }
}

} // namespace priorq
