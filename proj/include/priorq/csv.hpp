#pragma once

// Minimal CSV emission: a header row plus numeric rows serialized with 12
// significant digits, so identical inputs produce byte-identical files.

#include "priorq/errors.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace priorq {

inline std::string format_sig12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : out_(path), path_(path), n_columns_(columns.size()) {
        if (!out_) {
            throw validation_error("cannot open '" + path + "' for writing");
        }
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != n_columns_) {
            throw validation_error("CSV row width mismatch in '" + path_ + "'");
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<double>& cells) {
        std::vector<std::string> s;
        s.reserve(cells.size());
        for (double v : cells) s.push_back(format_sig12(v));
        row(s);
    }

    void close() {
        out_.close();
        if (!out_) {
            throw validation_error("write failed for '" + path_ + "'");
        }
    }

private:
    std::ofstream out_;
    std::string path_;
    std::size_t n_columns_;
};

} // namespace priorq
