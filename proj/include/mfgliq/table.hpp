// SPDX-License-Identifier: MIT
//
// Numeric tables written as CSV or JSON with 17 significant digits.
#pragma once

#include "mfgliq/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace mfgliq {

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) {
        if (row.size() != columns.size())
            throw InvalidArgument("table " + name + ": row has " + std::to_string(row.size()) + " values for " +
                                  std::to_string(columns.size()) + " columns");
        rows.push_back(std::move(row));
    }

    [[nodiscard]] std::string csv() const {
        std::string out;
        for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
        out += '\n';
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + format_number(r[c]);
            out += '\n';
        }
        return out;
    }

    // {"name": ..., "columns": [...], "rows": [[...], ...]}; non-finite values as strings.
    [[nodiscard]] std::string json() const {
        std::string out = "{\"name\":\"" + name + "\",\"columns\":[";
        for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? ",\"" : "\"") + columns[c] + "\"";
        out += "],\"rows\":[";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out += i ? ",[" : "[";
            for (std::size_t c = 0; c < rows[i].size(); ++c) {
                const double v = rows[i][c];
                const std::string s = format_number(v);
                out += c ? "," : "";
                out += std::isfinite(v) ? s : "\"" + s + "\"";
            }
            out += "]";
        }
        out += "]}\n";
        return out;
    }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace mfgliq
