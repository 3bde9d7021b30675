// Trace CSV: header t,mass_0..mass_{m-1},deviation,bound,norm with doubles in
// shortest round-trip decimal form. Rows without an attached bound leave the
// bound field empty and tag the norm "none".
#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qlump/bounds.hpp"
#include "qlump/error.hpp"
#include "qlump/simulate.hpp"

namespace qlump {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
    if (rows.empty()) throw DomainError("cannot write an empty trace");
    const std::size_t m = rows.front().mass.size();
    os << "t";
    for (std::size_t b = 0; b < m; ++b) os << ",mass_" << b;
    os << ",deviation,bound,norm\n";
    for (const TraceRow& row : rows) {
        os << row.t;
        for (double v : row.mass) os << ',' << format_double(v);
        os << ',' << format_double(row.deviation) << ',';
        if (!std::isnan(row.bound)) os << format_double(row.bound);
        os << ',' << norm_name(row.norm) << '\n';
    }
}

inline std::vector<TraceRow> read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("trace CSV is empty");
    std::size_t m = 0;
    {
        std::stringstream header(line);
        std::string field;
        while (std::getline(header, field, ','))
            if (field.rfind("mass_", 0) == 0) ++m;
    }
    if (m == 0) throw ParseError("trace CSV header carries no mass columns");

    std::vector<TraceRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (fields.size() != m + 4)
            throw ParseError("trace CSV row has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(m + 4));
        TraceRow row;
        row.t = std::stol(fields[0]);
        row.mass.resize(m);
        for (std::size_t b = 0; b < m; ++b) row.mass[b] = std::stod(fields[1 + b]);
        row.deviation = std::stod(fields[m + 1]);
        row.bound = fields[m + 2].empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : std::stod(fields[m + 2]);
        const std::string& norm = fields[m + 3];
        row.norm = norm == "l1_sum" ? NormTag::l1_sum
                 : norm == "tv"     ? NormTag::tv
                                    : NormTag::none;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace qlump
