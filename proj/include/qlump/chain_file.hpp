// Canonical chain file format: JSON with explicit fields
//   n          state count
//   P          row-major transition matrix, n rows of n numbers
//   partition  list of blocks, each a list of zero-based state indices
//   metadata   optional object (generator parameters, seed, labels)
// Doubles are emitted in shortest round-trip form, so files reload losslessly
// and regeneration under a fixed seed is byte-identical.
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlump/error.hpp"
#include "qlump/matrix.hpp"
#include "qlump/partition.hpp"

namespace qlump {

struct ChainFile {
    Matrix P;
    StatePartition partition;
    nlohmann::json metadata = nlohmann::json::object();
};

inline nlohmann::json chain_to_json(const ChainFile& cf) {
    nlohmann::json j;
    j["n"] = cf.P.dim;
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < cf.P.dim; ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t k = 0; k < cf.P.dim; ++k) row.push_back(cf.P(i, k));
        rows.push_back(std::move(row));
    }
    j["P"] = std::move(rows);
    j["partition"] = cf.partition.blocks();
    if (!cf.metadata.empty()) j["metadata"] = cf.metadata;
    return j;
}

inline ChainFile chain_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("chain file root must be a JSON object");
    if (!j.contains("n") || !j["n"].is_number_unsigned())
        throw ParseError("field n: missing or not a nonnegative integer");
    const std::size_t n = j["n"].get<std::size_t>();
    if (n == 0) throw ParseError("field n: must be positive");

    if (!j.contains("P") || !j["P"].is_array() || j["P"].size() != n) {
        std::ostringstream os;
        os << "field P: expected an array of " << n << " rows";
        throw ParseError(os.str());
    }
    Matrix p(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = j["P"][i];
        if (!row.is_array() || row.size() != n) {
            std::ostringstream os;
            os << "field P: row " << i << " has " << (row.is_array() ? row.size() : 0)
               << " entries, expected " << n;
            throw ParseError(os.str());
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (!row[k].is_number()) {
                std::ostringstream os;
                os << "field P: entry (" << i << "," << k << ") is not a number";
                throw ParseError(os.str());
            }
            p(i, k) = row[k].get<double>();
        }
    }
    const auto check = validate_stochastic(p, 1e-9);
    if (!check.ok)
        throw ParseError("field P: matrix is not row-stochastic at tolerance 1e-9: " +
                         check.violations.front().what);

    if (!j.contains("partition") || !j["partition"].is_array())
        throw ParseError("field partition: missing or not an array of blocks");
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t b = 0; b < j["partition"].size(); ++b) {
        const auto& jb = j["partition"][b];
        if (!jb.is_array()) {
            std::ostringstream os;
            os << "field partition: block " << b << " is not an array";
            throw ParseError(os.str());
        }
        std::vector<std::size_t> block;
        for (const auto& e : jb) {
            if (!e.is_number_unsigned()) {
                std::ostringstream os;
                os << "field partition: block " << b << " holds a non-index value";
                throw ParseError(os.str());
            }
            block.push_back(e.get<std::size_t>());
        }
        blocks.push_back(std::move(block));
    }
    ChainFile cf;
    cf.P = std::move(p);
    try {
        cf.partition = StatePartition(std::move(blocks), n);
    } catch (const Error& e) {
        throw ParseError(std::string("field partition: ") + e.what());
    }
    if (j.contains("metadata")) {
        if (!j["metadata"].is_object()) throw ParseError("field metadata: must be an object");
        cf.metadata = j["metadata"];
    }
    return cf;
}

inline ChainFile load_chain_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open chain file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        return chain_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void save_chain_file(const ChainFile& cf, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << chain_to_json(cf).dump(2) << '\n';
    if (!out) throw Error("failed writing chain file " + path);
}

}  // namespace qlump
