#pragma once

#include "unichain/errors.hpp"
#include "unichain/format.hpp"
#include "unichain/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace unichain {

inline constexpr int instance_format_version = 1;

namespace detail {

inline std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

inline void write_vector(std::ostream& out, const std::vector<double>& v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out << ", ";
        out << format_double(v[i]);
    }
    out << ']';
}

inline std::vector<double> read_vector(const nlohmann::json& node, const std::string& path) {
    if (!node.is_array()) throw Error(ErrorCode::parse_error, path + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
        if (!node[i].is_number())
            throw Error(ErrorCode::parse_error, path + "[" + std::to_string(i) + "] must be a number");
        out.push_back(node[i].get<double>());
    }
    return out;
}

} // namespace detail

/**
 * Canonical text form: fixed key order, one action block per line for the
 * transitions, and shortest round-trip decimals. parse_instance followed by
 * write_instance reproduces canonical text byte for byte.
 */
inline std::string write_instance(const MdpModel& model) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"format_version\": " << instance_format_version << ",\n";
    if (!model.name().empty()) out << "  \"name\": " << nlohmann::json(model.name()).dump() << ",\n";
    out << "  \"num_states\": " << model.num_states() << ",\n";
    out << "  \"num_actions\": " << model.num_actions() << ",\n";
    out << "  \"transitions\": [\n";
    const auto p = model.transitions();
    for (Action a = 0; a < p.size(); ++a) {
        out << "    [";
        for (State i = 0; i < p[a].size(); ++i) {
            if (i > 0) out << ", ";
            detail::write_vector(out, p[a][i]);
        }
        out << (a + 1 < p.size() ? "],\n" : "]\n");
    }
    out << "  ],\n";
    out << "  \"rewards\": [\n";
    const auto r = model.rewards();
    for (Action a = 0; a < r.size(); ++a) {
        out << "    ";
        detail::write_vector(out, r[a]);
        out << (a + 1 < r.size() ? ",\n" : "\n");
    }
    out << "  ]";
    if (model.initial()) {
        out << ",\n  \"initial\": ";
        detail::write_vector(out, *model.initial());
    }
    out << "\n}\n";
    return out.str();
}

/// Parses and validates an instance document; errors carry a line/column or the violated index path.
inline MdpModel parse_instance(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse_error, "syntax error at " + detail::line_column(text, e.byte));
    }
    if (!doc.is_object()) throw Error(ErrorCode::parse_error, "instance must be a JSON object");

    static const std::vector<std::string> known{"format_version", "name",    "num_states", "num_actions",
                                                "transitions",    "rewards", "initial"};
    for (const auto& item : doc.items())
        if (std::find(known.begin(), known.end(), item.key()) == known.end())
            throw Error(ErrorCode::parse_error, "unknown field '" + item.key() + "'");
    for (const char* key : {"format_version", "num_states", "num_actions", "transitions", "rewards"})
        if (!doc.contains(key)) throw Error(ErrorCode::parse_error, std::string("missing field '") + key + "'");

    if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != instance_format_version)
        throw Error(ErrorCode::parse_error, "unsupported format_version");
    if (!doc["num_states"].is_number_unsigned() || !doc["num_actions"].is_number_unsigned())
        throw Error(ErrorCode::parse_error, "num_states and num_actions must be non-negative integers");
    const auto n = doc["num_states"].get<std::size_t>();
    const auto m = doc["num_actions"].get<std::size_t>();

    const auto& tnode = doc["transitions"];
    if (!tnode.is_array() || tnode.size() != m)
        throw Error(ErrorCode::parse_error, "transitions must hold num_actions matrices");
    MdpModel::Transitions transitions(m);
    for (Action a = 0; a < m; ++a) {
        const std::string path = "transitions[" + std::to_string(a) + "]";
        if (!tnode[a].is_array() || tnode[a].size() != n)
            throw Error(ErrorCode::parse_error, path + " must hold num_states rows");
        for (State i = 0; i < n; ++i) {
            auto row = detail::read_vector(tnode[a][i], path + "[" + std::to_string(i) + "]");
            if (row.size() != n)
                throw Error(ErrorCode::parse_error, path + "[" + std::to_string(i) + "] must have num_states entries");
            transitions[a].push_back(std::move(row));
        }
    }
    const auto& rnode = doc["rewards"];
    if (!rnode.is_array() || rnode.size() != m)
        throw Error(ErrorCode::parse_error, "rewards must hold num_actions rows");
    MdpModel::Rewards rewards;
    for (Action a = 0; a < m; ++a) {
        auto row = detail::read_vector(rnode[a], "rewards[" + std::to_string(a) + "]");
        if (row.size() != n)
            throw Error(ErrorCode::parse_error, "rewards[" + std::to_string(a) + "] must have num_states entries");
        rewards.push_back(std::move(row));
    }
    std::optional<std::vector<double>> initial;
    if (doc.contains("initial")) {
        initial = detail::read_vector(doc["initial"], "initial");
        if (initial->size() != n) throw Error(ErrorCode::parse_error, "initial must have num_states entries");
    }
    std::string name;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) throw Error(ErrorCode::parse_error, "name must be a string");
        name = doc["name"].get<std::string>();
    }

    MdpModel model(transitions, rewards, std::move(initial), std::move(name));
    const ValidationReport violations = validate_mdp(model);
    if (!violations.empty()) {
        std::string msg = "instance violates model invariants:";
        for (const auto& v : violations) msg += " " + v.path + ": " + v.message + ";";
        throw Error(ErrorCode::invalid_model, msg);
    }
    return model;
}

inline MdpModel read_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::parse_error, "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_instance(buffer.str());
}

inline void write_instance_file(const std::string& path, const MdpModel& model) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::parse_error, "cannot write '" + path + "'");
    out << write_instance(model);
}

} // namespace unichain
