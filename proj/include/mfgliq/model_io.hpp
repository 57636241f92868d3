// SPDX-License-Identifier: MIT
//
// JSON model files.
//
//   {
//     "horizon": 1.0,
//     "x0": 1.0,
//     "kappa":  {"const": 5},
//     "eta":    {"fn": "5 + 2*sin(2*pi*t)"},
//     "lambda": {"tree": {"expr": "5 + tanh(w)"}},      or {"tree": {"values": [[..], [.., ..], ...]}}
//     "bounds": {"kappa_max": 5, "eta_max": 7, "eta_star": 3, "lambda_max": 6, "lambda_star": 4},
//     "grid":   {"epsilon_cut": 1e-6, "K": 1000, "ratio": 1.005},
//     "tree":   {"depth": 64}
//   }
//
// "grid" and "tree" are optional. Bounds are required and are checked
// against the coefficients.
#pragma once

#include "mfgliq/error.hpp"
#include "mfgliq/expression.hpp"
#include "mfgliq/model.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

namespace mfgliq {

struct GridConfig {
    double epsilon_cut = 0.0;  // 0: 1e-6 T
    int K = 1000;
    double ratio = 1.005;

    [[nodiscard]] TimeGrid build(double horizon) const {
        return build_grid(horizon, epsilon_cut > 0.0 ? epsilon_cut : 1e-6 * horizon, K, ratio);
    }
};

struct LoadedModel {
    ModelSpec spec;
    GridConfig grid;
    std::optional<int> tree_depth;
    nlohmann::json document;  // parsed input, echoed into manifests

    [[nodiscard]] std::optional<CommonNoiseTree> tree() const {
        if (!tree_depth) return std::nullopt;
        return CommonNoiseTree(spec.horizon, *tree_depth);
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw InvalidArgument("model: unknown key '" + it.key() + "' in " + where);
}

inline double number(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw InvalidArgument("model: missing '" + std::string(key) + "' in " + where);
    const auto& v = obj.at(key);
    if (!v.is_number()) throw InvalidArgument("model: '" + std::string(key) + "' in " + where + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw InvalidArgument("model: '" + std::string(key) + "' must be finite");
    return d;
}

inline CoefficientProcess parse_coefficient(const nlohmann::json& j, const std::string& name) {
    if (!j.is_object() || j.size() != 1)
        throw InvalidArgument("model: '" + name + "' must be an object with exactly one of const, fn, tree");
    if (j.contains("const")) return CoefficientProcess::constant(number(j, "const", name));
    if (j.contains("fn")) {
        if (!j.at("fn").is_string()) throw InvalidArgument("model: '" + name + ".fn' must be a string");
        auto e = std::make_shared<Expression>(Expression::parse(j.at("fn").get<std::string>()));
        if (e->uses_w()) throw InvalidArgument("model: '" + name + ".fn' uses w; use a tree coefficient instead");
        return CoefficientProcess::deterministic([e](double t) { return (*e)(t); }, e->source());
    }
    if (j.contains("tree")) {
        const auto& tr = j.at("tree");
        if (!tr.is_object() || tr.size() != 1)
            throw InvalidArgument("model: '" + name + ".tree' must hold exactly one of expr, values");
        if (tr.contains("expr")) {
            if (!tr.at("expr").is_string()) throw InvalidArgument("model: '" + name + ".tree.expr' must be a string");
            auto e = std::make_shared<Expression>(Expression::parse(tr.at("expr").get<std::string>()));
            return CoefficientProcess::tree_adapted([e](const TreeNode& n) { return (*e)(n.t, n.w); }, e->source());
        }
        if (tr.contains("values")) {
            const auto& v = tr.at("values");
            if (!v.is_array() || v.empty()) throw InvalidArgument("model: '" + name + ".tree.values' must be a nonempty array");
            std::vector<std::vector<double>> table;
            for (std::size_t k = 0; k < v.size(); ++k) {
                if (!v[k].is_array() || v[k].size() != k + 1)
                    throw InvalidArgument("model: '" + name + ".tree.values' row " + std::to_string(k) + " must have " +
                                          std::to_string(k + 1) + " entries");
                std::vector<double> row;
                for (const auto& x : v[k]) {
                    if (!x.is_number()) throw InvalidArgument("model: '" + name + ".tree.values' must be numeric");
                    row.push_back(x.get<double>());
                }
                table.push_back(std::move(row));
            }
            return CoefficientProcess::tree_table(std::move(table));
        }
        throw InvalidArgument("model: '" + name + ".tree' must hold expr or values");
    }
    throw InvalidArgument("model: '" + name + "' must be one of {const}, {fn}, {tree}");
}

}  // namespace detail

inline LoadedModel parse_model(const nlohmann::json& doc) {
    if (!doc.is_object()) throw InvalidArgument("model: top level must be an object");
    detail::reject_unknown(doc, {"horizon", "x0", "kappa", "eta", "lambda", "bounds", "grid", "tree", "name"}, "model");
    LoadedModel m;
    m.document = doc;
    m.spec.horizon = detail::number(doc, "horizon", "model");
    m.spec.x0 = detail::number(doc, "x0", "model");
    for (const char* key : {"kappa", "eta", "lambda"})
        if (!doc.contains(key)) throw InvalidArgument(std::string("model: missing '") + key + "'");
    m.spec.kappa = detail::parse_coefficient(doc.at("kappa"), "kappa");
    m.spec.eta = detail::parse_coefficient(doc.at("eta"), "eta");
    m.spec.lambda = detail::parse_coefficient(doc.at("lambda"), "lambda");

    if (!doc.contains("bounds")) throw InvalidArgument("model: missing 'bounds'");
    const auto& b = doc.at("bounds");
    if (!b.is_object()) throw InvalidArgument("model: 'bounds' must be an object");
    detail::reject_unknown(b, {"kappa_max", "eta_max", "eta_star", "lambda_max", "lambda_star"}, "bounds");
    m.spec.bounds = {detail::number(b, "kappa_max", "bounds"), detail::number(b, "eta_max", "bounds"),
                     detail::number(b, "eta_star", "bounds"), detail::number(b, "lambda_max", "bounds"),
                     detail::number(b, "lambda_star", "bounds")};

    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        if (!g.is_object()) throw InvalidArgument("model: 'grid' must be an object");
        detail::reject_unknown(g, {"epsilon_cut", "K", "ratio"}, "grid");
        if (g.contains("epsilon_cut")) m.grid.epsilon_cut = detail::number(g, "epsilon_cut", "grid");
        if (g.contains("K")) {
            if (!g.at("K").is_number_integer()) throw InvalidArgument("model: 'grid.K' must be an integer");
            m.grid.K = g.at("K").get<int>();
        }
        if (g.contains("ratio")) m.grid.ratio = detail::number(g, "ratio", "grid");
    }
    if (doc.contains("tree")) {
        const auto& t = doc.at("tree");
        if (!t.is_object()) throw InvalidArgument("model: 'tree' must be an object");
        detail::reject_unknown(t, {"depth"}, "tree");
        if (!t.contains("depth") || !t.at("depth").is_number_integer())
            throw InvalidArgument("model: 'tree.depth' must be an integer");
        m.tree_depth = t.at("depth").get<int>();
    }

    for (const auto* c : {&m.spec.kappa, &m.spec.eta, &m.spec.lambda})
        if (c->table_depth() && (!m.tree_depth || *c->table_depth() != *m.tree_depth))
            throw InvalidArgument("model: tree table depth does not match 'tree.depth'");
    if (m.spec.has_tree_coefficients() && !m.tree_depth)
        throw InvalidArgument("model: tree coefficients need 'tree.depth'");

    // Grid and bounds checks happen here so a bad file fails before any output.
    (void)m.grid.build(m.spec.horizon);
    const auto tree = m.tree();
    validate_model(m.spec, tree ? &*tree : nullptr);
    return m;
}

inline LoadedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("model: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("model: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_model(doc);
}

}  // namespace mfgliq
