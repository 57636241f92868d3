// SPDX-License-Identifier: MIT
#include "mfgliq/expression.hpp"
#include "mfgliq/model.hpp"
#include "mfgliq/model_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace mfgliq;

TEST(Grid, GeometricStepsShrinkByRatio) {
    const TimeGrid g = build_grid(2.0, 1e-5, 500, 1.01);
    ASSERT_EQ(g.size(), 501u);
    EXPECT_EQ(g.nodes.front(), 0.0);
    EXPECT_DOUBLE_EQ(g.last(), 2.0 - 1e-5);
    EXPECT_EQ(g.refinement, Refinement::Geometric);
    for (std::size_t k = 2; k + 1 < g.size(); ++k) {
        const double h0 = g.nodes[k - 1] - g.nodes[k - 2], h1 = g.nodes[k] - g.nodes[k - 1];
        EXPECT_NEAR(h0 / h1, 1.01, 1e-8);
    }
    const auto ext = g.extended();
    EXPECT_EQ(ext.size(), 502u);
    EXPECT_EQ(ext.back(), 2.0);
}

TEST(Grid, UniformSteps) {
    const TimeGrid g = build_grid(1.0, 0.1, 9);
    for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g.nodes[k] - g.nodes[k - 1], 0.1, 1e-15);
}

TEST(Grid, RejectsBadArguments) {
    EXPECT_THROW(build_grid(1.0, 0.0, 10), InvalidArgument);
    EXPECT_THROW(build_grid(1.0, 1.0, 10), InvalidArgument);
    EXPECT_THROW(build_grid(-1.0, 0.1, 10), InvalidArgument);
    EXPECT_THROW(build_grid(1.0, 0.1, 1), InvalidArgument);
    EXPECT_THROW(build_grid(1.0, 0.1, 10, 0.9), InvalidArgument);
}

TEST(Tree, NodesAndTimes) {
    const CommonNoiseTree tree(2.0, 8);
    EXPECT_EQ(tree.node_count(), 45u);
    EXPECT_DOUBLE_EQ(tree.dt(), 0.25);
    EXPECT_EQ(tree.time(8), 2.0);
    const TreeNode n = tree.node(4, 3);
    EXPECT_DOUBLE_EQ(n.t, 1.0);
    EXPECT_DOUBLE_EQ(n.w, 2.0 * 0.5);
    EXPECT_THROW(CommonNoiseTree(1.0, 0), InvalidArgument);
    const TreeProcess p = TreeProcess::zeros(tree);
    EXPECT_EQ(p.depth(), 8);
    EXPECT_EQ(p.values[8].size(), 9u);
}

TEST(Coefficient, Kinds) {
    const auto c = CoefficientProcess::constant(3.0);
    EXPECT_TRUE(c.is_constant());
    EXPECT_EQ(c.at(0.7), 3.0);
    const auto f = CoefficientProcess::deterministic([](double t) { return 1.0 + t; });
    EXPECT_FALSE(f.is_constant());
    EXPECT_TRUE(f.is_deterministic());
    EXPECT_THROW((void)f.constant_value(), UnsupportedBackend);
    const auto g = CoefficientProcess::tree_adapted([](const TreeNode& n) { return 2.0 + n.w; });
    EXPECT_TRUE(g.is_tree());
    EXPECT_THROW((void)g.at(0.5), UnsupportedBackend);
    EXPECT_DOUBLE_EQ(g.scaled(2.0).at(TreeNode{1, 1, 0.5, 0.25}), 4.5);
    EXPECT_DOUBLE_EQ(f.scaled(3.0).at(1.0), 6.0);
    EXPECT_TRUE(CoefficientProcess::constant(0.0).is_zero());
}

TEST(Coefficient, TreeTableLookup) {
    const auto c = CoefficientProcess::tree_table({{1.0}, {2.0, 3.0}});
    EXPECT_EQ(c.table_depth(), 1);
    EXPECT_EQ(c.at(TreeNode{1, 1, 0.5, 0.7}), 3.0);
    EXPECT_THROW((void)c.at(TreeNode{2, 0, 1.0, 0.0}), InvalidArgument);
}

TEST(Validation, BoundsAreChecked) {
    ModelSpec s = ModelSpec::constant(1.0, 1.0, 2.0, 5.0, 5.0);
    EXPECT_NO_THROW(validate_model(s));
    s.eta = CoefficientProcess::deterministic([](double t) { return 5.0 + 2.0 * std::sin(2.0 * std::numbers::pi * t); });
    EXPECT_THROW(validate_model(s), InvalidArgument);
    s.bounds.eta_star = 3.0;
    s.bounds.eta_max = 7.0;
    EXPECT_NO_THROW(validate_model(s));
    s.bounds.eta_star = 0.0;
    EXPECT_THROW(validate_model(s), InvalidArgument);
}

TEST(Validation, WeakInteraction) {
    const ValidationReport ok = validate_weak_interaction(ModelSpec::constant(1, 1, 5, 5, 5));
    EXPECT_TRUE(ok.pass);
    EXPECT_DOUBLE_EQ(ok.margin, 400.0 - 25.0);
    EXPECT_GT(2.0 * 5.0 - 5.0 / (2.0 * ok.theta), 0.0);
    EXPECT_GT(2.0 * 5.0 - 5.0 * ok.theta / 2.0, 0.0);
    EXPECT_FALSE(validate_weak_interaction(ModelSpec::constant(1, 1, 20, 5, 5)).pass);
    EXPECT_TRUE(validate_weak_interaction(ModelSpec::constant(1, 1, 0, 5, 5)).pass);
}

TEST(Validation, DiscountAssumption) {
    ModelSpec s = ModelSpec::constant(1, 1, 1, 5, 5);
    EXPECT_TRUE(check_assumption_app(s).holds());
    s.eta = CoefficientProcess::tree_adapted([](const TreeNode&) { return 5.0; });
    EXPECT_FALSE(check_assumption_app(s).holds());
}

TEST(Expression, Evaluates) {
    const Expression e = Expression::parse("5 + 2*sin(2*pi*t)");
    EXPECT_NEAR(e(0.25), 7.0, 1e-14);
    EXPECT_FALSE(e.uses_w());
    EXPECT_TRUE(e.uses_t());
    const Expression g = Expression::parse("-2^2 + tanh(w) * exp(0)");
    EXPECT_NEAR(g(0.0, 1.0), -4.0 + std::tanh(1.0), 1e-14);
    EXPECT_TRUE(g.uses_w());
    EXPECT_NEAR(Expression::parse("(1 + t) / 2 - cos(0)")(3.0), 1.0, 1e-15);
}

TEST(Expression, RejectsMalformedInput) {
    EXPECT_THROW(Expression::parse("1 +"), InvalidArgument);
    EXPECT_THROW(Expression::parse("foo(t)"), InvalidArgument);
    EXPECT_THROW(Expression::parse("(t"), InvalidArgument);
    EXPECT_THROW(Expression::parse("x"), InvalidArgument);
}

namespace {

nlohmann::json base_doc() {
    return nlohmann::json::parse(R"({
        "horizon": 1, "x0": 1,
        "kappa": {"const": 1}, "eta": {"const": 2}, "lambda": {"fn": "1 + t"},
        "bounds": {"kappa_max": 1, "eta_max": 2, "eta_star": 2, "lambda_max": 2, "lambda_star": 1}
    })");
}

}  // namespace

TEST(ModelFile, ParsesValidDocument) {
    const LoadedModel m = parse_model(base_doc());
    EXPECT_TRUE(m.spec.all_deterministic());
    EXPECT_DOUBLE_EQ(m.spec.lambda.at(0.5), 1.5);
    EXPECT_EQ(m.grid.K, 1000);
    EXPECT_FALSE(m.tree_depth.has_value());
}

TEST(ModelFile, RejectsBadDocuments) {
    auto d = base_doc();
    d["extra"] = 1;
    EXPECT_THROW(parse_model(d), InvalidArgument);
    d = base_doc();
    d.erase("bounds");
    EXPECT_THROW(parse_model(d), InvalidArgument);
    d = base_doc();
    d["lambda"] = {{"fn", "1 + w"}};
    EXPECT_THROW(parse_model(d), InvalidArgument);
    d = base_doc();
    d["lambda"] = {{"tree", {{"values", {{1.0}, {1.0, 1.5}}}}}};
    d["tree"] = {{"depth", 3}};
    EXPECT_THROW(parse_model(d), InvalidArgument);
    d = base_doc();
    d["eta"] = {{"const", 3}};
    EXPECT_THROW(parse_model(d), InvalidArgument);
    d = base_doc();
    d["grid"] = {{"K", 1.5}};
    EXPECT_THROW(parse_model(d), InvalidArgument);
    EXPECT_THROW(load_model("/nonexistent/model.json"), InvalidArgument);
}

TEST(ModelFile, TreeTableDocument) {
    auto d = base_doc();
    d["lambda"] = {{"tree", {{"values", {{1.0}, {1.0, 1.5}}}}}};
    d["tree"] = {{"depth", 1}};
    const LoadedModel m = parse_model(d);
    ASSERT_TRUE(m.tree_depth.has_value());
    EXPECT_TRUE(m.spec.has_tree_coefficients());
    EXPECT_EQ(m.tree()->depth(), 1);
}

TEST(ModelFile, ShippedModelsLoad) {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(MFGLIQ_MODELS_DIR)) {
        if (entry.path().extension() != ".json") continue;
        SCOPED_TRACE(entry.path().string());
        EXPECT_NO_THROW(load_model(entry.path().string()));
        ++count;
    }
    EXPECT_GE(count, 6);
}
