// SPDX-License-Identifier: MIT
#include "mfgliq/model_io.hpp"
#include "mfgliq/riccati.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace mfgliq;

namespace {

const TimeGrid kGrid = build_grid(1.0, 1e-6, 1000, 1.005);

double max_rel(const ProcessPath& A, std::size_t nodes, auto&& ref) {
    double e = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) e = std::max(e, std::fabs(A[k] - ref(A.times[k])) / ref(A.times[k]));
    return e;
}

}  // namespace

TEST(ClosedForm, MatchesHyperbolicOracle) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    const oracle::Hyperbolic h{1.0, 1.0, 5.0, 5.0};
    const RiccatiSolution sol = solve_closed_form(s, kGrid, false);
    EXPECT_LT(max_rel(sol.A, sol.grid_nodes(), [&](double t) { return h.A(t); }), 1e-12);
    EXPECT_TRUE(std::isinf(sol.A.back()));
    EXPECT_EQ(sol.state_factor[0], 1.0);
    EXPECT_EQ(sol.state_factor.back(), 0.0);
    // X* = x S for kappa = 0.
    EXPECT_NEAR(sol.state_factor.at(0.5), h.X(0.5), 1e-12);
}

TEST(ClosedForm, KappaShiftMatchesMatrixExponential) {
    const ModelSpec s = ModelSpec::constant(2.0, 1.0, 4.0, 3.0, 2.0);
    const oracle::Linear o{2.0, 1.0, 4.0, 3.0, 2.0};
    const TimeGrid g = build_grid(2.0, 1e-6, 400, 1.01);
    const RiccatiSolution sol = solve_closed_form(s, g, true);
    EXPECT_LT(max_rel(sol.A, sol.grid_nodes(), [&](double t) { return o.riccati(t, true); }), 1e-10);
}

TEST(InverseODE, MatchesClosedFormOnGeometricGrid) {
    for (double kappa : {0.0, 5.0}) {
        const ModelSpec s = ModelSpec::constant(1.0, 1.0, kappa, 5.0, 5.0);
        const RiccatiSolution cf = solve_closed_form(s, kGrid, true);
        const RiccatiSolution ode = solve_inverse_ode(s, kGrid, true);
        EXPECT_LT(max_rel(ode.A, ode.grid_nodes(), [&](double t) { return cf.A.at(t); }), 1e-10) << kappa;
        for (std::size_t k = 0; k < cf.state_factor.size(); ++k)
            EXPECT_NEAR(ode.adjoint_factor[k], cf.adjoint_factor[k], 1e-9 * cf.adjoint_factor[0]);
    }
}

TEST(InverseODE, SubstepsConvergeOnTimeVaryingSpec) {
    const LoadedModel m = load_model(std::string(MFGLIQ_MODELS_DIR) + "/time_varying.json");
    const TimeGrid g = m.grid.build(m.spec.horizon);
    const RiccatiSolution a = solve_inverse_ode(m.spec, g, true, 1);
    const RiccatiSolution b = solve_inverse_ode(m.spec, g, true, 4);
    EXPECT_LT(max_rel(a.A, a.grid_nodes(), [&](double t) { return b.A.at(t); }), 1e-9);
}

TEST(Penalized, MatchesMatrixExponential) {
    const oracle::Linear o{1.0, 1.0, 3.0, 5.0, 5.0};
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 3.0, 5.0, 5.0);
    for (double n : {1.0, 50.0, 1e4}) {
        for (StepKernel kern : {StepKernel::RungeKutta4, StepKernel::FrozenExact}) {
            const RiccatiSolution p = solve_penalized(s, kGrid, n, true, kern);
            EXPECT_DOUBLE_EQ(p.A.back(), 2.0 * n);
            EXPECT_FALSE(p.singular());
            const double tol = kern == StepKernel::FrozenExact ? 1e-11 : 1e-8;
            EXPECT_LT(max_rel(p.A, p.A.size(), [&](double t) { return o.penalized(t, n, true); }), tol) << n;
        }
    }
}

TEST(Penalized, MonotoneInPenaltyAndBelowSingular) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    const RiccatiSolution A = solve_closed_form(s, kGrid, false);
    RiccatiSolution prev = solve_penalized(s, kGrid, 1.0, false);
    for (double n : {10.0, 100.0, 1000.0}) {
        const RiccatiSolution p = solve_penalized(s, kGrid, n, false);
        for (std::size_t k = 0; k < p.grid_nodes(); ++k) {
            EXPECT_GE(p.A[k], prev.A[k]);
            EXPECT_LE(p.A[k], A.A[k] * (1.0 + 1e-12));
        }
        prev = p;
    }
}

TEST(Envelopes, NoViolationsOnShippedDeterministicSpecs) {
    for (const auto& entry : std::filesystem::directory_iterator(MFGLIQ_MODELS_DIR)) {
        const LoadedModel m = load_model(entry.path().string());
        if (m.spec.has_tree_coefficients()) continue;
        SCOPED_TRACE(entry.path().filename().string());
        const TimeGrid g = m.grid.build(m.spec.horizon);
        for (bool kap : {false, true}) {
            const EnvelopeReport r = check_envelopes(solve_inverse_ode(m.spec, g, kap), m.spec);
            EXPECT_EQ(r.violations(), 0u);
            EXPECT_EQ(r.nodes_checked, g.size());
            EXPECT_GT(r.discount_pairs_checked, 0u);
        }
        const EnvelopeReport pen = check_envelopes(solve_penalized(m.spec, g, 100.0, false), m.spec);
        EXPECT_EQ(pen.violations(), 0u);
        EXPECT_GT(pen.weighted_constant, 0.0);
        EXPECT_LE(pen.weighted_sup, pen.weighted_constant);
    }
}

TEST(Envelopes, BoundsBracketTheSolution) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    const RiccatiSolution sol = solve_closed_form(s, kGrid, false);
    const EnvelopeReport r = check_envelopes(sol, s);
    for (std::size_t k = 0; k < sol.grid_nodes(); ++k) {
        EXPECT_LE(r.lower[k], sol.A[k] * (1.0 + 1e-10));
        EXPECT_GE(r.upper[k], sol.A[k] * (1.0 - 1e-10));
    }
}

TEST(Tree, LadderDefaults) {
    const CoefficientBounds b{0.0, 5.0, 4.0, 9.0, 1.0};
    const auto l = default_ladder(b);
    ASSERT_EQ(l.size(), 12u);
    EXPECT_DOUBLE_EQ(l.front(), 4.0);
    EXPECT_DOUBLE_EQ(l.back(), 2.0 * 4096.0);
    const auto capped = default_ladder(b, 100.0);
    EXPECT_DOUBLE_EQ(capped.back(), 64.0);
}

TEST(Tree, NevilleIsExactOnPolynomials) {
    const std::vector<double> h = {0.5, 0.25, 0.1, 0.05};
    std::vector<double> y;
    for (double x : h) y.push_back(2.0 - x + 3.0 * x * x - x * x * x);
    EXPECT_NEAR(detail::neville_at_zero(h, y), 2.0, 1e-13);
}

TEST(Tree, ConstantEmbeddedMatchesClosedForm) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    const CommonNoiseTree tree(1.0, 40);
    const RiccatiSolution sol = solve_tree(s, tree);
    ASSERT_TRUE(sol.tree.has_value());
    const auto r = closed_form_roots(0.0, 5.0, 5.0);
    for (int k = 0; k < tree.depth(); ++k)
        for (int j = 0; j <= k; ++j)
            EXPECT_NEAR(sol.tree->A.values[k][j] / closed_form_A(r, 1.0 - tree.time(k)), 1.0, 1e-9);
    EXPECT_LE(sol.tree->last_increment, 1e-8);
    // Per-step discount equals the closed-form state ratio.
    for (int k = 0; k + 1 < tree.depth(); ++k)
        EXPECT_NEAR(sol.tree->discount.values[k][0],
                    closed_form_state(r, 1.0, tree.time(k + 1)) / closed_form_state(r, 1.0, tree.time(k)), 1e-9);
}

TEST(Tree, PenalizedMatchesGridPenalized) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 2.0, 5.0, 5.0);
    const oracle::Linear o{1.0, 1.0, 2.0, 5.0, 5.0};
    const CommonNoiseTree tree(1.0, 16);
    const TreeProcess p = solve_penalized_tree(s, tree, 30.0, true);
    for (int k = 0; k <= tree.depth(); ++k) EXPECT_NEAR(p.values[k][0] / o.penalized(tree.time(k), 30.0, true), 1.0, 1e-11);
}

TEST(Tree, KappaTransformAgreesWithDirect) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 5.0, 5.0, 5.0);
    const CommonNoiseTree tree(1.0, 32);
    TreeOptions o;
    o.include_kappa = true;
    const RiccatiSolution direct = solve_tree(s, tree, o);
    o.kappa_handling = KappaHandling::Transform;
    const RiccatiSolution transformed = solve_tree(s, tree, o);
    for (int k = 0; k < tree.depth(); ++k)
        EXPECT_NEAR(transformed.tree->A.values[k][0] / direct.tree->A.values[k][0], 1.0, 1e-7);
}

TEST(Tree, RiskAversionOrdersNodes) {
    const LoadedModel m = load_model(std::string(MFGLIQ_MODELS_DIR) + "/tree_lambda.json");
    const CommonNoiseTree tree = *m.tree();
    const RiccatiSolution sol = solve_tree(m.spec, tree);
    // lambda increases with w and A is increasing in lambda.
    for (int k = 1; k < tree.depth(); ++k)
        for (int j = 1; j <= k; ++j) EXPECT_GT(sol.tree->A.values[k][j], sol.tree->A.values[k][j - 1]);
    const EnvelopeReport env = check_envelopes(sol, m.spec);
    EXPECT_EQ(env.violations(), 0u);
    EXPECT_EQ(env.nodes_checked, tree.node_count() - static_cast<std::size_t>(tree.depth()) - 1);
}

TEST(Tree, ExhaustedLadderThrows) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    TreeOptions o;
    o.ladder = {1.0, 2.0, 4.0};
    o.tol = 1e-14;
    try {
        (void)solve_tree(s, CommonNoiseTree(1.0, 16), o);
        FAIL() << "expected NotConverged";
    } catch (const NotConverged& e) {
        EXPECT_GT(e.last_increment(), 1e-14);
    }
    o.ladder = {2.0, 1.0};
    EXPECT_THROW((void)solve_tree(s, CommonNoiseTree(1.0, 16), o), InvalidArgument);
}

TEST(Riccati, SupDistanceWindow) {
    const ProcessPath a{{0.0, 0.5, 1.0}, {1.0, 2.0, 3.0}};
    const ProcessPath b{{0.0, 0.5, 1.0}, {1.0, 2.5, 13.0}};
    EXPECT_DOUBLE_EQ(sup_distance(a, b, 0.6), 0.5);
    EXPECT_DOUBLE_EQ(sup_distance(a, b, 1.0), 10.0);
}
