// SPDX-License-Identifier: MIT
#include "mfgliq/equilibrium.hpp"
#include "mfgliq/model_io.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mfgliq;

namespace {

const TimeGrid kGrid = build_grid(1.0, 1e-6, 1000, 1.005);

}  // namespace

TEST(Equilibrium, NoPermanentImpactMatchesHyperbolic) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    const oracle::Hyperbolic h{1.0, 1.0, 5.0, 5.0};
    for (auto backend : {RiccatiBackend::ClosedForm, RiccatiBackend::InverseODE}) {
        const EquilibriumSolution sol = solve_equilibrium(s, kGrid, {backend, 1});
        for (std::size_t k = 0; k < kGrid.size(); ++k) {
            const double t = kGrid.nodes[k];
            EXPECT_NEAR(sol.xi_star[k], h.xi(t), 1e-9);
            EXPECT_NEAR(sol.X_star[k], h.X(t), 1e-9);
            EXPECT_EQ(sol.B[k], 0.0);
        }
        EXPECT_NEAR(sol.value_at_0, h.value(), 1e-9);
        EXPECT_NEAR(value_function(s, sol, kGrid.nodes[300], 0.7), 0.5 * h.A(kGrid.nodes[300]) * 0.49, 1e-8);
    }
}

TEST(Equilibrium, PermanentImpactMatchesMatrixExponential) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 5.0, 5.0, 5.0);
    const oracle::Linear o{1.0, 1.0, 5.0, 5.0, 5.0};
    const EquilibriumSolution sol = solve_equilibrium(s, kGrid);
    double e_mu = 0.0, e_x = 0.0;
    for (std::size_t k = 0; k < kGrid.size(); ++k) {
        e_mu = std::max(e_mu, std::fabs(sol.mu_star[k] - o.mu(kGrid.nodes[k])));
        e_x = std::max(e_x, std::fabs(sol.X_star[k] - o.X(kGrid.nodes[k])));
    }
    EXPECT_LT(e_mu, 1e-9);
    EXPECT_LT(e_x, 1e-9);
    EXPECT_EQ(sol.consistency_residual, 0.0);
    EXPECT_LT(sol.source_consistency, 1e-9);
    EXPECT_LT(l2_distance(sol.B, sol.aggregate.B_tilde), 1e-8);
    EXPECT_LT(sol.liquidation_gap, 1e-5);
    EXPECT_NEAR(direct_cost(s, sol.mu_star, sol.X_star, sol.xi_star), sol.value_at_0, 1e-8);
}

TEST(Equilibrium, LiquidatesTheInitialPosition) {
    const LoadedModel m = load_model(std::string(MFGLIQ_MODELS_DIR) + "/time_varying_kappa.json");
    const TimeGrid g = m.grid.build(m.spec.horizon);
    const EquilibriumSolution sol = solve_equilibrium(m.spec, g);
    EXPECT_NEAR(quad::integral(sol.xi_star.times, sol.xi_star.values), m.spec.x0, 1e-6);
    EXPECT_NEAR(sol.X_star[0], m.spec.x0, 1e-15);
    for (std::size_t k = 0; k < sol.X_star.size(); ++k) EXPECT_GE(sol.X_star[k], -1e-12);
}

TEST(Equilibrium, ValueMatchesDirectCostOnTimeVaryingSpec) {
    const LoadedModel m = load_model(std::string(MFGLIQ_MODELS_DIR) + "/time_varying.json");
    const TimeGrid g = m.grid.build(m.spec.horizon);
    const EquilibriumSolution sol = solve_equilibrium(m.spec, g, {RiccatiBackend::InverseODE, 4});
    EXPECT_NEAR(direct_cost(m.spec, sol.mu_star, sol.X_star, sol.xi_star), sol.value_at_0, 1e-7);
    const EquilibriumSolution coarse = solve_equilibrium(m.spec, g);
    EXPECT_LT(l2_distance(coarse.xi_star, sol.xi_star), 1e-8);
}

TEST(Equilibrium, BackendErrors) {
    const LoadedModel m = load_model(std::string(MFGLIQ_MODELS_DIR) + "/time_varying.json");
    const TimeGrid g = m.grid.build(m.spec.horizon);
    EXPECT_THROW(solve_equilibrium(m.spec, g, {RiccatiBackend::ClosedForm, 1}), UnsupportedBackend);
    EXPECT_THROW(solve_equilibrium(m.spec, g, {RiccatiBackend::TreeInduction, 1}), UnsupportedBackend);
    const LoadedModel t = load_model(std::string(MFGLIQ_MODELS_DIR) + "/tree_lambda.json");
    EXPECT_THROW(solve_equilibrium(t.spec, t.grid.build(1.0)), UnsupportedBackend);
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    const EquilibriumSolution sol = solve_equilibrium(s, kGrid);
    EXPECT_THROW(value_function(s, sol, 1.0, 1.0), InvalidArgument);
    EXPECT_THROW(value_function(s, sol, 0.123456789, 1.0), InvalidArgument);
}

TEST(Certificate, PerturbationsCostMore) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 5.0, 5.0, 5.0);
    const EquilibriumSolution sol = solve_equilibrium(s, kGrid);
    const auto res = optimality_certificate(s, sol);
    ASSERT_EQ(res.size(), 20u);
    for (const auto& r : res) {
        EXPECT_GE(r.excess, -1e-8) << r.mode;
        EXPECT_NE(r.delta, 0.0);
    }
    // A second-order check: the excess scales with delta^2.
    const auto small = optimality_certificate(s, sol, 1, 0.02);
    const auto big = optimality_certificate(s, sol, 1, 0.2);
    EXPECT_NEAR(big[0].excess / small[0].excess, 100.0, 1.0);
}

TEST(TreeEquilibrium, ConstantEmbeddedMatchesGrid) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 5.0, 5.0, 5.0);
    const CommonNoiseTree tree(1.0, 64);
    const TreeEquilibrium te = solve_tree_equilibrium(s, tree);
    const EquilibriumSolution sol = solve_equilibrium(s, kGrid);
    EXPECT_NEAR(te.xi_mean.values[0][0], sol.xi_star[0], 1e-7);
    EXPECT_NEAR(te.value_at_0, sol.value_at_0, 1e-7);
    EXPECT_NEAR(te.direct_cost, te.value_at_0, 1e-7);
    for (int k = 0; k < tree.depth(); ++k) {
        double p = 0.0;
        for (int j = 0; j <= k; ++j) p += te.probability.values[k][j];
        EXPECT_NEAR(p, 1.0, 1e-12);
        EXPECT_NEAR(te.X_mean.values[k][k / 2], sol.X_star.at(tree.time(k)), 1e-7);
    }
}

TEST(TreeEquilibrium, RandomRiskAversion) {
    const LoadedModel m = load_model(std::string(MFGLIQ_MODELS_DIR) + "/tree_lambda.json");
    const TreeEquilibrium te = solve_tree_equilibrium(m.spec, *m.tree());
    EXPECT_NEAR(te.direct_cost, te.value_at_0, 1e-8);
    // B~/X~ = D - A > 0 when kappa > 0.
    for (int k = 0; k < m.tree()->depth(); ++k)
        for (int j = 0; j <= k; ++j) EXPECT_GT(te.B_ratio.values[k][j], 0.0);
}
