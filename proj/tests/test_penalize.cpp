// SPDX-License-Identifier: MIT
#include "mfgliq/model_io.hpp"
#include "mfgliq/penalize.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mfgliq;

namespace {

const TimeGrid kGrid = build_grid(1.0, 1e-6, 1000, 1.005);

}  // namespace

TEST(PenalizedMFG, MatchesMatrixExponential) {
    for (double kappa : {0.0, 5.0}) {
        const ModelSpec s = ModelSpec::constant(1.0, 1.0, kappa, 5.0, 5.0);
        const oracle::Linear o{1.0, 1.0, kappa, 5.0, 5.0};
        for (double n : {10.0, 1000.0}) {
            const PenalizedEquilibrium pe = solve_penalized_mfg(s, n, kGrid);
            EXPECT_NEAR(pe.terminal_position, o.terminal_penalized(n), 1e-10);
            double e = 0.0;
            for (std::size_t k = 0; k < pe.mu_n.size(); ++k)
                e = std::max(e, std::fabs(pe.mu_n[k] - o.mu_penalized(pe.mu_n.times[k], n)));
            EXPECT_LT(e, 1e-9);
            EXPECT_NEAR(pe.value_n, pe.value_formula, 1e-8);
        }
    }
}

TEST(PenalizedMFG, DynamicProgrammingOracle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 3; ++i) {
        const double T = 0.5 + U(rng), x = 0.5 + U(rng), eta = 1.0 + 4.0 * U(rng), lam = 1.0 + 4.0 * U(rng);
        const double kappa = 2.0 * std::sqrt(eta * lam) * U(rng), n = 1.0 + 50.0 * U(rng);
        const ModelSpec s = ModelSpec::constant(T, x, kappa, eta, lam);
        const PenalizedEquilibrium pe = solve_penalized_mfg(s, n, build_grid(T, 1e-6 * T, 1000, 1.005),
                                                            StepKernel::RungeKutta4, 4);
        const double dp = oracle::dp_penalized_value({T, x, kappa, eta, lam}, n, 50);
        EXPECT_NEAR(pe.value_n, dp, 1e-8) << "kappa " << kappa << " n " << n;
    }
}

TEST(PenalizedMFG, WeightedNormsStayBounded) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 5.0, 5.0, 5.0);
    double wx = 0.0, wb = 0.0;
    for (double n : {10.0, 100.0, 1000.0, 10000.0}) {
        const PenalizedEquilibrium pe = solve_penalized_mfg(s, n, kGrid);
        wx = std::max(wx, pe.weighted_X);
        wb = std::max(wb, pe.weighted_B);
    }
    EXPECT_LT(wx, 10.0);
    EXPECT_LT(wb, 10.0);
    EXPECT_DOUBLE_EQ(weight_gamma(s.bounds), 0.25);
    EXPECT_DOUBLE_EQ(weighted_sup(ProcessPath{{0.0, 0.5}, {2.0, 1.0}}, 1.0, 0.0, 1.0), 2.0);
}

TEST(Convergence, TableOnDecoupledSpec) {
    const ModelSpec s = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    const ConvergenceTable t = convergence_experiment(s);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_TRUE(t.sandwich());
    EXPECT_TRUE(t.decreasing([](const ConvergenceRow& r) { return r.value_gap; }, true));
    EXPECT_TRUE(t.decreasing([](const ConvergenceRow& r) { return r.terminal_energy; }));
    EXPECT_TRUE(t.decreasing([](const ConvergenceRow& r) { return r.l2_X; }));
    EXPECT_TRUE(t.decreasing([](const ConvergenceRow& r) { return r.sup_A; }));
    EXPECT_NEAR(t.terminal_slope, -1.0, 0.1);
    EXPECT_LE(t.epsilon_cut, 5.0 / (10.0 * 1e4));
    EXPECT_FALSE(t.gate_overridden);
}

TEST(Convergence, Gate) {
    const LoadedModel m = load_model(std::string(MFGLIQ_MODELS_DIR) + "/tree_eta.json");
    EXPECT_THROW(convergence_experiment(m.spec), GateViolation);
    ConvergenceOptions o;
    o.override_gate = true;
    EXPECT_THROW(convergence_experiment(m.spec, o), UnsupportedBackend);
    o = {};
    o.n_list = {10.0, 5.0};
    EXPECT_THROW(convergence_experiment(ModelSpec::constant(1, 1, 0, 5, 5), o), InvalidArgument);
}

TEST(Convergence, LogLogSlope) {
    const std::vector<double> x = {1.0, 10.0, 100.0};
    EXPECT_NEAR(loglog_slope(x, {3.0, 0.3, 0.03}), -1.0, 1e-12);
    EXPECT_NEAR(loglog_slope(x, {1.0, std::sqrt(10.0), 10.0}), 0.5, 1e-12);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), InvalidArgument);
}
