// SPDX-License-Identifier: MIT
//
// Equilibrium for the constant spec with kappa = 5, printed every 0.1.
#include "mfgliq/mfgliq.hpp"

#include <cstdio>

int main() {
    using namespace mfgliq;
    const ModelSpec spec = ModelSpec::constant(1.0, 1.0, 5.0, 5.0, 5.0);
    const TimeGrid grid = build_grid(spec.horizon, 1e-6, 1000, 1.005);
    const EquilibriumSolution sol = solve_equilibrium(spec, grid);

    std::printf("V(0, x) = %.10f\n", sol.value_at_0);
    std::printf("%6s %14s %14s\n", "t", "xi*", "X*");
    for (double t = 0.0; t < 0.95; t += 0.1) std::printf("%6.2f %14.10f %14.10f\n", t, sol.xi_star.at(t), sol.X_star.at(t));

    const EnvelopeReport env = check_envelopes(sol.riccati, spec);
    std::printf("envelope violations: %zu of %zu nodes\n", env.violations(), env.nodes_checked);
}
