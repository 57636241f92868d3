// SPDX-License-Identifier: MIT
//
// Equilibrium synthesis from Riccati inputs.
//
// Every path here lives on the extended grid (grid nodes followed by T).
// With S = exp(-int_0^t A/(2 eta)) and Yf = A S from the Riccati solution,
//
//     B_t  = S_t^{-1} int_t^T kappa_s mu_s S_s ds
//     X_t  = S_t (x - int_0^t B / (2 eta S))
//     xi_t = (Yf_t (x - int_0^t B / (2 eta S)) + B_t) / (2 eta_t)
//
// so A is never multiplied by X near T, where A blows up.
#pragma once

#include "mfgliq/error.hpp"
#include "mfgliq/model.hpp"
#include "mfgliq/process.hpp"
#include "mfgliq/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace mfgliq {

inline std::vector<double> sample(const CoefficientProcess& c, const std::vector<double>& t) {
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = c.at(t[i]);
    return v;
}

// Dispatch over the deterministic backends.
inline RiccatiSolution solve_riccati(const ModelSpec& spec, const TimeGrid& grid, bool include_kappa,
                                     RiccatiBackend backend = RiccatiBackend::InverseODE, int substeps = 1) {
    switch (backend) {
    case RiccatiBackend::ClosedForm: return solve_closed_form(spec, grid, include_kappa);
    case RiccatiBackend::InverseODE: return solve_inverse_ode(spec, grid, include_kappa, substeps);
    case RiccatiBackend::PenalizedLadder:
    case RiccatiBackend::TreeInduction: break;
    }
    throw UnsupportedBackend(std::string("equilibrium: backend '") + to_string(backend) +
                             "' does not produce a singular grid solution");
}

// (1/F_t) int_t^T g ds with g = w F given directly; zero at T.
inline std::vector<double> discounted_tail(const std::vector<double>& t, const std::vector<double>& F,
                                           const std::vector<double>& g) {
    std::vector<double> out = quad::cumulative_from_end(t, g);
    for (std::size_t k = 0; k + 1 < out.size(); ++k) out[k] = F[k] > 0.0 ? out[k] / F[k] : 0.0;
    out.back() = 0.0;
    return out;
}

// B_t = E[int_t^T kappa mu exp(-int_t^s A/(2 eta)) ds | F_t].
inline ProcessPath solve_player_B(const ModelSpec& spec, const RiccatiSolution& A, const ProcessPath& mu) {
    if (A.tree) throw UnsupportedBackend("player B: tree backend not supported; use the aggregate route");
    require_same_grid(A.state_factor, mu, "player B");
    const auto& t = mu.times;
    if (spec.kappa.is_zero()) return ProcessPath::constant(t, 0.0);
    const std::vector<double> kap = sample(spec.kappa, t);
    std::vector<double> g(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) g[k] = kap[k] * mu[k] * A.state_factor[k];
    return {t, discounted_tail(t, A.state_factor.values, g)};
}

struct StateAndRate {
    ProcessPath X;
    ProcessPath xi;
    ProcessPath Y;
};

// Optimal state, rate and adjoint from node `start` with position x there.
inline StateAndRate synthesize_state_and_rate(const ModelSpec& spec, const RiccatiSolution& A, const ProcessPath& B,
                                              double x, std::size_t start = 0) {
    require_same_grid(A.state_factor, B, "synthesis");
    const auto& t = B.times;
    const std::size_t n = t.size();
    if (start + 1 >= n) throw InvalidArgument("synthesis: start must be before T");
    const auto& S = A.state_factor;
    const auto& Yf = A.adjoint_factor;
    const std::vector<double> eta = sample(spec.eta, t);

    std::vector<double> g(n, 0.0);
    for (std::size_t k = start; k < n; ++k)
        if (S[k] > 0.0) g[k] = B[k] / (2.0 * eta[k] * S[k]);
    if (!(S[n - 1] > 0.0)) {
        // 0/0 at T: continue the cubic through the last four grid nodes.
        const std::size_t m = std::min<std::size_t>(4, n - 1 - start);
        const std::size_t first = n - 1 - m;
        g[n - 1] = m >= 2 ? quad::detail::lagrange(std::span(t).subspan(first, m), std::span(g).subspan(first, m), t[n - 1])
                          : g[n - 2];
    }
    const std::span<const double> ts(t.data() + start, n - start), gs(g.data() + start, n - start);
    const std::vector<double> cum = quad::cumulative(ts, gs);

    StateAndRate out;
    std::vector<double> X(n, 0.0), xi(n, 0.0), Y(n, 0.0);
    const double x_scaled = x / S[start];
    for (std::size_t k = start; k < n; ++k) {
        const double bracket = x_scaled - cum[k - start];
        X[k] = S[k] * bracket;
        Y[k] = Yf[k] * bracket + B[k];
        xi[k] = Y[k] / (2.0 * eta[k]);
    }
    out.X = {t, std::move(X)};
    out.xi = {t, std::move(xi)};
    out.Y = {t, std::move(Y)};
    return out;
}

// int_{t_start}^T (kappa mu X + eta xi^2 + lambda X^2) dt + n X_T^2.
inline double direct_cost(const ModelSpec& spec, const ProcessPath& mu, const ProcessPath& X, const ProcessPath& xi,
                          double penalty = std::numeric_limits<double>::infinity(), std::size_t start = 0) {
    require_same_grid(X, xi, "direct cost");
    require_same_grid(X, mu, "direct cost");
    const auto& t = X.times;
    const std::size_t n = t.size();
    std::vector<double> f(n - start);
    for (std::size_t k = start; k < n; ++k) {
        const double kap = spec.kappa.at(t[k]), eta = spec.eta.at(t[k]), lam = spec.lambda.at(t[k]);
        f[k - start] = kap * mu[k] * X[k] + eta * xi[k] * xi[k] + lam * X[k] * X[k];
    }
    double c = quad::integral(std::span(t.data() + start, n - start), f);
    if (std::isfinite(penalty)) c += penalty * X.back() * X.back();
    return c;
}

// V(t, x) = A_t x^2 / 2 + B_t x / 2 + int_t^T kappa X xi / 2, t = grid node `start`.
inline double value_function(const ModelSpec& spec, const RiccatiSolution& A, const ProcessPath& B, std::size_t start,
                             double x) {
    if (start + 1 >= A.A.size()) throw InvalidArgument("value function: t must be < T (V(T, x) = inf for x != 0)");
    const StateAndRate sr = synthesize_state_and_rate(spec, A, B, x, start);
    const auto& t = B.times;
    const std::size_t n = t.size();
    std::vector<double> f(n - start);
    for (std::size_t k = start; k < n; ++k) f[k - start] = spec.kappa.at(t[k]) * sr.X[k] * sr.xi[k];
    return 0.5 * A.A[start] * x * x + 0.5 * B[start] * x + 0.5 * quad::integral(std::span(t.data() + start, n - start), f);
}

// Aggregate reduction: D with kappa~ (= kappa for common-noise kappa),
// X~ = x exp(-int D/(2 eta)) and
// B~_t = int_t^T (kappa~ A X~ / (2 eta)) exp(-int_t^s (A - kappa~)/(2 eta)) ds.
struct AggregateReduction {
    RiccatiSolution D;
    ProcessPath X_tilde;
    ProcessPath B_tilde;
    ProcessPath mu;  // (A X~ + B~)/(2 eta) = D X~ / (2 eta)
};

inline AggregateReduction solve_aggregate(const ModelSpec& spec, const TimeGrid& grid, const RiccatiSolution& A,
                                          RiccatiBackend backend = RiccatiBackend::InverseODE, int substeps = 1) {
    AggregateReduction agg;
    agg.D = solve_riccati(spec, grid, true, backend, substeps);
    require_same_grid(agg.D.state_factor, A.state_factor, "aggregate");
    const auto& t = agg.D.A.times;
    const std::size_t n = t.size();
    const double x = spec.x0;
    const std::vector<double> eta = sample(spec.eta, t), kap = sample(spec.kappa, t);

    std::vector<double> Xt(n), mu(n);
    for (std::size_t k = 0; k < n; ++k) {
        Xt[k] = x * agg.D.state_factor[k];
        mu[k] = x * agg.D.adjoint_factor[k] / (2.0 * eta[k]);
    }
    // E_t = exp(int_0^t kappa/(2 eta)), F = S_A E.
    std::vector<double> rate(n);
    for (std::size_t k = 0; k < n; ++k) rate[k] = kap[k] / (2.0 * eta[k]);
    const std::vector<double> logE = quad::cumulative(t, rate);
    std::vector<double> F(n), g(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double E = std::exp(logE[k]);
        F[k] = A.state_factor[k] * E;
        g[k] = kap[k] * A.adjoint_factor[k] * Xt[k] * E / (2.0 * eta[k]);
    }
    agg.X_tilde = {t, std::move(Xt)};
    agg.B_tilde = {t, discounted_tail(t, F, g)};
    agg.mu = {t, std::move(mu)};
    return agg;
}

struct EquilibriumSolution {
    RiccatiSolution riccati;  // kappa-free A
    AggregateReduction aggregate;
    ProcessPath A, B, X_star, xi_star, mu_star, Y;
    double value_at_0 = 0.0;
    double consistency_residual = 0.0;  // ||mu* - E[xi* | F0]||
    double source_consistency = 0.0;    // ||D X~/(2 eta) - xi*||, the aggregate field against the synthesized rate
    double liquidation_gap = 0.0;       // |X*(T - eps)|

    [[nodiscard]] std::size_t grid_nodes() const noexcept { return riccati.grid_nodes(); }
};

struct EquilibriumOptions {
    RiccatiBackend backend = RiccatiBackend::InverseODE;
    int substeps = 1;
};

// Deterministic / common-information equilibrium: mu* from the aggregate
// reduction, B from the player's linear equation against mu*, then X*, xi*.
inline EquilibriumSolution solve_equilibrium(const ModelSpec& spec, const TimeGrid& grid, EquilibriumOptions opt = {}) {
    if (!spec.all_deterministic())
        throw UnsupportedBackend("equilibrium on a grid needs deterministic coefficients; use solve_tree_equilibrium");
    EquilibriumSolution sol;
    sol.riccati = solve_riccati(spec, grid, false, opt.backend, opt.substeps);
    sol.aggregate = solve_aggregate(spec, grid, sol.riccati, opt.backend, opt.substeps);
    const ProcessPath& source = sol.aggregate.mu;
    sol.A = sol.riccati.A;
    sol.B = solve_player_B(spec, sol.riccati, source);
    const StateAndRate sr = synthesize_state_and_rate(spec, sol.riccati, sol.B, spec.x0);
    sol.X_star = sr.X;
    sol.xi_star = sr.xi;
    sol.Y = sr.Y;
    sol.mu_star = sr.xi;  // E[xi* | F0] = xi* for common-noise-only data
    sol.consistency_residual = l2_distance(sol.mu_star, sol.xi_star);
    sol.source_consistency = l2_distance(source, sol.xi_star);
    sol.liquidation_gap = std::fabs(sol.X_star[sol.grid_nodes() - 1]);
    sol.value_at_0 = value_function(spec, sol.riccati, sol.B, 0, spec.x0);
    return sol;
}

inline double value_function(const ModelSpec& spec, const EquilibriumSolution& sol, double t, double x) {
    const auto& times = sol.A.times;
    if (!(t < spec.horizon)) throw InvalidArgument("value function: t must be < T (V(T, x) = inf for x != 0)");
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end() || std::fabs(*it - t) > 1e-12 * spec.horizon)
        throw InvalidArgument("value function: t must be a grid node");
    return value_function(spec, sol.riccati, sol.B, static_cast<std::size_t>(it - times.begin()), x);
}

inline double consistency_residual(const EquilibriumSolution& sol) { return l2_distance(sol.mu_star, sol.xi_star); }

// Cost of a candidate rate xi against a frozen field mu, with X = x - int xi.
inline double cost_of_rate(const ModelSpec& spec, const ProcessPath& mu, const ProcessPath& xi) {
    const std::vector<double> c = quad::cumulative(xi.times, xi.values);
    std::vector<double> X(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) X[k] = spec.x0 - c[k];
    return direct_cost(spec, mu, ProcessPath{xi.times, std::move(X)}, xi);
}

struct PerturbationResult {
    int mode = 0;
    double delta = 0.0;
    double cost = 0.0;
    double excess = 0.0;  // cost - equilibrium cost
};

// Perturbations xi* + delta sin(2 m pi t / T), m = 1..count, each with
// zero integral, priced against the fixed mu*. Amplitudes are drawn from a
// seeded generator in [-amplitude, amplitude].
inline std::vector<PerturbationResult> optimality_certificate(const ModelSpec& spec, const EquilibriumSolution& sol,
                                                              int count = 20, double amplitude = 0.2,
                                                              std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.1, 1.0);
    const double base = cost_of_rate(spec, sol.mu_star, sol.xi_star);
    std::vector<PerturbationResult> out;
    const auto& t = sol.xi_star.times;
    for (int m = 1; m <= count; ++m) {
        const double delta = amplitude * U(rng) * ((rng() & 1U) ? 1.0 : -1.0);
        std::vector<double> v(t.size());
        for (std::size_t k = 0; k < t.size(); ++k)
            v[k] = sol.xi_star[k] + delta * std::sin(2.0 * m * std::numbers::pi * t[k] / spec.horizon);
        const double c = cost_of_rate(spec, sol.mu_star, ProcessPath{t, std::move(v)});
        out.push_back({m, delta, c, c - base});
    }
    return out;
}

// ============================================================================
// Tree equilibrium (common information, ratio form)
// ============================================================================
//
// On the tree only node-local ratios are Markov: D, A, B~/X~ = D - A and
// mu*/X~ = D/(2 eta). State moments are carried forward as conditional
// expectations given the node; the value comes from backward induction of
// E[int kappa D X~^2/(2 eta) | node] / X~^2 along the frozen step flows.

struct TreeEquilibrium {
    RiccatiSolution A;
    RiccatiSolution D;
    TreeProcess B_ratio;  // B~ / X~ = D - A
    TreeProcess probability;
    TreeProcess X_mean;   // E[X~ | node]
    TreeProcess xi_mean;  // E[xi* | node] = D E[X~ | node] / (2 eta)
    double value_at_0 = 0.0;
    double direct_cost = 0.0;
};

inline TreeEquilibrium solve_tree_equilibrium(const ModelSpec& spec, const CommonNoiseTree& tree, TreeOptions opt = {}) {
    TreeEquilibrium eq;
    opt.include_kappa = false;
    eq.A = solve_tree(spec, tree, opt);
    opt.include_kappa = true;
    eq.D = solve_tree(spec, tree, opt);
    const TreeRiccati& A = *eq.A.tree;
    const TreeRiccati& D = *eq.D.tree;
    const int K = tree.depth();
    const double x = spec.x0;

    eq.B_ratio = TreeProcess::zeros(tree);
    eq.probability = TreeProcess::zeros(tree);
    eq.X_mean = TreeProcess::zeros(tree);
    eq.xi_mean = TreeProcess::zeros(tree);
    TreeProcess m1 = TreeProcess::zeros(tree);
    eq.probability.values[0][0] = 1.0;
    m1.values[0][0] = x;
    for (int k = 0; k < K; ++k)
        for (int j = 0; j <= k; ++j) {
            const double p = 0.5 * eq.probability.values[k][j];
            const double m = 0.5 * m1.values[k][j] * D.discount.values[k][j];
            eq.probability.values[k + 1][j] += p;
            eq.probability.values[k + 1][j + 1] += p;
            m1.values[k + 1][j] += m;
            m1.values[k + 1][j + 1] += m;
        }
    for (int k = 0; k <= K; ++k)
        for (int j = 0; j <= k; ++j) {
            const TreeNode node = tree.node(k, j);
            eq.X_mean.values[k][j] = m1.values[k][j] / eq.probability.values[k][j];
            if (k < K) {
                eq.B_ratio.values[k][j] = D.A.values[k][j] - A.A.values[k][j];
                eq.xi_mean.values[k][j] = D.A.values[k][j] * eq.X_mean.values[k][j] / (2.0 * spec.eta.at(node));
            }
        }

    // Backward induction of q (kappa X xi term) and c (direct cost), both per unit X~^2.
    std::vector<double> q(static_cast<std::size_t>(K) + 1, 0.0), c(static_cast<std::size_t>(K) + 1, 0.0);
    for (int k = K - 1; k >= 0; --k) {
        std::vector<double> qk(static_cast<std::size_t>(k) + 1), ck(static_cast<std::size_t>(k) + 1);
        const double t0 = tree.time(k), t1 = tree.time(k + 1);
        for (int j = 0; j <= k; ++j) {
            const TreeNode node = tree.node(k, j);
            const double eta = spec.eta.at(node), lam = spec.lambda.at(node), kap = spec.kappa.at(node);
            const double cshift = kap / (2.0 * eta);
            const double mean = 0.5 * (D.A.values[k + 1][j] + D.A.values[k + 1][j + 1]);
            const double psi_bar = std::isinf(mean) ? 0.0 : 1.0 / mean;
            const detail::LinearStep s0 = detail::frozen_step(psi_bar, t1 - t0, 0.5 / eta, 2.0 * lam, cshift);
            auto weight = [&](double u, double& xu, double& yu) {
                const detail::LinearStep su = detail::frozen_step(psi_bar, t1 - u, 0.5 / eta, 2.0 * lam, cshift);
                const double r = std::exp(su.log_scale - s0.log_scale) / s0.x;
                xu = su.x * r;  // X(u) / X(t_k)
                yu = su.y * r;  // D(u) X(u) / X(t_k)
            };
            const double iq = quad::gauss_legendre(
                [&](double u) {
                    double xu, yu;
                    weight(u, xu, yu);
                    return kap / (2.0 * eta) * xu * yu;
                },
                t0, t1);
            const double ic = quad::gauss_legendre(
                [&](double u) {
                    double xu, yu;
                    weight(u, xu, yu);
                    return kap / (2.0 * eta) * xu * yu + yu * yu / (4.0 * eta) + lam * xu * xu;
                },
                t0, t1);
            const double d = D.discount.values[k][j];
            qk[j] = iq + d * d * 0.5 * (q[j] + q[j + 1]);
            ck[j] = ic + d * d * 0.5 * (c[j] + c[j + 1]);
        }
        std::copy(qk.begin(), qk.end(), q.begin());
        std::copy(ck.begin(), ck.end(), c.begin());
    }
    eq.value_at_0 = 0.5 * D.A.values[0][0] * x * x + 0.5 * q[0] * x * x;
    eq.direct_cost = c[0] * x * x;
    return eq;
}

}  // namespace mfgliq
