// SPDX-License-Identifier: MIT
//
// Penalized MFG: the terminal constraint X_T = 0 is replaced by the cost
// n X_T^2, so A^n_T = 2n and every path is finite at T.
#pragma once

#include "mfgliq/equilibrium.hpp"
#include "mfgliq/error.hpp"
#include "mfgliq/model.hpp"
#include "mfgliq/process.hpp"
#include "mfgliq/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mfgliq {

struct PenalizedEquilibrium {
    double n = 0.0;
    RiccatiSolution A_n;  // kappa-free, A_T = 2n
    RiccatiSolution D_n;  // kappa-shifted, D_T = 2n
    ProcessPath B_n, X_n, Y_n, xi_n, mu_n;
    double terminal_position = 0.0;  // X_n(T)
    double value_n = 0.0;            // direct cost including n X_T^2
    double value_formula = 0.0;      // A x^2/2 + B x/2 + int kappa X xi / 2
    double weighted_X = 0.0;         // sup |X_n| / (T - t + eta_*/n)^alpha
    double weighted_B = 0.0;         // sup |B_n| / (T - t + eta_*/n)^gamma
};

// Weight exponent for B: any 0 < gamma < min(alpha, 1/2) is admissible.
inline double weight_gamma(const CoefficientBounds& b) { return 0.5 * std::min(b.alpha(), 0.5); }

inline double weighted_sup(const ProcessPath& p, double T, double shift, double nu) {
    double m = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        m = std::max(m, std::fabs(p[k]) / std::pow(T - p.times[k] + shift, nu));
    return m;
}

inline PenalizedEquilibrium solve_penalized_mfg(const ModelSpec& spec, double n, const TimeGrid& grid,
                                                StepKernel kernel = StepKernel::RungeKutta4, int substeps = 1) {
    if (!(n > 0.0)) throw InvalidArgument("penalized MFG: n must be positive");
    if (!spec.all_deterministic()) throw UnsupportedBackend("penalized MFG: tree coefficients are not supported");
    PenalizedEquilibrium eq;
    eq.n = n;
    eq.A_n = solve_penalized(spec, grid, n, false, kernel, substeps);
    eq.D_n = solve_penalized(spec, grid, n, true, kernel, substeps);
    const auto& t = eq.A_n.A.times;
    const std::vector<double> eta = sample(spec.eta, t);
    std::vector<double> mu(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) mu[k] = spec.x0 * eq.D_n.adjoint_factor[k] / (2.0 * eta[k]);
    eq.mu_n = {t, std::move(mu)};
    eq.B_n = solve_player_B(spec, eq.A_n, eq.mu_n);
    const StateAndRate sr = synthesize_state_and_rate(spec, eq.A_n, eq.B_n, spec.x0);
    eq.X_n = sr.X;
    eq.Y_n = sr.Y;
    eq.xi_n = sr.xi;
    eq.terminal_position = eq.X_n.back();
    eq.value_n = direct_cost(spec, eq.mu_n, eq.X_n, eq.xi_n, n);
    eq.value_formula = value_function(spec, eq.A_n, eq.B_n, 0, spec.x0);
    const double shift = spec.bounds.eta_star / n;
    eq.weighted_X = weighted_sup(eq.X_n, spec.horizon, shift, spec.bounds.alpha());
    eq.weighted_B = weighted_sup(eq.B_n, spec.horizon, shift, weight_gamma(spec.bounds));
    return eq;
}

struct ConvergenceRow {
    double n = 0.0;
    double sup_A = 0.0;     // sup |A - A^n| over [0, T - window]
    double l2_X = 0.0;
    double l2_Y = 0.0;
    double l2_B = 0.0;
    double terminal = 0.0;  // |X^n_T|
    double terminal_energy = 0.0;  // n (X^n_T)^2
    double value_n = 0.0;
    double value_gap = 0.0;  // V - V_n
    double weighted_X = 0.0;
    double weighted_B = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double value = 0.0;          // V
    double epsilon_cut = 0.0;    // grid standoff actually used
    double sup_window = 0.0;     // A - A^n compared on [0, T - sup_window]
    double terminal_slope = 0.0; // log-log slope of |X^n_T| against n
    bool gate_overridden = false;
    std::string gate_reason;

    [[nodiscard]] bool sandwich() const {
        for (const auto& r : rows)
            if (r.value_n > value) return false;
        return true;
    }
    // Each column nonincreasing in n (strictly when `strict`).
    template <class F>
    [[nodiscard]] bool decreasing(F&& column, bool strict = false) const {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double a = column(rows[i - 1]), b = column(rows[i]);
            if (strict ? !(b < a) : !(b <= a)) return false;
        }
        return true;
    }
    [[nodiscard]] double max_weighted_X() const {
        double m = 0.0;
        for (const auto& r : rows) m = std::max(m, r.weighted_X);
        return m;
    }
    [[nodiscard]] double max_weighted_B() const {
        double m = 0.0;
        for (const auto& r : rows) m = std::max(m, r.weighted_B);
        return m;
    }
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope: need at least two points");
    double mx = 0.0, my = 0.0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / m;
        my += std::log(y[i]) / m;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

struct ConvergenceOptions {
    std::vector<double> n_list = {10.0, 100.0, 1000.0, 10000.0};
    int K = 1000;
    double ratio = 1.005;
    double epsilon_cut = 0.0;      // 0: 1e-6 T, then coupled to <= eta_*/(10 n_max)
    double sup_window = 0.1;       // fraction of T excluded from the sup |A - A^n| column
    bool override_gate = false;
};

inline TimeGrid convergence_grid(const ModelSpec& spec, const ConvergenceOptions& opt) {
    double eps = opt.epsilon_cut > 0.0 ? opt.epsilon_cut : 1e-6 * spec.horizon;
    const double n_max = *std::max_element(opt.n_list.begin(), opt.n_list.end());
    eps = std::min(eps, spec.bounds.eta_star / (10.0 * n_max));
    return build_grid(spec.horizon, eps, opt.K, opt.ratio);
}

inline ConvergenceTable convergence_experiment(const ModelSpec& spec, const ConvergenceOptions& opt = {}) {
    if (opt.n_list.empty()) throw InvalidArgument("convergence: empty n list");
    for (std::size_t i = 0; i < opt.n_list.size(); ++i) {
        if (!(opt.n_list[i] > 0.0)) throw InvalidArgument("convergence: n must be positive");
        if (i > 0 && !(opt.n_list[i] > opt.n_list[i - 1])) throw InvalidArgument("convergence: n list must increase");
    }
    ConvergenceTable table;
    const AssumptionCheck gate = check_assumption_app(spec);
    if (!gate.holds()) {
        if (!opt.override_gate)
            throw GateViolation("convergence: the discount assumption is not established for this spec "
                                "(tree-adapted eta); pass the override flag to run anyway");
        table.gate_overridden = true;
    }
    table.gate_reason = gate.reason;

    const TimeGrid grid = convergence_grid(spec, opt);
    table.epsilon_cut = grid.epsilon_cut;
    table.sup_window = opt.sup_window * spec.horizon;
    const EquilibriumSolution star = solve_equilibrium(spec, grid);
    table.value = star.value_at_0;
    const double t_max = spec.horizon - table.sup_window;

    std::vector<double> ns, terms;
    for (double n : opt.n_list) {
        const PenalizedEquilibrium pe = solve_penalized_mfg(spec, n, grid);
        ConvergenceRow r;
        r.n = n;
        r.sup_A = sup_distance(head(star.A, grid.size()), head(pe.A_n.A, grid.size()), t_max);
        r.l2_X = l2_distance(pe.X_n, star.X_star);
        r.l2_Y = l2_distance(pe.Y_n, star.Y);
        r.l2_B = l2_distance(pe.B_n, star.B);
        r.terminal = std::fabs(pe.terminal_position);
        r.terminal_energy = n * pe.terminal_position * pe.terminal_position;
        r.value_n = pe.value_n;
        r.value_gap = table.value - pe.value_n;
        r.weighted_X = pe.weighted_X;
        r.weighted_B = pe.weighted_B;
        table.rows.push_back(r);
        ns.push_back(n);
        terms.push_back(std::max(r.terminal, std::numeric_limits<double>::min()));
    }
    table.terminal_slope = ns.size() >= 2 ? loglog_slope(ns, terms) : 0.0;
    return table;
}

}  // namespace mfgliq
