// SPDX-License-Identifier: MIT
//
// Riccati equations with singular (A_T = +inf) or penalized (A_T = 2n)
// terminal value,
//
//     -dA = (2 lambda + c A - A^2 / (2 eta)) dt,    c = kappa / (2 eta) or 0.
//
// All deterministic backends work with the linear Hamiltonian system
//
//     dX/dt = -Y / (2 eta),    dY/dt = -2 lambda X - c Y,
//
// integrated backward from (X, Y)_T = (0, 1) (singular) or (1, 2n)
// (penalized). Then psi = X / Y = 1/A solves the regular equation
// dpsi/dt = 2 lambda psi^2 + c psi - 1/(2 eta) with psi_T = 0, and the
// discount exp(-int_r^s A / (2 eta)) is X_s / X_r, so no quadrature of the
// singular integrand is ever taken.
#pragma once

#include "mfgliq/error.hpp"
#include "mfgliq/model.hpp"
#include "mfgliq/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mfgliq {

enum class RiccatiBackend { ClosedForm, InverseODE, PenalizedLadder, TreeInduction };

inline const char* to_string(RiccatiBackend b) {
    switch (b) {
    case RiccatiBackend::ClosedForm: return "closed_form";
    case RiccatiBackend::InverseODE: return "inverse_ode";
    case RiccatiBackend::PenalizedLadder: return "penalized";
    case RiccatiBackend::TreeInduction: return "tree";
    }
    return "?";
}

// One-step kernel for backward stepping of the linear system.
enum class StepKernel {
    RungeKutta4,   // classical RK4 with coefficients sampled inside the step
    FrozenExact,   // exact flow with coefficients frozen at the left node
};

struct LadderEntry {
    double n = 0.0;
    TreeProcess A;
    double increment = 0.0;  // sup |A^n - A^{n_prev}| over checked nodes
};

struct TreeRiccati {
    CommonNoiseTree tree;
    TreeProcess A;         // steps 0..depth-1 finite; step depth holds the terminal value
    TreeProcess discount;  // exp(-int_{t_k}^{t_{k+1}} A/(2 eta)) along the step leaving the node
    std::vector<LadderEntry> ladder;
    std::vector<double> extrapolation_increments;
    double last_increment = 0.0;
};

struct RiccatiSolution {
    RiccatiBackend backend = RiccatiBackend::InverseODE;
    bool include_kappa = false;
    // +inf for the singular equation, otherwise the penalty level n (A_T = 2n).
    double penalty = std::numeric_limits<double>::infinity();

    // Deterministic backends: all paths live on grid nodes followed by T.
    ProcessPath A;               // A(T) = +inf when singular
    ProcessPath psi;             // 1/A
    ProcessPath state_factor;    // exp(-int_0^t A/(2 eta)); 0 at T when singular
    ProcessPath adjoint_factor;  // A * state_factor, finite at T
    std::size_t envelope_violations = 0;

    std::optional<TreeRiccati> tree;

    [[nodiscard]] bool singular() const noexcept { return std::isinf(penalty); }
    [[nodiscard]] std::size_t grid_nodes() const noexcept { return A.size() == 0 ? 0 : A.size() - 1; }
    [[nodiscard]] double horizon() const { return A.times.back(); }

    // A restricted to grid nodes (drops T).
    [[nodiscard]] ProcessPath A_on_grid() const { return head(A, grid_nodes()); }

    // exp(-int_{t_i}^{t_j} A/(2 eta)) for extended-grid indices i <= j.
    [[nodiscard]] double discount(std::size_t i, std::size_t j) const {
        return state_factor[j] / state_factor[i];
    }
};

// ============================================================================
// Closed form for constant coefficients
// ============================================================================

struct ClosedFormRoots {
    double alpha_plus = 0.0;
    double alpha_minus = 0.0;
    double eta = 0.0;
};

inline ClosedFormRoots closed_form_roots(double kappa, double eta, double lambda) {
    const double root = std::sqrt(kappa * kappa + 16.0 * eta * lambda);
    return {(kappa + root) / (4.0 * eta), (kappa - root) / (4.0 * eta), eta};
}

// A at time-to-go tau, with the dominant exponential factored out.
inline double closed_form_A(const ClosedFormRoots& r, double tau) {
    if (tau <= 0.0) return std::numeric_limits<double>::infinity();
    const double s = r.alpha_plus - r.alpha_minus;
    const double e = std::exp(-s * tau);
    return 2.0 * r.eta * (r.alpha_plus - r.alpha_minus * e) / (-std::expm1(-s * tau));
}

// X*_t / x = (e^{a+ tau} - e^{a- tau}) / (e^{a+ T} - e^{a- T}).
inline double closed_form_state(const ClosedFormRoots& r, double T, double t) {
    const double tau = T - t, s = r.alpha_plus - r.alpha_minus;
    if (tau <= 0.0) return 0.0;
    return std::exp(-r.alpha_plus * t) * std::expm1(-s * tau) / std::expm1(-s * T);
}

// xi*_t / x = (a+ e^{a+ tau} - a- e^{a- tau}) / (e^{a+ T} - e^{a- T}).
inline double closed_form_rate(const ClosedFormRoots& r, double T, double t) {
    const double tau = T - t, s = r.alpha_plus - r.alpha_minus;
    return std::exp(-r.alpha_plus * t) * (r.alpha_plus - r.alpha_minus * std::exp(-s * tau)) /
           (-std::expm1(-s * T));
}

namespace detail {

inline void require_extended_grid(const TimeGrid& grid) {
    if (grid.nodes.size() < 2) throw InvalidArgument("riccati: grid needs at least two nodes");
    if (!(grid.nodes.back() < grid.horizon)) throw InvalidArgument("riccati: grid must stop before T");
}

// (X, Y) at the left end of a step when (X, Y) = (psi_next, 1) at the right
// end, returned as (x, y) * exp(-log_scale).
struct LinearStep {
    double x = 0.0;
    double y = 0.0;
    double log_scale = 0.0;
};

// Exact step for constant a = 1/(2 eta), b = 2 lambda, c over length h:
// z(t0) = exp(N h) z(t1), N = [[0, a], [b, c]].
inline LinearStep frozen_step(double psi_next, double h, double a, double b, double c) {
    const double p = 0.5 * c;
    const double s = std::sqrt(p * p + a * b);
    const double e2 = std::exp(-2.0 * s * h);
    const double ch = 0.5 * (1.0 + e2);                           // cosh(sh) e^{-sh}
    const double sh_over_s = s > 0.0 ? 0.5 * (-std::expm1(-2.0 * s * h)) / s : h;  // sinh(sh)/s e^{-sh}
    LinearStep r;
    r.x = ch * psi_next + sh_over_s * (a - p * psi_next);
    r.y = ch + sh_over_s * (b * psi_next + p);
    r.log_scale = (p + s) * h;
    return r;
}

struct LinearCoefficients {
    // a = 1/(2 eta), b = 2 lambda, c = kappa/(2 eta) (or 0)
    double a, b, c;
};

template <class CoefFn>
LinearStep rk4_step(double psi_next, double t0, double t1, CoefFn&& coef, int substeps) {
    double x = psi_next, y = 1.0;
    const double H = t1 - t0;
    auto rhs = [](const LinearCoefficients& k, double X, double Y, double& dX, double& dY) {
        dX = -k.a * Y;
        dY = -k.b * X - k.c * Y;
    };
    double log_scale = 0.0;
    for (int m = substeps; m > 0; --m) {
        const double tr = t0 + H * m / substeps;
        const double tl = t0 + H * (m - 1) / substeps;
        const double h = tr - tl;
        const LinearCoefficients kr = coef(tr), km = coef(tr - 0.5 * h), kl = coef(tl);
        double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
        rhs(kr, x, y, k1x, k1y);
        rhs(km, x - 0.5 * h * k1x, y - 0.5 * h * k1y, k2x, k2y);
        rhs(km, x - 0.5 * h * k2x, y - 0.5 * h * k2y, k3x, k3y);
        rhs(kl, x - h * k3x, y - h * k3y, k4x, k4y);
        x -= h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y -= h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        const double norm = std::max(std::fabs(x), std::fabs(y));
        if (norm > 0.0 && norm != 1.0) {
            log_scale += std::log(norm);
            x /= norm;
            y /= norm;
        }
    }
    return {x, y, log_scale};
}

inline LinearCoefficients coefficients_at(const ModelSpec& s, double t, bool include_kappa) {
    const double eta = s.eta.at(t);
    return {0.5 / eta, 2.0 * s.lambda.at(t), include_kappa ? s.kappa.at(t) / (2.0 * eta) : 0.0};
}

// Backward sweep over the extended grid from terminal psi.
inline RiccatiSolution sweep(const ModelSpec& spec, const TimeGrid& grid, double psi_terminal, bool include_kappa,
                             StepKernel kernel, int substeps) {
    require_extended_grid(grid);
    const std::vector<double> t = grid.extended();
    const std::size_t n = t.size();
    std::vector<double> psi(n), log_y(n);
    psi[n - 1] = psi_terminal;
    log_y[n - 1] = 0.0;
    for (std::size_t k = n - 1; k-- > 0;) {
        LinearStep st;
        if (kernel == StepKernel::FrozenExact) {
            const LinearCoefficients c = coefficients_at(spec, t[k], include_kappa);
            st = frozen_step(psi[k + 1], t[k + 1] - t[k], c.a, c.b, c.c);
        } else {
            st = rk4_step(psi[k + 1], t[k], t[k + 1],
                          [&](double tt) { return coefficients_at(spec, tt, include_kappa); }, substeps);
        }
        psi[k] = st.x / st.y;
        log_y[k] = log_y[k + 1] + std::log(st.y) + st.log_scale;
        if (!(psi[k] > 0.0) || !std::isfinite(psi[k]))
            throw IntegrationFailure("riccati: psi = 1/A left (0, inf) at t = " + format_g(t[k]) +
                                     "; refine the grid");
    }
    RiccatiSolution sol;
    sol.include_kappa = include_kappa;
    std::vector<double> A(n), S(n), Yf(n);
    for (std::size_t k = 0; k < n; ++k) {
        A[k] = psi[k] > 0.0 ? 1.0 / psi[k] : std::numeric_limits<double>::infinity();
        Yf[k] = std::exp(log_y[k] - log_y[0]) / psi[0];
        S[k] = psi[k] * Yf[k];
    }
    S[0] = 1.0;
    sol.A = {t, std::move(A)};
    sol.psi = {t, std::move(psi)};
    sol.state_factor = {t, std::move(S)};
    sol.adjoint_factor = {t, std::move(Yf)};
    return sol;
}

}  // namespace detail

// ============================================================================
// Deterministic backends
// ============================================================================

// A from the explicit constant-coefficient solution (kappa included when
// include_kappa, else the kappa-free equation).
inline RiccatiSolution solve_closed_form(const ModelSpec& spec, const TimeGrid& grid, bool include_kappa = true) {
    if (!spec.eta.is_constant() || !spec.lambda.is_constant() || (include_kappa && !spec.kappa.is_constant()))
        throw UnsupportedBackend("closed form needs constant kappa, eta, lambda");
    detail::require_extended_grid(grid);
    const double kap = include_kappa ? spec.kappa.constant_value() : 0.0;
    const ClosedFormRoots r = closed_form_roots(kap, spec.eta.constant_value(), spec.lambda.constant_value());
    const double T = grid.horizon;
    const std::vector<double> t = grid.extended();
    std::vector<double> A(t.size()), psi(t.size()), S(t.size()), Yf(t.size());
    const double s = r.alpha_plus - r.alpha_minus;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double tau = T - t[k];
        A[k] = closed_form_A(r, tau);
        psi[k] = tau > 0.0 ? -std::expm1(-s * tau) / (2.0 * r.eta * (r.alpha_plus - r.alpha_minus * std::exp(-s * tau)))
                           : 0.0;
        S[k] = closed_form_state(r, T, t[k]);
        Yf[k] = 2.0 * r.eta * std::exp(-r.alpha_plus * t[k]) * (r.alpha_plus - r.alpha_minus * std::exp(-s * tau)) /
                (-std::expm1(-s * T));
    }
    RiccatiSolution sol;
    sol.backend = RiccatiBackend::ClosedForm;
    sol.include_kappa = include_kappa;
    sol.A = {t, std::move(A)};
    sol.psi = {t, std::move(psi)};
    sol.state_factor = {t, std::move(S)};
    sol.adjoint_factor = {t, std::move(Yf)};
    return sol;
}

// Singular equation by RK4 on the linearized system, psi_T = 0.
inline RiccatiSolution solve_inverse_ode(const ModelSpec& spec, const TimeGrid& grid, bool include_kappa,
                                         int substeps = 1) {
    if (!spec.eta.is_deterministic() || !spec.lambda.is_deterministic() ||
        (include_kappa && !spec.kappa.is_deterministic()))
        throw UnsupportedBackend("inverse ODE needs deterministic coefficients");
    if (substeps < 1) throw InvalidArgument("riccati: substeps must be >= 1");
    RiccatiSolution sol = detail::sweep(spec, grid, 0.0, include_kappa, StepKernel::RungeKutta4, substeps);
    sol.backend = RiccatiBackend::InverseODE;
    return sol;
}

// Regular terminal value A_T = 2n.
inline RiccatiSolution solve_penalized(const ModelSpec& spec, const TimeGrid& grid, double n, bool include_kappa,
                                       StepKernel kernel = StepKernel::RungeKutta4, int substeps = 1) {
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("penalized riccati: n must be positive and finite");
    if (!spec.eta.is_deterministic() || !spec.lambda.is_deterministic() ||
        (include_kappa && !spec.kappa.is_deterministic()))
        throw UnsupportedBackend("penalized riccati on a grid needs deterministic coefficients; use solve_tree");
    RiccatiSolution sol = detail::sweep(spec, grid, 1.0 / (2.0 * n), include_kappa, kernel, substeps);
    sol.backend = RiccatiBackend::PenalizedLadder;
    sol.penalty = n;
    return sol;
}

// ============================================================================
// Tree backend
// ============================================================================

enum class KappaHandling {
    Direct,     // step the kappa-shifted equation with node-frozen coefficients
    Transform,  // solve for A e^{int_0^t kappa/(2 eta)} (kappa, eta deterministic) and map back
};

struct TreeOptions {
    std::vector<double> ladder;  // empty: 2^k sqrt(lambda_* eta_*), k = 1..12
    double tol = 1e-8;           // sup of |change| / max(1, |A|) between successive extrapolants
    bool include_kappa = false;
    KappaHandling kappa_handling = KappaHandling::Direct;
    int transform_substeps = 16;
    int extrapolation_depth = 6;  // number of ladder levels combined by Neville's scheme
};

inline std::vector<double> default_ladder(const CoefficientBounds& b, double n_max = 0.0) {
    std::vector<double> out;
    const double base = std::sqrt(b.lambda_star * b.eta_star);
    for (int k = 1; k <= 40; ++k) {
        const double n = std::ldexp(base, k);
        if (n_max > 0.0 ? n > n_max : k > 12) break;
        out.push_back(n);
    }
    return out;
}

namespace detail {

struct TreeStepper {
    const ModelSpec& spec;
    const CommonNoiseTree& tree;
    bool include_kappa;
    KappaHandling handling;
    int substeps;

    // exp(int_0^t kappa/(2 eta)) for the transform path
    [[nodiscard]] double transform_factor(double t) const {
        if (t <= 0.0) return 1.0;
        const int m = std::max(1, static_cast<int>(std::ceil(t / tree.dt())));
        double I = 0.0;
        for (int i = 0; i < m; ++i) {
            const double a = t * i / m, b = t * (i + 1) / m;
            I += quad::gauss_legendre([&](double u) { return spec.kappa.at(u) / (2.0 * spec.eta.at(u)); }, a, b);
        }
        return std::exp(I);
    }

    // Returns node psi from the children's mean A (passed as psi_bar = 1/mean).
    [[nodiscard]] LinearStep step(int k, int j, double psi_bar) const {
        const TreeNode node = tree.node(k, j);
        const double h = tree.time(k + 1) - node.t;
        const double eta = spec.eta.at(node);
        const double lambda = spec.lambda.at(node);
        if (!include_kappa || handling == KappaHandling::Direct) {
            const double c = include_kappa ? spec.kappa.at(node) / (2.0 * eta) : 0.0;
            return frozen_step(psi_bar, h, 0.5 / eta, 2.0 * lambda, c);
        }
        // Transformed equation: eta~ = eta e^{I}, lambda~ = lambda e^{I}, no drift term.
        // psi_bar arrives in A-units; convert to A~-units at t_{k+1} and back afterwards.
        const double f1 = transform_factor(tree.time(k + 1));
        const double f0 = transform_factor(node.t);
        const double t0 = node.t, t1 = tree.time(k + 1);
        auto coef = [&](double u) {
            const double I = std::log(f0) + quad::gauss_legendre(
                                                [&](double v) { return spec.kappa.at(v) / (2.0 * spec.eta.at(v)); }, t0, u);
            const double e = std::exp(I);
            return LinearCoefficients{0.5 / (spec.eta.at(u) * e), 2.0 * lambda * e, 0.0};
        };
        LinearStep st = rk4_step(psi_bar / f1, t0, t1, coef, substeps);
        // Back to A-units: x/y must be psi = psi~ f0, and psi_bar / x the step discount,
        // which the transform leaves unchanged (A / eta = A~ / eta~).
        st.x *= f1;
        st.y *= f1 / f0;
        return st;
    }
};

inline double neville_at_zero(const std::vector<double>& h, const std::vector<double>& y) {
    std::vector<double> p = y;
    const std::size_t m = h.size();
    for (std::size_t level = 1; level < m; ++level)
        for (std::size_t i = 0; i + level < m; ++i)
            p[i] = (h[i + level] * p[i] - h[i] * p[i + 1]) / (h[i + level] - h[i]);
    return p[0];
}

inline TreeProcess tree_sweep(const TreeStepper& st, double psi_terminal, TreeProcess* discount) {
    const CommonNoiseTree& tree = st.tree;
    TreeProcess A = TreeProcess::zeros(tree);
    const int K = tree.depth();
    const double A_T = psi_terminal > 0.0 ? 1.0 / psi_terminal : std::numeric_limits<double>::infinity();
    std::fill(A.values[K].begin(), A.values[K].end(), A_T);
    if (discount) *discount = TreeProcess::zeros(tree);
    for (int k = K - 1; k >= 0; --k) {
        for (int j = 0; j <= k; ++j) {
            const double mean = 0.5 * (A.values[k + 1][j] + A.values[k + 1][j + 1]);
            const double psi_bar = std::isinf(mean) ? 0.0 : 1.0 / mean;
            const LinearStep s = st.step(k, j, psi_bar);
            const double psi = s.x / s.y;
            if (!(psi > 0.0) || !std::isfinite(psi))
                throw IntegrationFailure("tree riccati: non-positive psi at node (" + std::to_string(k) + "," +
                                         std::to_string(j) + ")");
            A.values[k][j] = 1.0 / psi;
            if (discount) discount->values[k][j] = psi_bar / (s.x * std::exp(s.log_scale));
        }
    }
    if (discount) std::fill(discount->values[K].begin(), discount->values[K].end(), 0.0);
    return A;
}

}  // namespace detail

// Penalized tree induction for a single level n.
inline TreeProcess solve_penalized_tree(const ModelSpec& spec, const CommonNoiseTree& tree, double n,
                                        bool include_kappa = false, KappaHandling handling = KappaHandling::Direct,
                                        int transform_substeps = 16) {
    if (!(n > 0.0)) throw InvalidArgument("penalized riccati: n must be positive");
    if (handling == KappaHandling::Transform && include_kappa &&
        !(spec.kappa.is_deterministic() && spec.eta.is_deterministic()))
        throw UnsupportedBackend("tree: kappa transform needs deterministic kappa and eta");
    detail::TreeStepper st{spec, tree, include_kappa, handling, transform_substeps};
    return detail::tree_sweep(st, 1.0 / (2.0 * n), nullptr);
}

// Monotone penalized ladder A^n on the tree. The limit is taken by
// polynomial extrapolation of psi^n = 1/A^n in h = 1/(2n) to h = 0 over the
// last few ladder levels; iteration stops when successive extrapolants agree
// to `tol` (relative, see TreeOptions) over all nodes before T.
inline RiccatiSolution solve_tree(const ModelSpec& spec, const CommonNoiseTree& tree, TreeOptions opt = {}) {
    if (opt.ladder.empty()) opt.ladder = default_ladder(spec.bounds);
    for (std::size_t i = 1; i < opt.ladder.size(); ++i)
        if (!(opt.ladder[i] > opt.ladder[i - 1])) throw InvalidArgument("tree: n_ladder must be increasing");
    if (opt.ladder.front() <= 0.0) throw InvalidArgument("tree: ladder levels must be positive");
    if (std::fabs(tree.horizon() - spec.horizon) > 1e-12 * spec.horizon)
        throw InvalidArgument("tree: horizon does not match the model");
    if (opt.kappa_handling == KappaHandling::Transform && opt.include_kappa &&
        !(spec.kappa.is_deterministic() && spec.eta.is_deterministic()))
        throw UnsupportedBackend("tree: kappa transform needs deterministic kappa and eta");

    detail::TreeStepper st{spec, tree, opt.include_kappa, opt.kappa_handling, opt.transform_substeps};
    const int K = tree.depth();
    TreeRiccati out{tree, {}, {}, {}, {}, 0.0};
    std::vector<double> hs;
    std::vector<TreeProcess> psis;
    TreeProcess previous_extrapolant;
    bool have_previous = false;
    bool converged = false;
    double last = std::numeric_limits<double>::infinity();

    for (double n : opt.ladder) {
        LadderEntry entry;
        entry.n = n;
        entry.A = detail::tree_sweep(st, 1.0 / (2.0 * n), nullptr);
        if (!out.ladder.empty()) {
            double inc = 0.0;
            for (int k = 0; k < K; ++k)
                for (int j = 0; j <= k; ++j)
                    inc = std::max(inc, std::fabs(entry.A.values[k][j] - out.ladder.back().A.values[k][j]));
            entry.increment = inc;
        }
        TreeProcess psi = entry.A;
        for (auto& row : psi.values)
            for (double& v : row) v = 1.0 / v;
        hs.push_back(1.0 / (2.0 * n));
        psis.push_back(std::move(psi));
        out.ladder.push_back(std::move(entry));

        const std::size_t m = std::min<std::size_t>(hs.size(), static_cast<std::size_t>(opt.extrapolation_depth));
        const std::size_t first = hs.size() - m;
        std::vector<double> hw(hs.begin() + static_cast<std::ptrdiff_t>(first), hs.end());
        TreeProcess extrap = TreeProcess::zeros(tree);
        std::vector<double> yw(m);
        for (int k = 0; k < K; ++k)
            for (int j = 0; j <= k; ++j) {
                for (std::size_t i = 0; i < m; ++i) yw[i] = psis[first + i].values[k][j];
                extrap.values[k][j] = 1.0 / detail::neville_at_zero(hw, yw);
            }
        std::fill(extrap.values[K].begin(), extrap.values[K].end(), std::numeric_limits<double>::infinity());
        if (have_previous) {
            double inc = 0.0;
            for (int k = 0; k < K; ++k)
                for (int j = 0; j <= k; ++j)
                    inc = std::max(inc, std::fabs(extrap.values[k][j] - previous_extrapolant.values[k][j]) /
                                            std::max(1.0, std::fabs(extrap.values[k][j])));
            out.extrapolation_increments.push_back(inc);
            last = inc;
            if (inc <= opt.tol) {
                previous_extrapolant = std::move(extrap);
                converged = true;
                break;
            }
        }
        previous_extrapolant = std::move(extrap);
        have_previous = true;
    }
    out.last_increment = last;
    if (!converged)
        throw NotConverged("tree riccati: ladder exhausted at n = " + format_g(opt.ladder.back()) +
                               " with increment " + format_g(last),
                           last);

    // Re-derive node A and step discounts from the extrapolated children values.
    out.A = TreeProcess::zeros(tree);
    out.discount = TreeProcess::zeros(tree);
    std::fill(out.A.values[K].begin(), out.A.values[K].end(), std::numeric_limits<double>::infinity());
    for (int k = K - 1; k >= 0; --k)
        for (int j = 0; j <= k; ++j) {
            const double mean = 0.5 * (previous_extrapolant.values[k + 1][j] + previous_extrapolant.values[k + 1][j + 1]);
            const double psi_bar = std::isinf(mean) ? 0.0 : 1.0 / mean;
            const detail::LinearStep s = st.step(k, j, psi_bar);
            out.A.values[k][j] = previous_extrapolant.values[k][j];
            out.discount.values[k][j] = psi_bar / (s.x * std::exp(s.log_scale));
        }

    RiccatiSolution sol;
    sol.backend = RiccatiBackend::TreeInduction;
    sol.include_kappa = opt.include_kappa;
    sol.tree = std::move(out);
    return sol;
}

// Direct singular induction on the tree (terminal psi = 0). Used as the
// reference limit of the ladder.
inline RiccatiSolution solve_tree_singular(const ModelSpec& spec, const CommonNoiseTree& tree,
                                           bool include_kappa = false,
                                           KappaHandling handling = KappaHandling::Direct, int transform_substeps = 16) {
    detail::TreeStepper st{spec, tree, include_kappa, handling, transform_substeps};
    RiccatiSolution sol;
    sol.backend = RiccatiBackend::TreeInduction;
    sol.include_kappa = include_kappa;
    TreeRiccati tr{tree, {}, {}, {}, {}, 0.0};
    tr.A = detail::tree_sweep(st, 0.0, &tr.discount);
    sol.tree = std::move(tr);
    return sol;
}

// Sup-norm distance between two grid solutions over nodes t <= t_max.
inline double sup_distance(const ProcessPath& a, const ProcessPath& b, double t_max) {
    require_same_grid(a, b, "sup_distance");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.times[i] <= t_max) d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

// ============================================================================
// Envelopes
// ============================================================================

struct EnvelopeReport {
    std::size_t nodes_checked = 0;
    std::size_t lower_violations = 0;
    std::size_t upper_violations = 0;
    std::size_t chain_violations = 0;  // against the constant-envelope chain bounds
    double worst_lower_margin = std::numeric_limits<double>::infinity();  // min (A - L) / L
    double worst_upper_margin = std::numeric_limits<double>::infinity();  // min (U - A) / U

    std::size_t discount_pairs_checked = 0;
    std::size_t discount_violations = 0;
    double worst_discount_margin = std::numeric_limits<double>::infinity();  // min bound - discount

    // Penalized solutions only: A^n <= Psi^n and (T - t + eta_*/n) A^n <= c.
    std::size_t comparison_violations = 0;
    double weighted_constant = 0.0;   // the constant c
    double weighted_sup = 0.0;        // max (T - t + eta_*/n) A^n

    ProcessPath lower;  // deterministic backends: bounds on grid nodes
    ProcessPath upper;  // tight upper bound (singular) or comparison bound (penalized)
    TreeProcess tree_lower;  // tree backend: the same bounds per node
    TreeProcess tree_upper;

    [[nodiscard]] std::size_t violations() const noexcept {
        return lower_violations + upper_violations + chain_violations + discount_violations + comparison_violations;
    }
};

// Relative slack below which a bound comparison is attributed to rounding.
inline constexpr double kEnvelopeRoundoff = 1e-10;

namespace detail {

// I(t) = int_0^t c, with c = kappa/(2 eta) or 0, on the extended grid and
// on each interval's Gauss points.
struct ShiftIntegral {
    std::vector<double> at_nodes;
};

inline double shift_rate(const ModelSpec& s, double t, bool include_kappa) {
    return include_kappa ? s.kappa.at(t) / (2.0 * s.eta.at(t)) : 0.0;
}

// Tight bounds on the deterministic grid:
//   L_t = 1 / ( e^{-(I_T - I_t)} / (2n) + int_t^T e^{-(I_s - I_t)} / (2 eta_s) ds )
//   U_t = (T - t)^{-2} int_t^T (2 eta_s + 2 (T - s)^2 lambda_s) e^{I_s - I_t} ds   (singular only)
//   Psi^n_t (kappa-free penalized)
struct DeterministicBounds {
    std::vector<double> lower, upper, comparison;
};

inline DeterministicBounds deterministic_bounds(const ModelSpec& s, const std::vector<double>& t, bool include_kappa,
                                                double penalty) {
    const std::size_t n = t.size();
    const double T = t.back();
    const bool singular = std::isinf(penalty);
    std::vector<double> I(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k)
        I[k + 1] = I[k] + quad::gauss_legendre([&](double u) { return shift_rate(s, u, include_kappa); }, t[k], t[k + 1]);
    auto I_at = [&](std::size_t k, double u) {
        return I[k] + quad::gauss_legendre([&](double v) { return shift_rate(s, v, include_kappa); }, t[k], u);
    };
    // Cumulative from T of e^{-I_s}/(2 eta_s) and of (2 eta + 2 (T-s)^2 lambda) e^{I_s}.
    std::vector<double> J(n, 0.0), R(n, 0.0), P(n, 0.0);
    const double eta_star = s.bounds.eta_star;
    const double shift = singular ? 0.0 : eta_star / penalty;
    for (std::size_t k = n - 1; k-- > 0;) {
        J[k] = J[k + 1] + quad::gauss_legendre(
                              [&](double u) { return std::exp(-I_at(k, u)) / (2.0 * s.eta.at(u)); }, t[k], t[k + 1]);
        R[k] = R[k + 1] + quad::gauss_legendre(
                              [&](double u) {
                                  return (2.0 * s.eta.at(u) + 2.0 * (T - u) * (T - u) * s.lambda.at(u)) *
                                         std::exp(I_at(k, u));
                              },
                              t[k], t[k + 1]);
        if (!singular)
            P[k] = P[k + 1] + quad::gauss_legendre(
                                  [&](double u) {
                                      const double w = T - u + shift;
                                      return 2.0 * s.eta.at(u) + 2.0 * w * w * s.lambda.at(u);
                                  },
                                  t[k], t[k + 1]);
    }
    DeterministicBounds b;
    b.lower.resize(n);
    b.upper.resize(n);
    b.comparison.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double tau = T - t[k];
        const double terminal = singular ? 0.0 : std::exp(-(I[n - 1] - I[k])) / (2.0 * penalty);
        const double denom = terminal + std::exp(I[k]) * J[k];
        b.lower[k] = denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
        b.upper[k] = tau > 0.0 ? std::exp(-I[k]) * R[k] / (tau * tau) : std::numeric_limits<double>::infinity();
        if (!singular) {
            const double w = tau + shift;
            b.comparison[k] = (2.0 * eta_star * eta_star / penalty + P[k]) / (w * w);
        }
    }
    return b;
}

}  // namespace detail

// Evaluates the two-sided bounds at every grid node before T, the constant
// chain bounds, the discount bound for every pair r <= s of grid nodes, and
// for penalized solutions the comparison bound and weighted constant.
inline EnvelopeReport check_envelopes(const RiccatiSolution& sol, const ModelSpec& spec) {
    EnvelopeReport rep;
    const auto& b = spec.bounds;
    const double alpha = b.alpha();
    const double T = spec.horizon;
    const bool singular = sol.singular();
    const double kappa_chain = sol.include_kappa ? b.kappa_max : 0.0;
    const double chain_factor = std::exp(kappa_chain * T / (2.0 * b.eta_star)) * (b.eta_max + b.lambda_max * T * T / 3.0);
    const double weight_shift = singular ? 0.0 : b.eta_star / sol.penalty;

    auto check_lower = [&](double A, double L) {
        const double margin = (A - L) / L;
        rep.worst_lower_margin = std::min(rep.worst_lower_margin, margin);
        if (margin < -kEnvelopeRoundoff) ++rep.lower_violations;
    };
    auto check_upper = [&](double A, double U) {
        if (std::isinf(U)) return;
        const double margin = (U - A) / U;
        rep.worst_upper_margin = std::min(rep.worst_upper_margin, margin);
        if (margin < -kEnvelopeRoundoff) ++rep.upper_violations;
    };
    auto check_chain = [&](double A, double tau) {
        if (!singular) return;
        const double lo = 2.0 * b.eta_star / tau;
        const double hi = 2.0 / tau * chain_factor;
        if (A < lo * (1.0 - kEnvelopeRoundoff) || A > hi * (1.0 + kEnvelopeRoundoff)) ++rep.chain_violations;
    };
    auto check_comparison = [&](double A, double Psi, double tau) {
        if (singular || sol.include_kappa) return;
        if (A > Psi * (1.0 + kEnvelopeRoundoff)) ++rep.comparison_violations;
        rep.weighted_sup = std::max(rep.weighted_sup, (tau + weight_shift) * A);
    };

    if (!sol.singular() && !sol.include_kappa) {
        const double n = sol.penalty;
        const double w = T + b.eta_star / n;
        rep.weighted_constant = 2.0 * b.eta_star + 2.0 * b.eta_max + 2.0 * b.lambda_max * w * w;
    }

    if (sol.tree) {
        const TreeRiccati& tr = *sol.tree;
        const CommonNoiseTree& tree = tr.tree;
        const int K = tree.depth();
        // Backward induction of the bound functionals with node-frozen coefficients.
        TreeProcess J = TreeProcess::zeros(tree), R = TreeProcess::zeros(tree), P = TreeProcess::zeros(tree);
        const double term = singular ? 0.0 : 1.0 / (2.0 * sol.penalty);
        std::fill(J.values[K].begin(), J.values[K].end(), term);
        for (int k = K - 1; k >= 0; --k) {
            const double t0 = tree.time(k), h = tree.time(k + 1) - t0;
            for (int j = 0; j <= k; ++j) {
                const TreeNode node = tree.node(k, j);
                const double eta = spec.eta.at(node), lam = spec.lambda.at(node);
                const double c = sol.include_kappa ? spec.kappa.at(node) / (2.0 * eta) : 0.0;
                const double Jn = 0.5 * (J.values[k + 1][j] + J.values[k + 1][j + 1]);
                const double Rn = 0.5 * (R.values[k + 1][j] + R.values[k + 1][j + 1]);
                const double Pn = 0.5 * (P.values[k + 1][j] + P.values[k + 1][j + 1]);
                J.values[k][j] = quad::gauss_legendre([&](double u) { return std::exp(-c * u) / (2.0 * eta); }, 0.0, h) +
                                 std::exp(-c * h) * Jn;
                R.values[k][j] = quad::gauss_legendre(
                                     [&](double u) {
                                         const double r = T - t0 - u;
                                         return (2.0 * eta + 2.0 * r * r * lam) * std::exp(c * u);
                                     },
                                     0.0, h) +
                                 std::exp(c * h) * Rn;
                P.values[k][j] = quad::gauss_legendre(
                                     [&](double u) {
                                         const double r = T - t0 - u + weight_shift;
                                         return 2.0 * eta + 2.0 * r * r * lam;
                                     },
                                     0.0, h) +
                                 Pn;
            }
        }
        rep.tree_lower = TreeProcess::zeros(tree);
        rep.tree_upper = TreeProcess::zeros(tree);
        for (int k = 0; k < K; ++k) {
            const double tau = T - tree.time(k);
            const double bound = std::pow((T - tree.time(k + 1) + weight_shift) / (tau + weight_shift), alpha);
            for (int j = 0; j <= k; ++j) {
                const double A = tr.A.values[k][j];
                ++rep.nodes_checked;
                rep.tree_lower.values[k][j] = 1.0 / J.values[k][j];
                check_lower(A, rep.tree_lower.values[k][j]);
                if (singular) {
                    rep.tree_upper.values[k][j] = R.values[k][j] / (tau * tau);
                    check_upper(A, rep.tree_upper.values[k][j]);
                }
                check_chain(A, tau);
                if (!singular) {
                    const double w = tau + weight_shift;
                    rep.tree_upper.values[k][j] = (2.0 * b.eta_star * b.eta_star / sol.penalty + P.values[k][j]) / (w * w);
                    check_comparison(A, rep.tree_upper.values[k][j], tau);
                }
                if (!tr.discount.values.empty()) {
                    // per-step discount along the edge leaving the node
                    const double d = tr.discount.values[k][j];
                    ++rep.discount_pairs_checked;
                    rep.worst_discount_margin = std::min(rep.worst_discount_margin, bound - d);
                    if (d > bound * (1.0 + kEnvelopeRoundoff) + 1e-300) ++rep.discount_violations;
                }
            }
        }
        return rep;
    }

    const std::vector<double>& t = sol.A.times;
    const std::size_t n_grid = sol.grid_nodes();
    const auto bounds = detail::deterministic_bounds(spec, t, sol.include_kappa, sol.penalty);
    rep.lower = {std::vector<double>(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n_grid)),
                 std::vector<double>(bounds.lower.begin(), bounds.lower.begin() + static_cast<std::ptrdiff_t>(n_grid))};
    rep.upper = {rep.lower.times,
                 singular ? std::vector<double>(bounds.upper.begin(), bounds.upper.begin() + static_cast<std::ptrdiff_t>(n_grid))
                          : std::vector<double>(bounds.comparison.begin(),
                                                bounds.comparison.begin() + static_cast<std::ptrdiff_t>(n_grid))};
    for (std::size_t k = 0; k < n_grid; ++k) {
        const double A = sol.A[k];
        const double tau = T - t[k];
        ++rep.nodes_checked;
        check_lower(A, bounds.lower[k]);
        if (singular) check_upper(A, bounds.upper[k]);
        check_chain(A, tau);
        if (!singular) check_comparison(A, bounds.comparison[k], tau);
    }
    // Discount bound over all pairs of grid nodes.
    const auto& S = sol.state_factor;
    for (std::size_t r = 0; r < n_grid; ++r) {
        const double wr = T - t[r] + weight_shift;
        for (std::size_t s = r; s < n_grid; ++s) {
            const double bound = std::pow((T - t[s] + weight_shift) / wr, alpha);
            const double d = S[s] / S[r];
            ++rep.discount_pairs_checked;
            rep.worst_discount_margin = std::min(rep.worst_discount_margin, bound - d);
            if (d > bound * (1.0 + kEnvelopeRoundoff)) ++rep.discount_violations;
        }
    }
    return rep;
}

}  // namespace mfgliq
