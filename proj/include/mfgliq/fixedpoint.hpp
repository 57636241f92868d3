// SPDX-License-Identifier: MIT
//
// Damped Picard iteration on the mean field,
//
//     mu_{k+1} = (1 - d) mu_k + d E[xi_BR(mu_k) | F0],
//
// and a staged variant that ramps the coupling p = d, 2d, ..., 1 with an
// inner undamped loop at each stage against the field p mu + f.
#pragma once

#include "mfgliq/equilibrium.hpp"
#include "mfgliq/error.hpp"
#include "mfgliq/model.hpp"
#include "mfgliq/process.hpp"
#include "mfgliq/riccati.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mfgliq {

struct BestResponse {
    ProcessPath xi;
    ProcessPath X;
    ProcessPath B;
};

// Single-player constrained LQ problem against a frozen field mu; A is the
// kappa-free Riccati solution on the same extended grid.
inline BestResponse best_response(const ModelSpec& spec, const RiccatiSolution& A, const ProcessPath& mu) {
    BestResponse br;
    br.B = solve_player_B(spec, A, mu);
    StateAndRate sr = synthesize_state_and_rate(spec, A, br.B, spec.x0);
    br.xi = std::move(sr.xi);
    br.X = std::move(sr.X);
    return br;
}

struct IterationRecord {
    int k = 0;
    int stage = 0;          // staged mode: 1-based stage index; 0 otherwise
    double coupling = 1.0;  // p
    ProcessPath mu;         // mu_k
    double residual = 0.0;  // ||mu_{k+1} - mu_k||
    double ratio = std::nan("");
};

struct IterationTrace {
    std::vector<IterationRecord> iterates;
    double damping = 1.0;
    bool converged = false;
    ProcessPath limit;  // last iterate

    [[nodiscard]] double max_ratio() const {
        double m = 0.0;
        for (const auto& r : iterates)
            if (!std::isnan(r.ratio)) m = std::max(m, r.ratio);
        return m;
    }
    [[nodiscard]] double final_residual() const { return iterates.empty() ? 0.0 : iterates.back().residual; }
};

class FixedPointNotConverged : public NotConverged {
public:
    FixedPointNotConverged(const std::string& what, IterationTrace trace)
        : NotConverged(what, trace.final_residual()), trace_(std::move(trace)) {}
    [[nodiscard]] const IterationTrace& trace() const noexcept { return trace_; }

private:
    IterationTrace trace_;
};

struct FixedPointOptions {
    double damping = 1.0;
    double tol = 1e-10;
    int k_max = 200;
    bool staged = false;
    std::optional<ProcessPath> source;  // f, default 0
    bool require_gate = true;
};

namespace detail {

inline void check_fixedpoint_inputs(const ModelSpec& spec, const FixedPointOptions& opt) {
    if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw InvalidArgument("fixedpoint: damping must lie in (0, 1]");
    if (!(opt.tol > 0.0)) throw InvalidArgument("fixedpoint: tol must be positive");
    if (opt.k_max < 1) throw InvalidArgument("fixedpoint: k_max must be >= 1");
    if (opt.require_gate) {
        const ValidationReport rep = validate_weak_interaction(spec);
        if (!rep.pass)
            throw GateViolation("fixedpoint: weak-interaction condition fails (margin " + format_g(rep.margin) + ")");
    }
}

inline ProcessPath field_for(const ProcessPath& mu, double p, const std::optional<ProcessPath>& f) {
    ProcessPath out = mu;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p * mu[i] + (f ? (*f)[i] : 0.0);
    return out;
}

}  // namespace detail

inline IterationTrace iterate(const ModelSpec& spec, const RiccatiSolution& A, const ProcessPath& mu0,
                              const FixedPointOptions& opt = {}) {
    detail::check_fixedpoint_inputs(spec, opt);
    require_same_grid(A.state_factor, mu0, "fixedpoint");
    if (opt.source) require_same_grid(mu0, *opt.source, "fixedpoint source");

    IterationTrace trace;
    trace.damping = opt.damping;
    ProcessPath mu = mu0;
    double previous = std::nan("");
    int k = 0;

    auto step = [&](double p, double damping, int stage) -> bool {
        const BestResponse br = best_response(spec, A, detail::field_for(mu, p, opt.source));
        ProcessPath next = mu;
        for (std::size_t i = 0; i < next.size(); ++i) next[i] = (1.0 - damping) * mu[i] + damping * br.xi[i];
        IterationRecord rec;
        rec.k = k++;
        rec.stage = stage;
        rec.coupling = p;
        rec.mu = mu;
        rec.residual = l2_distance(next, mu);
        rec.ratio = (std::isnan(previous) || previous == 0.0) ? std::nan("") : rec.residual / previous;
        previous = rec.residual;
        trace.iterates.push_back(std::move(rec));
        mu = std::move(next);
        return trace.iterates.back().residual <= opt.tol;
    };

    bool done = false;
    if (!opt.staged) {
        while (!done && k < opt.k_max) done = step(1.0, opt.damping, 0);
    } else {
        const int stages = static_cast<int>(std::ceil(1.0 / opt.damping - 1e-12));
        for (int s = 1; s <= stages; ++s) {
            const double p = std::min(1.0, s * opt.damping);
            previous = std::nan("");
            done = false;
            while (!done && k < opt.k_max) done = step(p, 1.0, s);
            if (!done) break;
        }
    }
    trace.converged = done;
    trace.limit = mu;
    if (!done) {
        std::string msg = "fixedpoint: no convergence after " + std::to_string(k) + " iterations (residual " +
                          format_g(trace.final_residual()) + ")";
        throw FixedPointNotConverged(std::move(msg), std::move(trace));
    }
    return trace;
}

// Full equilibrium from the fixed-point limit.
inline EquilibriumSolution equilibrium_from_field(const ModelSpec& spec, const RiccatiSolution& A, const ProcessPath& mu) {
    EquilibriumSolution sol;
    sol.riccati = A;
    sol.A = A.A;
    sol.B = solve_player_B(spec, A, mu);
    const StateAndRate sr = synthesize_state_and_rate(spec, A, sol.B, spec.x0);
    sol.X_star = sr.X;
    sol.xi_star = sr.xi;
    sol.Y = sr.Y;
    sol.mu_star = mu;
    sol.consistency_residual = l2_distance(mu, sr.xi);
    sol.source_consistency = sol.consistency_residual;
    sol.liquidation_gap = std::fabs(sol.X_star[sol.grid_nodes() - 1]);
    sol.value_at_0 = value_function(spec, A, sol.B, 0, spec.x0);
    return sol;
}

}  // namespace mfgliq
