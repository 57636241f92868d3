// SPDX-License-Identifier: MIT
//
// Finite-player Monte Carlo check of the epsilon-Nash property.
//
// Player i carries kappa^i = kappa U_i with U_i i.i.d. uniform on
// [1 - w, 1 + w], so E[kappa^i | F0] = kappa and the mean field is the
// common-information equilibrium field mu* for kappa. Everyone plays the
// best response to mu*; the deviation of player i is the best response to
// the frozen empirical field of the others plus one self-impact pass.
#pragma once

#include "mfgliq/equilibrium.hpp"
#include "mfgliq/error.hpp"
#include "mfgliq/fixedpoint.hpp"
#include "mfgliq/model.hpp"
#include "mfgliq/penalize.hpp"
#include "mfgliq/process.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mfgliq {

struct KappaFamily {
    double spread = 0.5;  // U uniform on [1 - spread, 1 + spread]; 0 gives the degenerate family

    static KappaFamily parse(const std::string& s) {
        if (s == "uniform") return {0.5};
        if (s == "degenerate") return {0.0};
        const std::string prefix = "uniform:";
        if (s.rfind(prefix, 0) == 0) {
            std::size_t used = 0;
            double w = 0.0;
            try {
                w = std::stod(s.substr(prefix.size()), &used);
            } catch (const std::exception&) {
                throw InvalidArgument("kappa family: bad spread in '" + s + "'");
            }
            if (used != s.size() - prefix.size()) throw InvalidArgument("kappa family: bad spread in '" + s + "'");
            KappaFamily f{w};
            f.validate();
            return f;
        }
        throw InvalidArgument("kappa family: unknown family '" + s + "' (uniform, uniform:<w>, degenerate)");
    }
    void validate() const {
        if (!(spread >= 0.0 && spread < 1.0)) throw InvalidArgument("kappa family: spread must lie in [0, 1)");
    }
    [[nodiscard]] std::string label() const {
        if (spread == 0.0) return "degenerate";
        return "uniform:" + format_g(spread);
    }
};

// Shared, population-independent data on one grid.
struct NPlayerContext {
    ModelSpec spec;
    RiccatiSolution A;          // kappa-free
    EquilibriumSolution mfg;    // mu* for kappa
    ProcessPath xi_free;        // response with B = 0
    ProcessPath xi_coupled;     // d xi / d U: response to B(mu*) at zero position
    ProcessPath X_free, X_coupled;
    double M = 0.0;             // admissibility cap on ||xi||^2
};

inline NPlayerContext make_nplayer_context(const ModelSpec& spec, const TimeGrid& grid) {
    NPlayerContext c;
    c.spec = spec;
    c.mfg = solve_equilibrium(spec, grid);
    c.A = c.mfg.riccati;
    const auto& t = c.A.A.times;
    const ProcessPath zero = ProcessPath::constant(t, 0.0);
    // Best responses are affine in kappa^i: xi^i = xi_free + U_i xi_coupled.
    const StateAndRate free = synthesize_state_and_rate(spec, c.A, zero, spec.x0);
    const ProcessPath B = solve_player_B(spec, c.A, c.mfg.mu_star);
    const StateAndRate coupled = synthesize_state_and_rate(spec, c.A, B, 0.0);
    c.xi_free = free.xi;
    c.X_free = free.X;
    c.xi_coupled = coupled.xi;
    c.X_coupled = coupled.X;
    const double n = l2_norm(c.mfg.xi_star);
    c.M = 4.0 * n * n;
    return c;
}

struct PlayerPopulation {
    int N = 0;
    std::vector<double> scale;  // U_i
    std::vector<double> x;      // initial positions
    std::vector<ProcessPath> xi;  // equilibrium rates
    double M = 0.0;
};

inline std::mt19937_64 population_stream(std::uint64_t seed, int N, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffU), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(N), static_cast<std::uint32_t>(index & 0xffffffffU),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline PlayerPopulation sample_population(const NPlayerContext& ctx, int N, std::uint64_t seed,
                                          KappaFamily family = {}, std::uint64_t index = 0) {
    if (N < 1) throw InvalidArgument("population: N must be >= 1");
    family.validate();
    std::mt19937_64 rng = population_stream(seed, N, index);
    PlayerPopulation pop;
    pop.N = N;
    pop.M = ctx.M;
    pop.scale.resize(static_cast<std::size_t>(N));
    pop.x.assign(static_cast<std::size_t>(N), ctx.spec.x0);
    for (int i = 0; i < N; ++i) {
        const double u = unit_uniform(rng);
        pop.scale[i] = 1.0 + family.spread * (2.0 * u - 1.0);
        ProcessPath p = ctx.xi_free;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] += pop.scale[i] * ctx.xi_coupled[k];
        pop.xi.push_back(std::move(p));
    }
    return pop;
}

// int (mu* - N^{-1} sum_j xi^j)^2 dt for one population.
inline double empirical_field_gap(const NPlayerContext& ctx, const PlayerPopulation& pop) {
    ProcessPath d = ctx.mfg.mu_star;
    for (const auto& x : pop.xi)
        for (std::size_t k = 0; k < d.size(); ++k) d[k] -= x[k] / pop.N;
    const double n = l2_norm(d);
    return n * n;
}

namespace detail {

inline ModelSpec player_spec(const ModelSpec& spec, double scale) {
    ModelSpec s = spec;
    s.kappa = spec.kappa.scaled(scale);
    return s;
}

// Cost of player i with rate xi when the others play `others` (already divided by N).
inline double player_cost(const ModelSpec& spec_i, const ProcessPath& others, const ProcessPath& xi, int N) {
    const std::vector<double> c = quad::cumulative(xi.times, xi.values);
    std::vector<double> X(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) X[k] = spec_i.x0 - c[k];
    ProcessPath field = others;
    for (std::size_t k = 0; k < field.size(); ++k) field[k] += xi[k] / N;
    return direct_cost(spec_i, field, ProcessPath{xi.times, std::move(X)}, xi);
}

}  // namespace detail

struct DeviationOutcome {
    double equilibrium_cost = 0.0;
    double deviation_cost = 0.0;
    double gain = 0.0;  // equilibrium_cost - deviation_cost
    bool projected = false;
};

// Gain of player i from the best response to the frozen empirical field.
inline DeviationOutcome deviation_gain(const NPlayerContext& ctx, const PlayerPopulation& pop, int i) {
    if (i < 0 || i >= pop.N) throw InvalidArgument("deviation: player index out of range");
    const ModelSpec spec_i = detail::player_spec(ctx.spec, pop.scale[i]);
    ProcessPath others = ProcessPath::constant(ctx.mfg.mu_star.times, 0.0);
    for (int j = 0; j < pop.N; ++j) {
        if (j == i) continue;
        for (std::size_t k = 0; k < others.size(); ++k) others[k] += pop.xi[j][k] / pop.N;
    }
    DeviationOutcome out;
    out.equilibrium_cost = detail::player_cost(spec_i, others, pop.xi[i], pop.N);

    BestResponse br = best_response(spec_i, ctx.A, others);
    // Self-impact pass: the field seen by i includes its own xi / N.
    ProcessPath field = others;
    for (std::size_t k = 0; k < field.size(); ++k) field[k] += br.xi[k] / pop.N;
    br = best_response(spec_i, ctx.A, field);
    ProcessPath dev = br.xi;

    const double e = l2_norm(dev);
    if (e * e > pop.M) {
        // Rescale toward the equilibrium rate until the cap binds; the
        // integral constraint is preserved since both rates liquidate.
        const ProcessPath& base = pop.xi[i];
        ProcessPath d = dev;
        for (std::size_t k = 0; k < d.size(); ++k) d[k] -= base[k];
        std::vector<double> bd(d.size()), dd(d.size()), bb(d.size());
        for (std::size_t k = 0; k < d.size(); ++k) {
            bd[k] = base[k] * d[k];
            dd[k] = d[k] * d[k];
            bb[k] = base[k] * base[k];
        }
        const double a2 = quad::integral(d.times, dd), a1 = 2.0 * quad::integral(d.times, bd),
                     a0 = quad::integral(d.times, bb) - pop.M;
        const double s = (-a1 + std::sqrt(std::max(0.0, a1 * a1 - 4.0 * a2 * a0))) / (2.0 * a2);
        for (std::size_t k = 0; k < dev.size(); ++k) dev[k] = base[k] + s * d[k];
        out.projected = true;
    }
    out.deviation_cost = detail::player_cost(spec_i, others, dev, pop.N);
    out.gain = out.equilibrium_cost - out.deviation_cost;
    return out;
}

struct DeviationRow {
    int N = 0;
    int samples = 0;
    double equilibrium_cost = 0.0;  // mean over populations and players
    double deviation_cost = 0.0;
    double gain = 0.0;              // raw mean
    double gain_floored = 0.0;      // max(mean, 0)
    double gain_se = 0.0;
    double field_gap = 0.0;
    double field_gap_se = 0.0;
    double gap_bound = 0.0;         // 2M / N
    int projected = 0;
    double negative_rate_fraction = 0.0;  // share of players with xi^i < 0 somewhere
};

struct DeviationReport {
    std::vector<DeviationRow> rows;
    double M = 0.0;
    double gain_slope = 0.0;
    double gap_slope = 0.0;
    double floor = 1e-14;
    std::string family;
    std::uint64_t seed = 0;
};

struct NPlayerOptions {
    std::vector<int> N_list = {4, 16, 64, 256};
    int samples = 200;
    std::uint64_t seed = 20240611;
    KappaFamily family;
    bool all_players = true;  // average the gain over every player of a population (else player 0)
};

inline DeviationReport nplayer_experiment(const ModelSpec& spec, const TimeGrid& grid, const NPlayerOptions& opt = {}) {
    if (opt.N_list.empty()) throw InvalidArgument("nplayer: empty N list");
    if (opt.samples < 2) throw InvalidArgument("nplayer: need at least two populations per N");
    for (int N : opt.N_list)
        if (N < 1) throw InvalidArgument("nplayer: N must be >= 1");
    const NPlayerContext ctx = make_nplayer_context(spec, grid);
    DeviationReport rep;
    rep.M = ctx.M;
    rep.family = opt.family.label();
    rep.seed = opt.seed;

    std::vector<double> Ns, gains, gaps;
    for (int N : opt.N_list) {
        DeviationRow row;
        row.N = N;
        row.samples = opt.samples;
        row.gap_bound = 2.0 * ctx.M / N;
        double sg = 0.0, sg2 = 0.0, sf = 0.0, sf2 = 0.0, se = 0.0, sd = 0.0;
        long negative = 0, players = 0;
        for (int p = 0; p < opt.samples; ++p) {
            const PlayerPopulation pop = sample_population(ctx, N, opt.seed, opt.family, static_cast<std::uint64_t>(p));
            const double gap = empirical_field_gap(ctx, pop);
            sf += gap;
            sf2 += gap * gap;
            const int count = opt.all_players ? N : 1;
            double g = 0.0, ec = 0.0, dc = 0.0;
            for (int i = 0; i < count; ++i) {
                const DeviationOutcome d = deviation_gain(ctx, pop, i);
                g += d.gain / count;
                ec += d.equilibrium_cost / count;
                dc += d.deviation_cost / count;
                row.projected += d.projected ? 1 : 0;
                ++players;
                for (std::size_t k = 0; k < pop.xi[i].size(); ++k)
                    if (pop.xi[i][k] < 0.0) {
                        ++negative;
                        break;
                    }
            }
            sg += g;
            sg2 += g * g;
            se += ec;
            sd += dc;
        }
        const double m = opt.samples;
        row.gain = sg / m;
        row.gain_floored = std::max(row.gain, 0.0);
        row.gain_se = std::sqrt(std::max(0.0, (sg2 / m - row.gain * row.gain) / (m - 1.0)));
        row.field_gap = sf / m;
        row.field_gap_se = std::sqrt(std::max(0.0, (sf2 / m - row.field_gap * row.field_gap) / (m - 1.0)));
        row.equilibrium_cost = se / m;
        row.deviation_cost = sd / m;
        row.negative_rate_fraction = static_cast<double>(negative) / static_cast<double>(players);
        rep.rows.push_back(row);
        Ns.push_back(N);
        gains.push_back(std::max(row.gain, rep.floor));
        gaps.push_back(std::max(row.field_gap, rep.floor));
    }
    if (Ns.size() >= 2) {
        rep.gain_slope = loglog_slope(Ns, gains);
        rep.gap_slope = loglog_slope(Ns, gaps);
    }
    return rep;
}

}  // namespace mfgliq
