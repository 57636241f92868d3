// SPDX-License-Identifier: MIT
//
// Experiment orchestration behind the command-line tool. run() validates the
// whole configuration before touching the file system: an invalid config
// (exit 1) writes nothing. Solver failures (exit 2) and gate violations
// (exit 3) still write the manifest and whatever was computed before the
// failure.
#pragma once

#include "mfgliq/equilibrium.hpp"
#include "mfgliq/error.hpp"
#include "mfgliq/fixedpoint.hpp"
#include "mfgliq/model.hpp"
#include "mfgliq/model_io.hpp"
#include "mfgliq/nplayer.hpp"
#include "mfgliq/penalize.hpp"
#include "mfgliq/riccati.hpp"
#include "mfgliq/table.hpp"

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mfgliq {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitInvalidConfig = 1, kExitNotConverged = 2, kExitGateViolation = 3 };

struct RunConfig {
    std::string subcommand;  // solve | penalize | fixedpoint | nplayer | figures
    std::string model_path;  // required except for figures
    std::string out_dir;     // empty: $MFGLIQ_OUT_DIR, else ./mfgliq_out
    std::uint64_t seed = 20240611;
    std::string format = "csv";  // csv | json
    bool record_timing = false;

    // solve
    std::string backend = "ode";  // closed | ode | tree
    int tree_depth = 0;           // 0: model's tree.depth, else 64
    double tree_tol = 1e-8;

    // penalize
    std::vector<double> n_list = {10.0, 100.0, 1000.0, 10000.0};
    bool override_gate = false;
    double sup_window = 0.1;

    // fixedpoint
    double damping = 1.0;
    double tol = 1e-10;
    int k_max = 200;
    bool staged = false;

    // nplayer
    std::vector<int> N_list = {4, 16, 64, 256};
    int samples = 200;
    std::string kappa_family = "uniform";

    // figures
    std::vector<double> kappas = {0.0, 1.0, 5.0, 20.0};
};

struct RunResult {
    int exit_code = kExitOk;
    std::string message;
    std::vector<std::string> outputs;
    std::string out_dir;
};

// Ordered JSON object with numbers rendered at 17 significant digits.
class JsonObject {
public:
    JsonObject& num(const std::string& k, double v) {
        const std::string s = format_number(v);
        items_.emplace_back(k, std::isfinite(v) ? s : quote(s));
        return *this;
    }
    JsonObject& integer(const std::string& k, long long v) {
        items_.emplace_back(k, std::to_string(v));
        return *this;
    }
    JsonObject& str(const std::string& k, const std::string& v) {
        items_.emplace_back(k, quote(v));
        return *this;
    }
    JsonObject& boolean(const std::string& k, bool v) {
        items_.emplace_back(k, v ? "true" : "false");
        return *this;
    }
    JsonObject& raw(const std::string& k, std::string rendered) {
        items_.emplace_back(k, std::move(rendered));
        return *this;
    }
    JsonObject& object(const std::string& k, const JsonObject& o) { return raw(k, o.render()); }
    JsonObject& numbers(const std::string& k, const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
        return raw(k, s + "]");
    }
    JsonObject& strings(const std::string& k, const std::vector<std::string>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + quote(v[i]);
        return raw(k, s + "]");
    }

    [[nodiscard]] std::string render() const {
        std::string s = "{";
        for (std::size_t i = 0; i < items_.size(); ++i) s += (i ? "," : "") + quote(items_[i].first) + ":" + items_[i].second;
        return s + "}";
    }

    static std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

namespace detail {

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;  // name, content
    JsonObject summary;
    bool has_summary = false;
};

inline void add_table(Artifacts& a, const Table& t, const std::string& format) {
    if (format == "json") a.files.emplace_back(t.name + ".json", t.json());
    else a.files.emplace_back(t.name + ".csv", t.csv());
}

inline JsonObject envelope_summary(const EnvelopeReport& r) {
    JsonObject o;
    o.integer("nodes_checked", static_cast<long long>(r.nodes_checked))
        .integer("violations", static_cast<long long>(r.violations()))
        .integer("lower_violations", static_cast<long long>(r.lower_violations))
        .integer("upper_violations", static_cast<long long>(r.upper_violations))
        .integer("chain_violations", static_cast<long long>(r.chain_violations))
        .integer("discount_violations", static_cast<long long>(r.discount_violations))
        .integer("discount_pairs_checked", static_cast<long long>(r.discount_pairs_checked))
        .num("worst_lower_margin", r.worst_lower_margin)
        .num("worst_upper_margin", r.worst_upper_margin)
        .num("worst_discount_margin", r.worst_discount_margin);
    return o;
}

inline JsonObject gate_summary(const ModelSpec& spec) {
    const ValidationReport w = validate_weak_interaction(spec);
    const AssumptionCheck a = check_assumption_app(spec);
    JsonObject o;
    o.boolean("weak_interaction", w.pass).num("theta", w.theta).num("margin", w.margin).num("alpha", spec.bounds.alpha());
    o.str("discount_assumption", a.holds() ? "holds_by" : "unknown").str("discount_assumption_reason", a.reason);
    return o;
}

inline TreeOptions tree_options(const ModelSpec& spec, double tol) {
    TreeOptions o;
    o.tol = tol;
    o.ladder = default_ladder(spec.bounds);
    return o;
}

inline void run_solve_grid(const RunConfig& cfg, const LoadedModel& m, Artifacts& out) {
    const ModelSpec& spec = m.spec;
    const TimeGrid grid = m.grid.build(spec.horizon);
    const RiccatiBackend backend = cfg.backend == "closed" ? RiccatiBackend::ClosedForm : RiccatiBackend::InverseODE;
    EquilibriumOptions eo;
    eo.backend = backend;
    const EquilibriumSolution sol = solve_equilibrium(spec, grid, eo);
    const EnvelopeReport env = check_envelopes(sol.riccati, spec);
    const std::size_t K = grid.size();

    Table ric{"riccati_" + cfg.backend, {"t", "A", "lower_bound", "upper_bound"}, {}};
    for (std::size_t k = 0; k < K; ++k) ric.add({grid.nodes[k], sol.A[k], env.lower[k], env.upper[k]});
    add_table(out, ric, cfg.format);

    Table eq{"equilibrium", {"t", "X_star", "xi_star", "mu_star", "B", "Y", "V"}, {}};
    for (std::size_t k = 0; k < K; ++k)
        eq.add({grid.nodes[k], sol.X_star[k], sol.xi_star[k], sol.mu_star[k], sol.B[k], sol.Y[k],
                value_function(spec, sol.riccati, sol.B, k, sol.X_star[k])});
    add_table(out, eq, cfg.format);

    Table agg{"aggregate", {"t", "D", "X_tilde", "B_tilde"}, {}};
    for (std::size_t k = 0; k < K; ++k)
        agg.add({grid.nodes[k], sol.aggregate.D.A[k], sol.aggregate.X_tilde[k], sol.aggregate.B_tilde[k]});
    add_table(out, agg, cfg.format);

    double min_x = 0.0, min_xi = 0.0, min_y = 0.0;
    for (std::size_t k = 0; k < sol.X_star.size(); ++k) {
        min_x = std::min(min_x, sol.X_star[k]);
        min_xi = std::min(min_xi, sol.xi_star[k]);
        min_y = std::min(min_y, sol.Y[k]);
    }
    out.summary.str("backend", cfg.backend)
        .integer("grid_nodes", static_cast<long long>(K))
        .num("epsilon_cut", grid.epsilon_cut)
        .num("A_0", sol.A[0])
        .num("xi_star_0", sol.xi_star[0])
        .num("value_at_0", sol.value_at_0)
        .num("direct_cost", direct_cost(spec, sol.mu_star, sol.X_star, sol.xi_star))
        .num("consistency_residual", sol.consistency_residual)
        .num("source_consistency", sol.source_consistency)
        .num("liquidation_gap", sol.liquidation_gap)
        .num("min_X_star", min_x)
        .num("min_xi_star", min_xi)
        .num("min_Y", min_y)
        .object("envelopes", envelope_summary(env))
        .object("gates", gate_summary(spec));
    out.has_summary = true;
}

inline void run_solve_tree(const RunConfig& cfg, const LoadedModel& m, Artifacts& out) {
    const ModelSpec& spec = m.spec;
    const int depth = cfg.tree_depth > 0 ? cfg.tree_depth : (m.tree_depth ? *m.tree_depth : 64);
    const CommonNoiseTree tree(spec.horizon, depth);
    validate_model(spec, &tree);
    const TreeOptions opt = tree_options(spec, cfg.tree_tol);
    const TreeEquilibrium eq = solve_tree_equilibrium(spec, tree, opt);
    const EnvelopeReport env = check_envelopes(eq.A, spec);
    const TreeRiccati& A = *eq.A.tree;
    const TreeRiccati& D = *eq.D.tree;

    Table ric{"riccati_tree", {"step", "node_level", "t", "w", "A", "lower_bound", "upper_bound"}, {}};
    Table te{"tree_equilibrium", {"step", "node_level", "t", "w", "probability", "D", "B_ratio", "X_mean", "xi_mean"}, {}};
    for (int k = 0; k < depth; ++k)
        for (int j = 0; j <= k; ++j) {
            const TreeNode n = tree.node(k, j);
            ric.add({double(k), double(j), n.t, n.w, A.A.values[k][j], env.tree_lower.values[k][j],
                     env.tree_upper.values[k][j]});
            te.add({double(k), double(j), n.t, n.w, eq.probability.values[k][j], D.A.values[k][j],
                    eq.B_ratio.values[k][j], eq.X_mean.values[k][j], eq.xi_mean.values[k][j]});
        }
    add_table(out, ric, cfg.format);
    add_table(out, te, cfg.format);

    Table lad{"ladder", {"n", "A_0", "increment"}, {}};
    for (const auto& e : A.ladder) lad.add({e.n, e.A.values[0][0], e.increment});
    add_table(out, lad, cfg.format);

    out.summary.str("backend", "tree")
        .integer("depth", depth)
        .num("A_0", A.A.values[0][0])
        .num("D_0", D.A.values[0][0])
        .num("xi_star_0", eq.xi_mean.values[0][0])
        .num("value_at_0", eq.value_at_0)
        .num("direct_cost", eq.direct_cost)
        .integer("ladder_levels_A", static_cast<long long>(A.ladder.size()))
        .integer("ladder_levels_D", static_cast<long long>(D.ladder.size()))
        .num("last_increment_A", A.last_increment)
        .num("last_increment_D", D.last_increment)
        .object("envelopes", envelope_summary(env))
        .object("gates", gate_summary(spec));
    out.has_summary = true;
}

inline void run_penalize(const RunConfig& cfg, const LoadedModel& m, Artifacts& out) {
    ConvergenceOptions opt;
    opt.n_list = cfg.n_list;
    opt.K = m.grid.K;
    opt.ratio = m.grid.ratio;
    opt.epsilon_cut = m.grid.epsilon_cut;
    opt.sup_window = cfg.sup_window;
    opt.override_gate = cfg.override_gate;
    const ConvergenceTable t = convergence_experiment(m.spec, opt);

    Table tab{"convergence",
              {"n", "sup_A_minus_An", "l2_X", "l2_Y", "l2_B", "abs_X_n_T", "n_X_n_T_sq", "V_n", "V_minus_V_n",
               "weighted_X", "weighted_B"},
              {}};
    for (const auto& r : t.rows)
        tab.add({r.n, r.sup_A, r.l2_X, r.l2_Y, r.l2_B, r.terminal, r.terminal_energy, r.value_n, r.value_gap,
                 r.weighted_X, r.weighted_B});
    add_table(out, tab, cfg.format);

    auto col = [&](auto f) { return t.decreasing(f); };
    out.summary.num("V", t.value)
        .num("epsilon_cut", t.epsilon_cut)
        .num("sup_window", t.sup_window)
        .num("terminal_slope", t.terminal_slope)
        .boolean("sandwich", t.sandwich())
        .boolean("value_gap_strictly_decreasing", t.decreasing([](const ConvergenceRow& r) { return r.value_gap; }, true))
        .boolean("terminal_energy_decreasing", col([](const ConvergenceRow& r) { return r.terminal_energy; }))
        .boolean("sup_A_decreasing", col([](const ConvergenceRow& r) { return r.sup_A; }))
        .boolean("l2_X_decreasing", col([](const ConvergenceRow& r) { return r.l2_X; }))
        .boolean("l2_Y_decreasing", col([](const ConvergenceRow& r) { return r.l2_Y; }))
        .boolean("l2_B_decreasing", col([](const ConvergenceRow& r) { return r.l2_B; }))
        .num("max_weighted_X", t.max_weighted_X())
        .num("max_weighted_B", t.max_weighted_B())
        .num("gamma", weight_gamma(m.spec.bounds))
        .boolean("gate_overridden", t.gate_overridden)
        .object("gates", gate_summary(m.spec));
    out.has_summary = true;
}

inline void write_trace(const IterationTrace& tr, const RunConfig& cfg, Artifacts& out) {
    Table tab{"trace", {"k", "stage", "coupling", "residual", "ratio"}, {}};
    for (const auto& r : tr.iterates) tab.add({double(r.k), double(r.stage), r.coupling, r.residual, r.ratio});
    add_table(out, tab, cfg.format);
}

inline void run_fixedpoint(const RunConfig& cfg, const LoadedModel& m, Artifacts& out) {
    const ModelSpec& spec = m.spec;
    const TimeGrid grid = m.grid.build(spec.horizon);
    out.summary.object("gates", gate_summary(spec)).num("damping", cfg.damping).num("tol", cfg.tol).boolean("staged", cfg.staged);
    out.has_summary = true;
    const RiccatiSolution A = solve_inverse_ode(spec, grid, false);
    FixedPointOptions opt;
    opt.damping = cfg.damping;
    opt.tol = cfg.tol;
    opt.k_max = cfg.k_max;
    opt.staged = cfg.staged;
    IterationTrace tr;
    try {
        tr = iterate(spec, A, ProcessPath::constant(A.A.times, 0.0), opt);
    } catch (const FixedPointNotConverged& e) {
        write_trace(e.trace(), cfg, out);
        out.summary.boolean("converged", false).integer("iterations", static_cast<long long>(e.trace().iterates.size()));
        throw;
    }
    write_trace(tr, cfg, out);
    const EquilibriumSolution direct = solve_equilibrium(spec, grid);
    Table lim{"limit", {"t", "mu", "xi_direct"}, {}};
    for (std::size_t k = 0; k < grid.size(); ++k) lim.add({grid.nodes[k], tr.limit[k], direct.xi_star[k]});
    add_table(out, lim, cfg.format);
    out.summary.boolean("converged", true)
        .integer("iterations", static_cast<long long>(tr.iterates.size()))
        .num("final_residual", tr.final_residual())
        .num("max_ratio", tr.max_ratio())
        .num("l2_to_direct", l2_distance(tr.limit, direct.mu_star));
    if (spec.all_constant()) {
        const ClosedFormRoots r = closed_form_roots(spec.kappa.constant_value(), spec.eta.constant_value(),
                                                    spec.lambda.constant_value());
        const ProcessPath cf = map_times(tr.limit.times, [&](double t) { return spec.x0 * closed_form_rate(r, spec.horizon, t); });
        out.summary.num("l2_to_closed_form", l2_distance(tr.limit, cf));
    }
}

inline void run_nplayer(const RunConfig& cfg, const LoadedModel& m, Artifacts& out) {
    const TimeGrid grid = m.grid.build(m.spec.horizon);
    NPlayerOptions opt;
    opt.N_list = cfg.N_list;
    opt.samples = cfg.samples;
    opt.seed = cfg.seed;
    opt.family = KappaFamily::parse(cfg.kappa_family);
    const DeviationReport rep = nplayer_experiment(m.spec, grid, opt);
    Table tab{"nplayer",
              {"N", "samples", "equilibrium_cost", "deviation_cost", "gain", "gain_floored", "gain_se", "field_gap",
               "field_gap_se", "gap_bound", "projected", "negative_rate_fraction"},
              {}};
    for (const auto& r : rep.rows)
        tab.add({double(r.N), double(r.samples), r.equilibrium_cost, r.deviation_cost, r.gain, r.gain_floored, r.gain_se,
                 r.field_gap, r.field_gap_se, r.gap_bound, double(r.projected), r.negative_rate_fraction});
    add_table(out, tab, cfg.format);
    out.summary.num("M", rep.M)
        .num("gain_slope", rep.gain_slope)
        .num("gap_slope", rep.gap_slope)
        .num("floor", rep.floor)
        .str("kappa_family", rep.family)
        .object("gates", gate_summary(m.spec));
    out.has_summary = true;
}

inline std::string kappa_label(double k) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", k);
    return buf;
}

// Default figure instance: T = 1, x = 1, lambda = 5, eta = 5.
inline LoadedModel figure_base() {
    LoadedModel m;
    m.spec = ModelSpec::constant(1.0, 1.0, 0.0, 5.0, 5.0);
    return m;
}

inline void run_figures(const RunConfig& cfg, const LoadedModel& m, Artifacts& out) {
    const TimeGrid grid = m.grid.build(m.spec.horizon);
    std::vector<double> xi0;
    for (double k : cfg.kappas) {
        ModelSpec s = m.spec;
        s.kappa = CoefficientProcess::constant(k);
        s.bounds.kappa_max = std::max(s.bounds.kappa_max, k);
        const EquilibriumSolution sol = solve_equilibrium(s, grid);
        Table tab{"figure_kappa_" + kappa_label(k), {"t", "xi_star", "X_star"}, {}};
        for (std::size_t i = 0; i < grid.size(); ++i) tab.add({grid.nodes[i], sol.xi_star[i], sol.X_star[i]});
        add_table(out, tab, cfg.format);
        xi0.push_back(sol.xi_star[0]);
    }
    out.summary.numbers("kappas", cfg.kappas).numbers("xi_star_0", xi0).num("horizon", m.spec.horizon).num("x0", m.spec.x0);
    out.has_summary = true;
}

inline void check_config(const RunConfig& cfg) {
    static const std::vector<std::string> subs = {"solve", "penalize", "fixedpoint", "nplayer", "figures"};
    if (std::find(subs.begin(), subs.end(), cfg.subcommand) == subs.end())
        throw InvalidArgument("unknown subcommand '" + cfg.subcommand + "'");
    if (cfg.format != "csv" && cfg.format != "json") throw InvalidArgument("format must be csv or json");
    if (cfg.subcommand != "figures" && cfg.model_path.empty()) throw InvalidArgument("a model file is required");
    if (cfg.backend != "closed" && cfg.backend != "ode" && cfg.backend != "tree")
        throw InvalidArgument("backend must be closed, ode or tree");
    if (cfg.tree_depth < 0) throw InvalidArgument("tree depth must be positive");
    if (!(cfg.tree_tol > 0.0)) throw InvalidArgument("tree tolerance must be positive");
    if (cfg.n_list.empty()) throw InvalidArgument("n list is empty");
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i)
        if (!(cfg.n_list[i] > 0.0) || (i && !(cfg.n_list[i] > cfg.n_list[i - 1])))
            throw InvalidArgument("n list must be positive and increasing");
    if (!(cfg.sup_window > 0.0 && cfg.sup_window < 1.0)) throw InvalidArgument("sup window must lie in (0, 1)");
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
    if (!(cfg.tol > 0.0)) throw InvalidArgument("tol must be positive");
    if (cfg.k_max < 1) throw InvalidArgument("k-max must be >= 1");
    if (cfg.N_list.empty()) throw InvalidArgument("N list is empty");
    for (int N : cfg.N_list)
        if (N < 1) throw InvalidArgument("N must be >= 1");
    if (cfg.samples < 2) throw InvalidArgument("samples must be >= 2");
    (void)KappaFamily::parse(cfg.kappa_family);
    if (cfg.kappas.empty()) throw InvalidArgument("kappa list is empty");
    for (double k : cfg.kappas)
        if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidArgument("figure kappas must be finite and >= 0");
}

inline std::string resolve_out_dir(const RunConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    if (const char* env = std::getenv("MFGLIQ_OUT_DIR"); env && *env) return env;
    return "mfgliq_out";
}

inline JsonObject config_echo(const RunConfig& cfg) {
    JsonObject o;
    o.str("subcommand", cfg.subcommand).str("model_path", cfg.model_path).str("format", cfg.format);
    o.integer("seed", static_cast<long long>(cfg.seed));
    if (cfg.subcommand == "solve") o.str("backend", cfg.backend).integer("tree_depth", cfg.tree_depth).num("tree_tol", cfg.tree_tol);
    if (cfg.subcommand == "penalize")
        o.numbers("n_list", cfg.n_list).boolean("override_gate", cfg.override_gate).num("sup_window", cfg.sup_window);
    if (cfg.subcommand == "fixedpoint")
        o.num("damping", cfg.damping).num("tol", cfg.tol).integer("k_max", cfg.k_max).boolean("staged", cfg.staged);
    if (cfg.subcommand == "nplayer") {
        std::vector<double> Ns(cfg.N_list.begin(), cfg.N_list.end());
        o.numbers("N_list", Ns).integer("samples", cfg.samples).str("kappa_family", cfg.kappa_family);
    }
    if (cfg.subcommand == "figures") o.numbers("kappas", cfg.kappas);
    return o;
}

}  // namespace detail

inline RunResult run(const RunConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    RunResult result;
    LoadedModel model;
    try {
        detail::check_config(cfg);
        if (!cfg.model_path.empty()) model = load_model(cfg.model_path);
        else model = detail::figure_base();
        if (cfg.subcommand == "solve") {
            if (cfg.backend == "closed" && !model.spec.all_constant())
                throw InvalidArgument("closed-form backend needs constant coefficients");
            if (cfg.backend != "tree" && model.spec.has_tree_coefficients())
                throw InvalidArgument("model has tree coefficients; use --backend tree");
        } else if (cfg.subcommand != "penalize" && model.spec.has_tree_coefficients()) {
            throw InvalidArgument(cfg.subcommand + " needs deterministic coefficients");
        }
    } catch (const Error& e) {
        result.exit_code = kExitInvalidConfig;
        result.message = e.what();
        return result;
    }

    detail::Artifacts art;
    std::string status = "ok";
    try {
        if (cfg.subcommand == "solve") {
            if (cfg.backend == "tree") detail::run_solve_tree(cfg, model, art);
            else detail::run_solve_grid(cfg, model, art);
        } else if (cfg.subcommand == "penalize") {
            detail::run_penalize(cfg, model, art);
        } else if (cfg.subcommand == "fixedpoint") {
            detail::run_fixedpoint(cfg, model, art);
        } else if (cfg.subcommand == "nplayer") {
            detail::run_nplayer(cfg, model, art);
        } else {
            detail::run_figures(cfg, model, art);
        }
    } catch (const GateViolation& e) {
        result.exit_code = kExitGateViolation;
        result.message = e.what();
        status = "gate_violation";
    } catch (const NotConverged& e) {
        result.exit_code = kExitNotConverged;
        result.message = e.what();
        status = "not_converged";
    } catch (const IntegrationFailure& e) {
        result.exit_code = kExitNotConverged;
        result.message = e.what();
        status = "integration_failure";
    } catch (const UnsupportedBackend& e) {
        result.exit_code = kExitInvalidConfig;
        result.message = e.what();
        return result;
    } catch (const InvalidArgument& e) {
        result.exit_code = kExitInvalidConfig;
        result.message = e.what();
        return result;
    }

    const std::string dir = detail::resolve_out_dir(cfg);
    result.out_dir = dir;
    try {
        std::filesystem::create_directories(dir);
        if (art.has_summary) art.files.emplace_back("summary.json", art.summary.render() + "\n");
        for (const auto& [name, content] : art.files) {
            write_text((std::filesystem::path(dir) / name).string(), content);
            result.outputs.push_back(name);
        }
        JsonObject manifest;
        manifest.str("tool", "mfgliq")
            .str("version", kVersion)
            .str("compiler", __VERSION__)
            .str("status", status)
            .integer("exit_code", result.exit_code)
            .str("message", result.message)
            .object("config", detail::config_echo(cfg))
            .raw("model", cfg.model_path.empty() ? std::string("null") : model.document.dump())
            .strings("outputs", result.outputs);
        if (cfg.record_timing) {
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            manifest.num("wall_time_s", secs);
        }
        write_text((std::filesystem::path(dir) / "manifest.json").string(), manifest.render() + "\n");
        result.outputs.push_back("manifest.json");
    } catch (const std::exception& e) {
        result.exit_code = kExitInvalidConfig;
        result.message = std::string("output: ") + e.what();
    }
    return result;
}

}  // namespace mfgliq
