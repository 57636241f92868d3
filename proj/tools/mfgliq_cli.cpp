// SPDX-License-Identifier: MIT
//
// mfgliq <subcommand> [model.json] [options]
#include "mfgliq/cli.hpp"

#include <iostream>

#include "CLI11.hpp"

namespace {

void common_options(CLI::App* sub, mfgliq::RunConfig& cfg, bool model_required) {
    auto* m = sub->add_option("model", cfg.model_path, "model JSON file");
    if (model_required) m->required();
    sub->add_option("-o,--out-dir", cfg.out_dir, "output directory (default $MFGLIQ_OUT_DIR or ./mfgliq_out)");
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--format", cfg.format, "table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--record-timing", cfg.record_timing, "add wall time to the manifest");
}

}  // namespace

int main(int argc, char** argv) {
    mfgliq::RunConfig cfg;
    CLI::App app{"Mean-field liquidation solvers"};
    app.set_version_flag("--version", mfgliq::kVersion);
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "Riccati, aggregate and equilibrium paths");
    common_options(solve, cfg, true);
    solve->add_option("--backend", cfg.backend, "closed | ode | tree")->check(CLI::IsMember({"closed", "ode", "tree"}));
    solve->add_option("--tree-depth", cfg.tree_depth, "tree depth (default: model, else 64)");
    solve->add_option("--tree-tol", cfg.tree_tol, "ladder extrapolation tolerance");

    auto* pen = app.add_subcommand("penalize", "penalized MFG convergence table");
    common_options(pen, cfg, true);
    pen->add_option("--n-list", cfg.n_list, "penalty levels")->delimiter(',');
    pen->add_flag("--override-gate", cfg.override_gate, "run even when the discount assumption is not established");
    pen->add_option("--sup-window", cfg.sup_window, "fraction of T excluded from sup |A - A^n|");

    auto* fp = app.add_subcommand("fixedpoint", "damped Picard iteration on the mean field");
    common_options(fp, cfg, true);
    fp->add_option("--damping", cfg.damping, "damping in (0, 1]");
    fp->add_option("--tol", cfg.tol, "L2 stopping tolerance");
    fp->add_option("--k-max", cfg.k_max, "iteration cap");
    fp->add_flag("--staged", cfg.staged, "coupling homotopy 0 -> 1");

    auto* np = app.add_subcommand("nplayer", "finite-player deviation experiment");
    common_options(np, cfg, true);
    np->add_option("--N-list", cfg.N_list, "player counts")->delimiter(',');
    np->add_option("--samples", cfg.samples, "populations per N");
    np->add_option("--kappa-family", cfg.kappa_family, "uniform | uniform:<w> | degenerate");

    auto* fig = app.add_subcommand("figures", "liquidation rate and inventory for several kappa");
    common_options(fig, cfg, false);
    fig->add_option("--kappas", cfg.kappas, "kappa values")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mfgliq::kExitInvalidConfig;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();

    const mfgliq::RunResult r = mfgliq::run(cfg);
    if (r.exit_code != 0) std::cerr << "mfgliq: " << r.message << "\n";
    for (const auto& f : r.outputs) std::cout << r.out_dir << "/" << f << "\n";
    return r.exit_code;
}
