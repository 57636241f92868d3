// SPDX-License-Identifier: MIT
//
// Penalized equilibria for a time-varying spec, loaded from JSON.
#include "mfgliq/mfgliq.hpp"

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
    using namespace mfgliq;
    if (argc < 2) {
        std::cerr << "usage: sample_penalization_sweep model.json\n";
        return 1;
    }
    try {
        const LoadedModel m = load_model(argv[1]);
        ConvergenceOptions opt;
        opt.n_list = {1.0, 10.0, 100.0, 1000.0};
        const ConvergenceTable table = convergence_experiment(m.spec, opt);
        std::printf("V = %.10f\n", table.value);
        std::printf("%8s %14s %14s %14s\n", "n", "V_n", "|X_n(T)|", "l2 X");
        for (const auto& r : table.rows) std::printf("%8g %14.10f %14.4e %14.4e\n", r.n, r.value_n, r.terminal, r.l2_X);
        std::printf("slope of |X_n(T)|: %.3f\n", table.terminal_slope);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
