#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "chemrep/runner.hpp"

using namespace chemrep;

namespace {

ExperimentConfig build_config(const std::string& config_path, const std::string& preset,
                              const std::string& scheme, const std::string& out_dir,
                              int snapshot_every, unsigned seed) {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = load_config(config_path);
    } else if (!preset.empty()) {
        cfg = config_from_preset(preset, scheme.empty() ? SchemeKind::UV
                                                        : scheme_from_name(scheme));
    } else {
        throw std::invalid_argument("either --config or --preset is required");
    }
    if (!scheme.empty()) cfg.scheme = scheme_from_name(scheme);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (snapshot_every > 0) cfg.snapshot_every = snapshot_every;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

int do_run(const ExperimentConfig& cfg) {
    std::cout << config_echo(cfg) << "\n";
    const RunReport rep = run(cfg);

    if (!rep.records.empty()) {
        const auto& last = rep.records.back();
        std::printf("steps: %d   t_end: %.6g   mass(u): %.12g (m0*|Omega| = %.12g)\n",
                    last.step, last.t, last.mass_u,
                    rep.m0 * cfg.mesh.lx * cfg.mesh.ly);
        std::printf("energy: %.12g -> %.12g   min(u): %.6g   min(v): %.6g\n",
                    rep.records.front().energy, last.energy, last.min_u, last.min_v);
        if (rep.c_p > 0.0)
            std::printf("C_p: %.6g   K_p: %.6g   proved u-decay rate: %.6g\n", rep.c_p, rep.k_p,
                        2.0 * rep.k_p / (1.0 + 2.0 * rep.k_p * cfg.k));
        if (rep.records.size() > 10) {
            std::vector<double> t, yu, yv;
            for (const auto& r : rep.records) {
                t.push_back(r.t);
                yu.push_back(r.uhat_sq + r.grad_or_sigma_sq);
                yv.push_back(r.vhat_sq);
            }
            try {
                const DecayFit fu = decay_fit(t, yu);
                const DecayFit fv = decay_fit(t, yv);
                std::printf("fitted decay rates: ||(u-m0, grad v or sigma)||^2: %.6g (r2=%.4f)"
                            "   ||v-m0^2||^2: %.6g (r2=%.4f)\n",
                            fu.rate, fu.r_squared, fv.rate, fv.r_squared);
            } catch (const std::exception&) {
                // short or non-positive series; skip the fit summary
            }
        }
    }
    if (rep.failed) {
        std::cerr << "run failed: " << rep.failure_reason << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-element schemes for the chemo-repulsion system with quadratic production"};
    app.require_subcommand(1);

    std::string config_path, preset, scheme, out_dir, eps_list_str;
    int snapshot_every = 0;
    unsigned seed = 0;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--preset", preset, "preset name (see presets-list)");
        cmd->add_option("--scheme", scheme, "UV | US | US_EPS");
        cmd->add_option("--out", out_dir, "output directory (CSV report + VTK snapshots)");
        cmd->add_option("--snapshot-every", snapshot_every, "write VTK fields every N steps");
        cmd->add_option("--seed", seed, "reserved");
    };

    CLI::App* cmd_run = app.add_subcommand("run", "advance one scheme and write diagnostics");
    add_common(cmd_run);

    CLI::App* cmd_sweep =
        app.add_subcommand("sweep", "run US_EPS across a list of regularization parameters");
    add_common(cmd_sweep);
    cmd_sweep->add_option("--eps-list", eps_list_str, "comma-separated eps values")->required();

    CLI::App* cmd_presets = app.add_subcommand("presets-list", "print the built-in presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_presets->parsed()) {
            std::printf("%-22s %-8s %-10s %-8s %-8s\n", "name", "k", "cells/unit", "eps", "T");
            for (const auto& p : presets())
                std::printf("%-22s %-8g %-10d %-8g %-8g\n", p.name.c_str(), p.k, p.cells_per_unit,
                            p.eps, p.t_final);
            return 0;
        }

        if (cmd_run->parsed())
            return do_run(build_config(config_path, preset, scheme, out_dir, snapshot_every, seed));

        if (cmd_sweep->parsed()) {
            ExperimentConfig cfg =
                build_config(config_path, preset, scheme.empty() ? "US_EPS" : scheme, out_dir,
                             snapshot_every, seed);
            std::vector<double> eps_values;
            std::stringstream ss(eps_list_str);
            for (std::string tok; std::getline(ss, tok, ',');) eps_values.push_back(std::stod(tok));
            const auto rows = sweep_eps(cfg, eps_values);
            std::printf("%-12s %-22s %-22s\n", "eps", "max |Pi(u_-)|_h^2", "min u");
            for (const auto& r : rows)
                std::printf("%-12g %-22.12g %-22.12g\n", r.eps, r.max_negpart_sq, r.min_u);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
