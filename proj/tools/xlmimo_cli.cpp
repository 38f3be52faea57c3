// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: Monte Carlo sweeps, single-instance estimation and
// the built-in property selftest.

#include "xlmimo/bench.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace xlmimo;

struct CommonOpts {
    std::string config_path;
    std::string profile = "desk";
    std::vector<double> snr;
    std::vector<int> tp;
    int trials = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    bool serial = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--profile", o.profile, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--snr", o.snr, "SNR grid override [dB]");
    cmd->add_option("--tp", o.tp, "pilot length grid override");
    cmd->add_option("--trials", o.trials, "number of Monte Carlo trials");
    cmd->add_option("--seed", o.seed, "master seed")->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_flag("--serial", o.serial, "run trials serially (bitwise reproducible)");
}

SweepConfig resolve_config(const CommonOpts& o) {
    SweepConfig cfg;
    if (!o.config_path.empty())
        cfg = load_sweep_config(o.config_path);
    else
        cfg = o.profile == "paper" ? SweepConfig::paper_profile() : SweepConfig::desk_profile();
    if (!o.snr.empty()) cfg.snr_grid = o.snr;
    if (!o.tp.empty()) cfg.pilot_grid = o.tp;
    if (o.trials > 0) cfg.n_trials = o.trials;
    if (o.seed_set) cfg.master_seed = o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.serial) cfg.serial = true;
    return cfg;
}

int run_sweep(const CommonOpts& o, SweepAxis axis) {
    const SweepConfig cfg = resolve_config(o);
    const SweepResult res = sweep(cfg, axis);
    std::cout << "wrote " << res.trials_csv << '\n'
              << "wrote " << res.summary_csv << '\n'
              << "wrote " << res.plot_script << '\n'
              << "wrote " << res.manifest_json << '\n';
    for (const auto& r : res.summary)
        std::cout << r.estimator << "  snr=" << r.snr_db << " dB  T_p=" << r.t_p
                  << "  NMSE=" << r.mean_nmse_db << " dB  (" << r.n_ok << " trials)\n";
    return 0;
}

int run_estimate(const CommonOpts& o) {
    SweepConfig cfg = resolve_config(o);
    const double snr = cfg.snr_grid.empty() ? 15.0 : cfg.snr_grid.front();
    const int tp = cfg.default_tp;
    std::cout << "single instance: N=" << cfg.scenario.n_antennas << " G="
              << cfg.scenario.n_subarrays << " U=" << cfg.n_angles << " T_p=" << tp
              << " SNR=" << snr << " dB seed=" << cfg.master_seed << '\n';
    const auto records = run_trial(cfg, 0, snr, tp);
    for (const auto& r : records)
        std::cout << r.estimator << ": NMSE=" << r.nmse_db << " dB  iters=" << r.iterations
                  << "  wall=" << r.wall_ms << " ms\n";

    // Per-iteration diagnostics for the Bayesian estimator.
    const TrialInstance inst = make_trial_instance(cfg, 0, snr, tp);
    AssblConfig acfg = cfg.assbl;
    const AssblResult res = assbl_estimate(inst.y, inst.combiner, inst.geom, inst.layout,
                                           cfg.n_angles, acfg);
    std::cout << "iter,q,sigma,active_blocks,dalpha\n";
    for (const auto& d : res.diagnostics)
        std::cout << d.iter << ',' << d.q << ',' << d.sigma << ',' << d.active_blocks << ','
                  << d.dalpha << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field XL-MIMO channel estimation bench"};
    app.require_subcommand(1);

    CommonOpts o_snr, o_pilot, o_est;
    auto* snr_cmd = app.add_subcommand("sweep-snr", "NMSE vs SNR sweep");
    add_common(snr_cmd, o_snr);
    auto* pilot_cmd = app.add_subcommand("sweep-pilot", "NMSE vs pilot length sweep");
    add_common(pilot_cmd, o_pilot);
    auto* est_cmd = app.add_subcommand("estimate", "run one instance and print diagnostics");
    add_common(est_cmd, o_est);
    auto* self_cmd = app.add_subcommand("selftest", "run the built-in property suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (snr_cmd->parsed()) return run_sweep(o_snr, xlmimo::SweepAxis::Snr);
        if (pilot_cmd->parsed()) return run_sweep(o_pilot, xlmimo::SweepAxis::Pilot);
        if (est_cmd->parsed()) return run_estimate(o_est);
        if (self_cmd->parsed()) return xlmimo::selftest(std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
