// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo harness: NMSE metric, seeded paired trials, SNR / pilot-length
// sweeps with CSV + manifest outputs.

#pragma once

#include "xlmimo/assbl.hpp"
#include "xlmimo/baselines.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace xlmimo {

struct NmseValue {
    double linear = 0;
    double db = 0;  // clamped at -100 dB
};

// Per-trial ratio ||h - h_hat||^2 / ||h||^2; aggregation over trials is the
// arithmetic mean of the linear ratios.
NmseValue nmse(const CVec& h_true, const CVec& h_est);

// Counter-based seed derivation; adding estimators or axis points never
// perturbs the channel draws of existing trials.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial,
                          std::uint64_t stream, std::uint64_t axis = 0);

struct SweepConfig {
    ScenarioConfig scenario;      // desk profile by default
    int n_rf = 4;
    int n_angles = 64;            // U, shared by ASSBL and the polar dictionary
    std::vector<std::string> estimators = {"assbl", "polar_omp", "oracle_ls"};
    AssblConfig assbl;
    PolarGridRule polar_rule;
    int omp_iters = 0;            // 0 = auto: L * mean visible sub-arrays

    std::vector<double> snr_grid = {0, 5, 10, 15, 20, 25};
    std::vector<int> pilot_grid = {8, 16, 24, 32, 40};
    double fig3_snr_db = 15.0;    // SNR used by the pilot sweep
    int default_tp = 16;          // T_p used by the SNR sweep
    int n_trials = 100;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    bool serial = false;

    static SweepConfig desk_profile();
    static SweepConfig paper_profile();
    void validate() const;
    int resolved_omp_iters() const;
};

// Everything estimators see in one trial; shared across estimators so
// comparisons are paired.
struct TrialInstance {
    ArrayGeometry geom;
    SubArrayLayout layout;
    ChannelRealization truth;
    Combiner combiner;
    PilotConfig pilot;
    CVec y;
    double noise_var = 0;
    std::uint64_t channel_hash = 0;
};

struct TrialRecord {
    int trial_id = 0;
    std::string estimator;
    double snr_db = 0;
    int t_p = 0;
    double nmse_linear = 0;  // NaN when the estimator failed
    double nmse_db = 0;
    double wall_ms = 0;
    int iterations = 0;
};

TrialInstance make_trial_instance(const SweepConfig& cfg, int trial_id,
                                  double snr_db, int t_p);

// Runs every configured estimator on one shared instance.
std::vector<TrialRecord> run_trial(const SweepConfig& cfg, int trial_id,
                                   double snr_db, int t_p);

enum class SweepAxis { Snr, Pilot };

struct SweepSummaryRow {
    std::string estimator;
    double snr_db = 0;
    int t_p = 0;
    double mean_nmse_linear = 0;
    double mean_nmse_db = 0;
    int n_ok = 0;
};

struct SweepResult {
    std::vector<TrialRecord> trials;
    std::vector<SweepSummaryRow> summary;
    std::string trials_csv, summary_csv, manifest_json, plot_script;
};

// Runs the full grid, writes the long-format CSV, the aggregated CSV, a plot
// script and a JSON run manifest into cfg.output_dir.
SweepResult sweep(const SweepConfig& cfg, SweepAxis axis);

std::vector<SweepSummaryRow> aggregate(const std::vector<TrialRecord>& trials);

// Quick property suite (steering norms, E-step consistency, M-step
// stationarity, gradient checks); prints one line per check.
bool selftest(std::ostream& os);

SweepConfig load_sweep_config(const std::string& path);
void save_manifest(const SweepConfig& cfg, SweepAxis axis, double wall_s,
                   const std::string& path);

}  // namespace xlmimo
