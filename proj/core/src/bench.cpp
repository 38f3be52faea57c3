// SPDX-License-Identifier: Apache-2.0

#include "xlmimo/bench.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace xlmimo {

namespace fs = std::filesystem;
using json = nlohmann::json;

NmseValue nmse(const CVec& h_true, const CVec& h_est) {
    const double denom = h_true.squaredNorm();
    if (denom <= 0) throw std::domain_error("nmse: zero true channel");
    const double lin = (h_true - h_est).squaredNorm() / denom;
    return NmseValue{lin, 10.0 * std::log10(std::max(lin, 1e-10))};
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial,
                          std::uint64_t stream, std::uint64_t axis) {
    // splitmix64 finalizer over a mixed counter
    std::uint64_t x = master;
    for (std::uint64_t w : {trial, stream, axis}) {
        x += 0x9E3779B97F4A7C15ull + w * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        x ^= x >> 31;
    }
    return x;
}

SweepConfig SweepConfig::desk_profile() {
    SweepConfig cfg;
    cfg.scenario.n_antennas = 64;
    cfg.scenario.n_subarrays = 4;
    cfg.scenario.n_paths = 2;
    cfg.n_angles = 64;
    cfg.default_tp = 16;
    return cfg;
}

SweepConfig SweepConfig::paper_profile() {
    SweepConfig cfg;
    cfg.scenario.n_antennas = 256;
    cfg.scenario.n_subarrays = 4;
    cfg.scenario.n_paths = 2;
    cfg.n_angles = 256;
    cfg.default_tp = 32;
    return cfg;
}

void SweepConfig::validate() const {
    if (n_trials < 1) throw std::invalid_argument("SweepConfig: n_trials must be >= 1");
    if (snr_grid.empty() || pilot_grid.empty())
        throw std::invalid_argument("SweepConfig: grids must be nonempty");
    if (estimators.empty()) throw std::invalid_argument("SweepConfig: estimator list is empty");
    for (const auto& e : estimators)
        if (e != "assbl" && e != "polar_omp" && e != "oracle_ls")
            throw std::invalid_argument("SweepConfig: unknown estimator " + e);
    assbl.validate();
}

int SweepConfig::resolved_omp_iters() const {
    if (omp_iters > 0) return omp_iters;
    const int g = scenario.n_subarrays;
    const int mean_run = ((g + 1) / 2 + g + 1) / 2;  // mean of {ceil(G/2)..G}, rounded
    return scenario.n_paths * mean_run;
}

namespace {

std::uint64_t hash_bytes(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

enum : std::uint64_t { kStreamChannel = 1, kStreamCombiner = 2, kStreamNoise = 3 };

}  // namespace

TrialInstance make_trial_instance(const SweepConfig& cfg, int trial_id,
                                  double snr_db, int t_p) {
    TrialInstance inst;
    inst.geom = ArrayGeometry::make(cfg.scenario.n_antennas, cfg.scenario.carrier_freq);
    inst.layout = SubArrayLayout::make(cfg.scenario.n_antennas, cfg.scenario.n_subarrays);
    inst.pilot = PilotConfig{t_p, cfg.n_rf, snr_db};

    // Channel depends only on (master, trial); combiner and noise also on T_p,
    // never on the SNR point or the estimator list.
    Rng chan_rng(derive_seed(cfg.master_seed, trial_id, kStreamChannel));
    const auto paths = sample_paths(chan_rng, cfg.scenario.n_paths, cfg.scenario);
    inst.truth = synthesize_channel(inst.geom, inst.layout, paths);
    inst.channel_hash = hash_bytes(inst.truth.h.data(), inst.truth.h.size() * sizeof(Complex));

    Rng comb_rng(derive_seed(cfg.master_seed, trial_id, kStreamCombiner, t_p));
    inst.combiner = generate_combiner(comb_rng, inst.geom, inst.pilot);

    Rng noise_rng(derive_seed(cfg.master_seed, trial_id, kStreamNoise, t_p));
    const CVec unit = draw_unit_noise(noise_rng, inst.pilot.m_obs());
    const Observation obs = observe_with_noise(inst.truth, inst.combiner, inst.pilot, unit);
    inst.y = obs.y;
    inst.noise_var = obs.noise_var;
    return inst;
}

namespace {

struct EstimateOutput {
    CVec h_hat;
    int iterations = 0;
};

EstimateOutput run_estimator(const std::string& name, const SweepConfig& cfg,
                             const TrialInstance& inst) {
    if (name == "assbl") {
        AssblResult r = assbl_estimate(inst.y, inst.combiner, inst.geom, inst.layout,
                                       cfg.n_angles, cfg.assbl);
        return {std::move(r.h_hat), r.iterations};
    }
    if (name == "polar_omp") {
        const PolarDictionary pdict = build_polar_dictionary(inst.geom, cfg.n_angles, cfg.polar_rule);
        OmpResult r = polar_omp(inst.y, inst.combiner, pdict, inst.layout,
                                cfg.resolved_omp_iters());
        return {std::move(r.h_hat), static_cast<int>(r.residual_norms.size())};
    }
    if (name == "oracle_ls")
        return {oracle_ls(inst.y, inst.combiner, inst.geom, inst.layout, inst.truth), 1};
    throw std::invalid_argument("unknown estimator " + name);
}

}  // namespace

std::vector<TrialRecord> run_trial(const SweepConfig& cfg, int trial_id,
                                   double snr_db, int t_p) {
    const TrialInstance inst = make_trial_instance(cfg, trial_id, snr_db, t_p);
    std::vector<TrialRecord> records;
    records.reserve(cfg.estimators.size());
    for (const auto& name : cfg.estimators) {
        TrialRecord rec;
        rec.trial_id = trial_id;
        rec.estimator = name;
        rec.snr_db = snr_db;
        rec.t_p = t_p;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const EstimateOutput out = run_estimator(name, cfg, inst);
            const NmseValue v = nmse(inst.truth.h, out.h_hat);
            rec.nmse_linear = v.linear;
            rec.nmse_db = v.db;
            rec.iterations = out.iterations;
        } catch (const std::exception&) {
            rec.nmse_linear = std::numeric_limits<double>::quiet_NaN();
            rec.nmse_db = std::numeric_limits<double>::quiet_NaN();
        }
        // Serial mode promises byte-identical CSV output across runs, so the
        // inherently noisy per-trial timing is zeroed there; aggregate wall
        // time is still reported in the run manifest.
        rec.wall_ms = cfg.serial ? 0.0
                                 : std::chrono::duration<double, std::milli>(
                                       std::chrono::steady_clock::now() - t0)
                                       .count();
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<SweepSummaryRow> aggregate(const std::vector<TrialRecord>& trials) {
    std::map<std::tuple<std::string, double, int>, std::pair<double, int>> acc;
    for (const auto& t : trials) {
        if (!std::isfinite(t.nmse_linear)) continue;
        auto& [sum, count] = acc[{t.estimator, t.snr_db, t.t_p}];
        sum += t.nmse_linear;
        ++count;
    }
    std::vector<SweepSummaryRow> rows;
    for (const auto& [key, val] : acc) {
        SweepSummaryRow r;
        r.estimator = std::get<0>(key);
        r.snr_db = std::get<1>(key);
        r.t_p = std::get<2>(key);
        r.n_ok = val.second;
        r.mean_nmse_linear = val.first / val.second;
        r.mean_nmse_db = 10.0 * std::log10(std::max(r.mean_nmse_linear, 1e-10));
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

std::string csv_num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& trials) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "trial_id,estimator,snr_db,t_p,nmse_linear,nmse_db,wall_ms,iters\n";
    for (const auto& t : trials)
        f << t.trial_id << ',' << t.estimator << ',' << csv_num(t.snr_db) << ',' << t.t_p
          << ',' << csv_num(t.nmse_linear) << ',' << csv_num(t.nmse_db) << ','
          << csv_num(t.wall_ms) << ',' << t.iterations << '\n';
}

void write_summary_csv(const std::string& path, const std::vector<SweepSummaryRow>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "estimator,snr_db,t_p,mean_nmse_linear,mean_nmse_db,n_ok\n";
    for (const auto& r : rows)
        f << r.estimator << ',' << csv_num(r.snr_db) << ',' << r.t_p << ','
          << csv_num(r.mean_nmse_linear) << ',' << csv_num(r.mean_nmse_db) << ',' << r.n_ok
          << '\n';
}

void write_plot_script(const std::string& path, SweepAxis axis,
                       const std::string& summary_csv) {
    const std::string xcol = axis == SweepAxis::Snr ? "snr_db" : "t_p";
    const std::string xlabel = axis == SweepAxis::Snr ? "SNR [dB]" : "pilot length T_p";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "#!/usr/bin/env python3\n"
      << "import csv, collections\n"
      << "import matplotlib\n"
      << "matplotlib.use('Agg')\n"
      << "import matplotlib.pyplot as plt\n"
      << "rows = list(csv.DictReader(open('" << fs::path(summary_csv).filename().string()
      << "')))\n"
      << "curves = collections.defaultdict(list)\n"
      << "for r in rows:\n"
      << "    curves[r['estimator']].append((float(r['" << xcol << "']), float(r['mean_nmse_db'])))\n"
      << "for name, pts in sorted(curves.items()):\n"
      << "    pts.sort()\n"
      << "    plt.plot([p[0] for p in pts], [p[1] for p in pts], marker='o', label=name)\n"
      << "plt.xlabel('" << xlabel << "')\n"
      << "plt.ylabel('NMSE [dB]')\n"
      << "plt.grid(True)\n"
      << "plt.legend()\n"
      << "plt.savefig('nmse_vs_" << xcol << ".png', dpi=150)\n"
      << "print('wrote nmse_vs_" << xcol << ".png')\n";
}

}  // namespace

void save_manifest(const SweepConfig& cfg, SweepAxis axis, double wall_s,
                   const std::string& path) {
    json j;
    j["axis"] = axis == SweepAxis::Snr ? "snr" : "pilot";
    j["wall_seconds"] = wall_s;
    j["config"] = {
        {"scenario",
         {{"n_antennas", cfg.scenario.n_antennas},
          {"carrier_freq", cfg.scenario.carrier_freq},
          {"n_subarrays", cfg.scenario.n_subarrays},
          {"n_paths", cfg.scenario.n_paths},
          {"angle_min", cfg.scenario.angle_min},
          {"angle_max", cfg.scenario.angle_max},
          {"dist_min", cfg.scenario.dist_min},
          {"dist_max", cfg.scenario.dist_max}}},
        {"n_rf", cfg.n_rf},
        {"n_angles", cfg.n_angles},
        {"estimators", cfg.estimators},
        {"snr_grid", cfg.snr_grid},
        {"pilot_grid", cfg.pilot_grid},
        {"fig3_snr_db", cfg.fig3_snr_db},
        {"default_tp", cfg.default_tp},
        {"n_trials", cfg.n_trials},
        {"master_seed", cfg.master_seed},
        {"serial", cfg.serial},
        {"omp_iters", cfg.resolved_omp_iters()},
        {"assbl",
         {{"beta", cfg.assbl.beta},
          {"chi", cfg.assbl.chi},
          {"max_iter", cfg.assbl.max_iter},
          {"tol", cfg.assbl.tol},
          {"n_refine", cfg.assbl.n_refine},
          {"prune_threshold", cfg.assbl.prune_threshold},
          {"init_distance", cfg.assbl.init_distance}}}};
    j["versions"] = {{"eigen", EIGEN_WORLD_VERSION * 10000 + EIGEN_MAJOR_VERSION * 100 +
                                   EIGEN_MINOR_VERSION},
                     {"cxx_standard", __cplusplus}};
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << '\n';
}

SweepResult sweep(const SweepConfig& cfg, SweepAxis axis) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    // Probe writability before doing any computation.
    const std::string probe = (fs::path(cfg.output_dir) / ".probe").string();
    {
        std::ofstream p(probe);
        if (!p) throw std::runtime_error("sweep: output dir not writable: " + cfg.output_dir);
    }
    fs::remove(probe);

    struct Point {
        double snr;
        int tp;
    };
    std::vector<Point> points;
    if (axis == SweepAxis::Snr)
        for (double s : cfg.snr_grid) points.push_back({s, cfg.default_tp});
    else
        for (int tp : cfg.pilot_grid) points.push_back({cfg.fig3_snr_db, tp});

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<TrialRecord>> cells(points.size() * cfg.n_trials);
    auto job = [&](size_t idx) {
        const auto& pt = points[idx / cfg.n_trials];
        const int trial = static_cast<int>(idx % cfg.n_trials);
        cells[idx] = run_trial(cfg, trial, pt.snr, pt.tp);
    };

    if (cfg.serial) {
        for (size_t i = 0; i < cells.size(); ++i) job(i);
    } else {
        const unsigned n_workers = std::max(1u, std::thread::hardware_concurrency());
        std::atomic<size_t> next{0};
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < n_workers; ++w)
            workers.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) job(i);
            });
        for (auto& t : workers) t.join();
    }

    SweepResult result;
    for (auto& c : cells)
        result.trials.insert(result.trials.end(), std::make_move_iterator(c.begin()),
                             std::make_move_iterator(c.end()));
    result.summary = aggregate(result.trials);

    const std::string tag = axis == SweepAxis::Snr ? "snr" : "pilot";
    result.trials_csv = (fs::path(cfg.output_dir) / ("trials_" + tag + ".csv")).string();
    result.summary_csv = (fs::path(cfg.output_dir) / ("summary_" + tag + ".csv")).string();
    result.plot_script = (fs::path(cfg.output_dir) / ("plot_" + tag + ".py")).string();
    result.manifest_json = (fs::path(cfg.output_dir) / ("manifest_" + tag + ".json")).string();

    write_trials_csv(result.trials_csv, result.trials);
    write_summary_csv(result.summary_csv, result.summary);
    write_plot_script(result.plot_script, axis, result.summary_csv);
    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_manifest(cfg, axis, wall_s, result.manifest_json);
    return result;
}

SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config " + path);
    json j;
    f >> j;

    SweepConfig cfg = j.value("profile", "desk") == std::string("paper")
                          ? SweepConfig::paper_profile()
                          : SweepConfig::desk_profile();
    if (j.contains("scenario")) {
        const auto& s = j["scenario"];
        cfg.scenario.n_antennas = s.value("n_antennas", cfg.scenario.n_antennas);
        cfg.scenario.carrier_freq = s.value("carrier_freq", cfg.scenario.carrier_freq);
        cfg.scenario.n_subarrays = s.value("n_subarrays", cfg.scenario.n_subarrays);
        cfg.scenario.n_paths = s.value("n_paths", cfg.scenario.n_paths);
        cfg.scenario.angle_min = s.value("angle_min", cfg.scenario.angle_min);
        cfg.scenario.angle_max = s.value("angle_max", cfg.scenario.angle_max);
        cfg.scenario.dist_min = s.value("dist_min", cfg.scenario.dist_min);
        cfg.scenario.dist_max = s.value("dist_max", cfg.scenario.dist_max);
    }
    cfg.n_rf = j.value("n_rf", cfg.n_rf);
    cfg.n_angles = j.value("n_angles", cfg.n_angles);
    if (j.contains("estimators")) cfg.estimators = j["estimators"].get<std::vector<std::string>>();
    if (j.contains("snr_grid")) cfg.snr_grid = j["snr_grid"].get<std::vector<double>>();
    if (j.contains("pilot_grid")) cfg.pilot_grid = j["pilot_grid"].get<std::vector<int>>();
    cfg.fig3_snr_db = j.value("fig3_snr_db", cfg.fig3_snr_db);
    cfg.default_tp = j.value("default_tp", cfg.default_tp);
    cfg.n_trials = j.value("n_trials", cfg.n_trials);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.serial = j.value("serial", cfg.serial);
    cfg.omp_iters = j.value("omp_iters", cfg.omp_iters);
    if (j.contains("assbl")) {
        const auto& a = j["assbl"];
        cfg.assbl.beta = a.value("beta", cfg.assbl.beta);
        cfg.assbl.chi = a.value("chi", cfg.assbl.chi);
        cfg.assbl.max_iter = a.value("max_iter", cfg.assbl.max_iter);
        cfg.assbl.tol = a.value("tol", cfg.assbl.tol);
        cfg.assbl.n_refine = a.value("n_refine", cfg.assbl.n_refine);
        cfg.assbl.prune_threshold = a.value("prune_threshold", cfg.assbl.prune_threshold);
        cfg.assbl.init_distance = a.value("init_distance", cfg.assbl.init_distance);
    }
    return cfg;
}

bool selftest(std::ostream& os) {
    bool ok = true;
    auto check = [&](const char* name, bool pass) {
        os << (pass ? "PASS " : "FAIL ") << name << '\n';
        ok = ok && pass;
    };

    const auto geom = ArrayGeometry::make(32, 100e9);
    const auto layout = SubArrayLayout::make(32, 4);
    Rng rng(7);

    // Steering norms + far-field limit.
    {
        bool norms = true, far = true;
        std::uniform_real_distribution<double> th(-0.9, 0.9), rr(5.0, 100.0);
        const Vec delta = antenna_offsets(geom);
        for (int i = 0; i < 20; ++i) {
            const double theta = th(rng);
            norms = norms && std::abs(steering_vector(geom, theta, rr(rng)).norm() - 1.0) < 1e-12;
            const CVec a = steering_vector(geom, theta, 1e12);
            for (int n = 0; n < 32; ++n) {
                const Complex ff = std::polar(1.0 / std::sqrt(32.0),
                                              2.0 * std::numbers::pi / geom.wavelength * delta[n] *
                                                  geom.spacing * theta);
                far = far && std::abs(a[n] - ff) < 1e-6;
            }
        }
        check("steering unit norm", norms);
        check("steering far-field limit", far);
    }

    // E-step Woodbury vs direct.
    {
        bool agree = true;
        for (int t = 0; t < 5; ++t) {
            const int k = 16, m = 8;
            CMat psi(m, k);
            std::normal_distribution<double> gauss;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < k; ++j) psi(i, j) = Complex(gauss(rng), gauss(rng));
            CVec y(m);
            for (int i = 0; i < m; ++i) y[i] = Complex(gauss(rng), gauss(rng));
            Vec omega = Vec::Random(k).array().abs() + 0.1;
            const Posterior w = e_step(psi, y, 2.0, omega, 4);
            // direct route
            CMat a = 2.0 * (psi.adjoint() * psi);
            a.diagonal() += omega.cwiseInverse().cast<Complex>();
            const CMat direct = a.inverse();
            agree = agree && (w.sigma_mat - direct).norm() / direct.norm() < 1e-8;
        }
        check("e-step woodbury/direct agreement", agree);
    }

    // Distance gradient vs finite differences.
    {
        bool fd_ok = true;
        const int u_angles = 8;
        AdaptiveDictionary adict(geom, layout, u_angles, 20.0);
        PilotConfig pilot{4, 2, 10.0};
        Combiner w = generate_combiner(rng, geom, pilot);
        CMat psi = effective_sensing(w, adict);
        const int k = adict.n_coeffs();
        std::normal_distribution<double> gauss;
        CVec mu(k), y(pilot.m_obs());
        for (int i = 0; i < k; ++i) mu[i] = Complex(gauss(rng), gauss(rng));
        for (int i = 0; i < pilot.m_obs(); ++i) y[i] = Complex(gauss(rng), gauss(rng));
        CMat b = CMat::Random(k, k);
        CMat sig = (b * b.adjoint()) / k;
        for (int u = 2; u < 5; ++u) {
            const double analytic = distance_gradient(u, psi, w, adict, mu, sig, 1.5, y);
            const double h = 1e-6;
            const double inv0 = adict.inv_distance(u);
            auto q_at = [&](double inv_r) {
                AdaptiveDictionary d2 = adict;
                d2.set_inv_distance(u, inv_r);
                return q_dictionary(effective_sensing(w, d2), mu, sig, 1.5, y);
            };
            const double fd = (q_at(inv0 + h) - q_at(inv0 - h)) / (2 * h);
            fd_ok = fd_ok && std::abs(analytic - fd) <= 1e-4 * std::max(1.0, std::abs(fd));
        }
        check("distance gradient finite-difference", fd_ok);
    }

    // Gamma root residual.
    {
        bool root_ok = true;
        std::uniform_real_distribution<double> un(0.1, 5.0);
        for (int t = 0; t < 20; ++t) {
            const double lam = un(rng), s = un(rng);
            const int g = 4;
            const double gamma = 2.0 * s / (g + std::sqrt(g * g + 4.0 * lam * s));
            const double resid = std::abs(lam * gamma * gamma + g * gamma - s);
            root_ok = root_ok && resid <= 1e-10 * (g + lam * gamma * gamma + s);
        }
        check("gamma quadratic root residual", root_ok);
    }

    os << (ok ? "selftest: all checks passed\n" : "selftest: FAILURES\n");
    return ok;
}

}  // namespace xlmimo
