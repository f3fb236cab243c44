#include "stapcal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "stapcal/config_io.hpp"

namespace stapcal {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Order-independent parallel loop; fn(i) must only touch slot i of its output.
void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<bool> failed{false};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                if (failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    failed.store(true);
                    throw;  // terminates; trial functions are not expected to throw
                }
            }
        });
    }
    for (auto& t : pool) t.join();
}

std::ofstream open_output(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::vector<TargetSpec> snapped_targets(const ExperimentSpec& spec, const AngleDopplerGrid& grid,
                                        const std::vector<TargetSpec>& targets) {
    if (!spec.snap_targets_to_grid) return targets;
    std::vector<TargetSpec> out = targets;
    for (TargetSpec& t : out) {
        t.doppler = grid.snap_doppler(t.doppler);
        t.spatial = grid.snap_spatial(t.spatial);
    }
    return out;
}

}  // namespace

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::kJieAdm: return "jie-adm";
        case Algorithm::kAdm: return "adm";
        case Algorithm::kAdmt: return "admt";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "jie-adm") return Algorithm::kJieAdm;
    if (name == "adm") return Algorithm::kAdm;
    if (name == "admt") return Algorithm::kAdmt;
    throw std::invalid_argument("unknown algorithm \"" + name + "\" (expected jie-adm, adm, admt)");
}

ExperimentSpec::ExperimentSpec() {
    // Desk-scale default; the published system size is available through the presets.
    radar.num_elements = 8;
    radar.num_pulses = 8;
}

void ExperimentSpec::validate() const {
    radar.validate();
    solver.validate();
    detector.validate();
    if (rho_s <= 1.0 || rho_d <= 1.0) throw std::invalid_argument("spec: grid factors must be > 1");
    if (algorithms.empty()) throw std::invalid_argument("spec: algorithms must be nonempty");
    if (error_cases.empty()) throw std::invalid_argument("spec: error_cases must be nonempty");
    for (const ErrorCase& e : error_cases) {
        if (e.eps_max < 0.0 || e.eps_max >= 1.0) {
            throw std::invalid_argument("spec: eps_max must lie in [0, 1)");
        }
        if (e.phi_max < 0.0) throw std::invalid_argument("spec: phi_max must be >= 0");
    }
    if (num_trials < 1) throw std::invalid_argument("spec: num_trials must be >= 1");
    if (pfa <= 0.0 || pfa >= 1.0) throw std::invalid_argument("spec: pfa must lie in (0,1)");
    if (calibration_trials < 1) throw std::invalid_argument("spec: calibration_trials must be >= 1");
    if (!targets.empty() &&
        (pd_target_index < 0 || pd_target_index >= static_cast<int>(targets.size()))) {
        throw std::invalid_argument("spec: pd_target_index out of range");
    }
    if (workers < 0) throw std::invalid_argument("spec: workers must be >= 0");
}

ExperimentSpec ExperimentSpec::three_target_preset() {
    ExperimentSpec spec;
    spec.targets = {{-0.13, 0.0, 0.2}, {0.11, 0.0, -3.8}, {0.41, 0.0, -3.8}};
    spec.error_cases = {{0.0, 0.0},
                        {0.05, 0.05 * std::numbers::pi},
                        {0.1, 0.1 * std::numbers::pi}};
    spec.output_dir = "out/profiles";
    return spec;
}

ExperimentSpec ExperimentSpec::single_target_preset() {
    ExperimentSpec spec;
    spec.targets = {{0.36, 0.0, 0.0}};
    spec.error_cases = {{0.0, 0.0},
                        {0.05, 0.05 * std::numbers::pi},
                        {0.1, 0.1 * std::numbers::pi}};
    spec.detector.num_secondary = 4;
    spec.output_dir = "out/detection";
    return spec;
}

Scenario::Scenario(const ExperimentSpec& spec)
    : radar(spec.radar),
      grid(build_grid(spec.radar, spec.rho_s, spec.rho_d)),
      dict(grid, spec.radar.num_pulses, spec.radar.num_elements),
      solver(spec.solver),
      detector(spec.detector) {
    solver.tau = solver.resolve_tau(dict);  // resolve once, reused by every trial
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view purpose, int error_case,
                         int trial) {
    const std::uint64_t stream = hash_tag(purpose) ^ mix_seed(static_cast<std::uint64_t>(error_case)) ^
                                 mix_seed(0x7fffffffULL + static_cast<std::uint64_t>(trial) * 2ULL);
    return derive_seed(base_seed, stream);
}

TrialResult run_detection_trial(const Scenario& scenario, const ErrorCase& errors,
                                Algorithm algorithm, const std::vector<TargetSpec>& targets,
                                double test_doppler, std::uint64_t seed, double threshold_db) {
    Rng rng(seed);
    const GainPhaseError gp =
        draw_gp_errors(errors.eps_max, errors.phi_max, scenario.radar.num_elements, rng);
    const int num_secondary = scenario.detector.num_secondary;
    CMatrix snapshots(scenario.radar.dofs(), 1 + num_secondary);
    snapshots.col(0) = synthesize_snapshot(scenario.radar, gp, targets, rng);
    for (int l = 0; l < num_secondary; ++l) {
        snapshots.col(1 + l) = synthesize_snapshot(scenario.radar, gp, {}, rng);
    }

    const auto start = std::chrono::steady_clock::now();
    SolveReport report;
    switch (algorithm) {
        case Algorithm::kJieAdm:
            report = solve_jie_adm(snapshots, scenario.dict, scenario.solver);
            break;
        case Algorithm::kAdm:
            report = solve_adm_fixed_t(snapshots, scenario.dict, scenario.solver,
                                       CVector::Ones(scenario.radar.num_elements));
            break;
        case Algorithm::kAdmt:
            report = solve_adm_fixed_t(snapshots, scenario.dict, scenario.solver,
                                       gp.c.cwiseInverse());
            break;
    }
    const auto stop = std::chrono::steady_clock::now();

    const double fd = scenario.grid.snap_doppler(test_doppler);
    const double fs = scenario.detector.mainlobe_spatial;
    const int n = scenario.radar.num_pulses;
    const int m = scenario.radar.num_elements;
    const double cut_stat = test_statistic(
        extract_window(report.profiles.col(0), scenario.grid, n, m, fd, fs));
    std::vector<double> secondary;
    secondary.reserve(num_secondary);
    for (int l = 0; l < num_secondary; ++l) {
        secondary.push_back(test_statistic(
            extract_window(report.profiles.col(1 + l), scenario.grid, n, m, fd, fs)));
    }

    TrialResult result;
    result.statistic_db = cfar_statistic_db(cut_stat, median(secondary));
    result.detected = result.statistic_db > threshold_db;
    result.iterations = report.iterations;
    result.solve_seconds = std::chrono::duration<double>(stop - start).count();
    return result;
}

ThresholdCalibration calibrate_spec_threshold(const ExperimentSpec& spec, Algorithm algorithm,
                                              int error_case_index, double pfa, int num_trials) {
    spec.validate();
    if (spec.targets.empty()) throw std::invalid_argument("calibration: spec has no targets");
    const Scenario scenario(spec);
    const ErrorCase errors = spec.error_cases.at(error_case_index);
    const double test_doppler = spec.targets.at(spec.pd_target_index).doppler;

    const int workers = resolve_workers(spec.workers);
    std::vector<double> stats(num_trials);
    const std::uint64_t stream_base =
        derive_seed(spec.base_seed, hash_tag("calibration") ^
                                        mix_seed(static_cast<std::uint64_t>(error_case_index)));
    parallel_for(num_trials, workers, [&](int i) {
        const std::uint64_t seed = derive_seed(stream_base, static_cast<std::uint64_t>(i));
        stats[i] = run_detection_trial(scenario, errors, algorithm, {}, test_doppler, seed, 0.0)
                       .statistic_db;
    });
    // Reuse the order-statistic rule; trials already computed above.
    int index = 0;
    ThresholdCalibration cal = calibrate_threshold(
        [&](std::uint64_t) { return stats[index++]; }, pfa, num_trials, stream_base);
    cal.seed = spec.base_seed;
    return cal;
}

void run_profile_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const Scenario scenario(spec);
    const std::vector<TargetSpec> targets = snapped_targets(spec, scenario.grid, spec.targets);
    std::filesystem::create_directories(spec.output_dir);
    for (std::size_t ci = 0; ci < spec.error_cases.size(); ++ci) {
        const std::uint64_t seed = trial_seed(spec.base_seed, "profile", static_cast<int>(ci), 0);
        Rng rng(seed);
        const GainPhaseError gp = draw_gp_errors(spec.error_cases[ci].eps_max,
                                                 spec.error_cases[ci].phi_max,
                                                 spec.radar.num_elements, rng);
        CMatrix snapshots(spec.radar.dofs(), 1 + spec.detector.num_secondary);
        snapshots.col(0) = synthesize_snapshot(spec.radar, gp, targets, rng);
        for (int l = 0; l < spec.detector.num_secondary; ++l) {
            snapshots.col(1 + l) = synthesize_snapshot(spec.radar, gp, {}, rng);
        }
        for (Algorithm algo : spec.algorithms) {
            SolveReport report;
            switch (algo) {
                case Algorithm::kJieAdm:
                    report = solve_jie_adm(snapshots, scenario.dict, scenario.solver);
                    break;
                case Algorithm::kAdm:
                    report = solve_adm_fixed_t(snapshots, scenario.dict, scenario.solver,
                                               CVector::Ones(spec.radar.num_elements));
                    break;
                case Algorithm::kAdmt:
                    report = solve_adm_fixed_t(snapshots, scenario.dict, scenario.solver,
                                               gp.c.cwiseInverse());
                    break;
            }
            const std::string path = spec.output_dir + "/profile_case" + std::to_string(ci + 1) +
                                     "_" + to_string(algo) + ".csv";
            write_profile_csv(path, report.profiles.col(0), scenario.grid);
        }
    }
}

std::vector<PdPoint> run_pd_vs_snr(const ExperimentSpec& spec, const std::vector<double>& snr_grid,
                                   bool allow_small_trials) {
    spec.validate();
    if (spec.targets.empty()) throw std::invalid_argument("pd curve: spec has no targets");
    if (spec.num_trials < 50 && !allow_small_trials) {
        throw std::invalid_argument("pd curve: fewer than 50 trials; pass the override to proceed");
    }
    const Scenario scenario(spec);
    const TargetSpec base_target =
        snapped_targets(spec, scenario.grid, {spec.targets.at(spec.pd_target_index)})[0];
    const int workers = resolve_workers(spec.workers);

    std::vector<PdPoint> points;
    for (std::size_t ci = 0; ci < spec.error_cases.size(); ++ci) {
        std::vector<double> thresholds;
        for (Algorithm algo : spec.algorithms) {
            thresholds.push_back(calibrate_spec_threshold(spec, algo, static_cast<int>(ci),
                                                          spec.pfa, spec.calibration_trials)
                                     .threshold_db);
        }
        for (double snr : snr_grid) {
            TargetSpec target = base_target;
            target.snr_db = snr;
            std::vector<std::vector<char>> detections(spec.algorithms.size(),
                                                      std::vector<char>(spec.num_trials, 0));
            parallel_for(spec.num_trials, workers, [&](int trial) {
                const std::uint64_t seed =
                    trial_seed(spec.base_seed, "pd", static_cast<int>(ci), trial);
                for (std::size_t ai = 0; ai < spec.algorithms.size(); ++ai) {
                    const TrialResult r =
                        run_detection_trial(scenario, spec.error_cases[ci], spec.algorithms[ai],
                                            {target}, target.doppler, seed, thresholds[ai]);
                    detections[ai][trial] = r.detected ? 1 : 0;
                }
            });
            for (std::size_t ai = 0; ai < spec.algorithms.size(); ++ai) {
                int hits = 0;
                for (char d : detections[ai]) hits += d;
                PdPoint p;
                p.snr_db = snr;
                p.error_case = static_cast<int>(ci);
                p.algorithm = spec.algorithms[ai];
                p.pd = static_cast<double>(hits) / spec.num_trials;
                binomial_interval(hits, spec.num_trials, p.ci_lo, p.ci_hi);
                p.trials = spec.num_trials;
                points.push_back(p);
            }
        }
    }
    return points;
}

std::vector<RocPoint> run_roc(const ExperimentSpec& spec, const std::vector<double>& pfa_grid,
                              bool allow_small_trials) {
    spec.validate();
    if (spec.targets.empty()) throw std::invalid_argument("roc: spec has no targets");
    if (spec.num_trials < 50 && !allow_small_trials) {
        throw std::invalid_argument("roc: fewer than 50 trials; pass the override to proceed");
    }
    const Scenario scenario(spec);
    const int workers = resolve_workers(spec.workers);
    const ErrorCase errors = spec.error_cases.front();  // ROC study runs one error level
    const std::vector<TargetSpec> targets = snapped_targets(spec, scenario.grid, spec.targets);

    std::vector<RocPoint> points;
    for (Algorithm algo : spec.algorithms) {
        // H0 statistic sample per target bin (thresholds are bin-specific).
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
            const TargetSpec& target = targets[ti];
            std::vector<double> h0_stats(spec.calibration_trials);
            const std::uint64_t h0_base = derive_seed(
                spec.base_seed, hash_tag("roc-h0") ^ mix_seed(static_cast<std::uint64_t>(ti)));
            parallel_for(spec.calibration_trials, workers, [&](int i) {
                const std::uint64_t seed = derive_seed(h0_base, static_cast<std::uint64_t>(i));
                h0_stats[i] =
                    run_detection_trial(scenario, errors, algo, {}, target.doppler, seed, 0.0)
                        .statistic_db;
            });
            std::sort(h0_stats.begin(), h0_stats.end());

            std::vector<double> h1_stats(spec.num_trials);
            const std::uint64_t h1_base = derive_seed(
                spec.base_seed, hash_tag("roc-h1") ^ mix_seed(static_cast<std::uint64_t>(ti)));
            parallel_for(spec.num_trials, workers, [&](int i) {
                const std::uint64_t seed = derive_seed(h1_base, static_cast<std::uint64_t>(i));
                h1_stats[i] = run_detection_trial(scenario, errors, algo, {target},
                                                  target.doppler, seed, 0.0)
                                  .statistic_db;
            });

            for (double pfa : pfa_grid) {
                RocPoint p;
                p.pfa = pfa;
                p.doppler = target.doppler;
                p.algorithm = algo;
                if (pfa >= 1.0) {
                    p.pd = 1.0;
                } else {
                    const int k = std::clamp(
                        static_cast<int>(std::ceil((1.0 - pfa) * spec.calibration_trials)), 1,
                        spec.calibration_trials);
                    const double threshold = h0_stats[k - 1];
                    int hits = 0;
                    for (double s : h1_stats) hits += s > threshold ? 1 : 0;
                    p.pd = static_cast<double>(hits) / spec.num_trials;
                }
                points.push_back(p);
            }
        }
    }
    return points;
}

std::vector<TimingPoint> run_timing(const ExperimentSpec& spec, const std::vector<int>& sizes) {
    spec.validate();
    constexpr int kRepeats = 7;
    constexpr int kIterations = 30;
    std::vector<TimingPoint> points;
    for (int size : sizes) {
        ExperimentSpec sized = spec;
        sized.radar.num_elements = size;
        sized.radar.num_pulses = size;
        sized.rho_s = 5.0;  // the published sweep: 25 * size^2 columns
        sized.rho_d = 5.0;
        SolverParams params = sized.solver;
        params.zeta = 1e-14;  // run the full iteration budget so times are comparable
        params.max_iter = kIterations;

        const AngleDopplerGrid grid = build_grid(sized.radar, sized.rho_s, sized.rho_d);
        const SteeringDictionary dict(grid, sized.radar.num_pulses, sized.radar.num_elements);
        params.tau = params.resolve_tau(dict);

        Rng rng(derive_seed(spec.base_seed, hash_tag("timing") ^ mix_seed(size)));
        const GainPhaseError gp =
            draw_gp_errors(spec.error_cases.front().eps_max, spec.error_cases.front().phi_max,
                           sized.radar.num_elements, rng);
        const CMatrix snapshots = CMatrix(synthesize_snapshot(sized.radar, gp, {}, rng));

        for (Algorithm algo : {Algorithm::kJieAdm, Algorithm::kAdm}) {
            std::vector<double> times_ms;
            for (int rep = 0; rep <= kRepeats; ++rep) {
                const auto start = std::chrono::steady_clock::now();
                if (algo == Algorithm::kJieAdm) {
                    solve_jie_adm(snapshots, dict, params);
                } else {
                    solve_adm_fixed_t(snapshots, dict, params,
                                      CVector::Ones(sized.radar.num_elements));
                }
                const auto stop = std::chrono::steady_clock::now();
                if (rep == 0) continue;  // warmup
                times_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
            }
            double mean = 0.0;
            for (double t : times_ms) mean += t;
            mean /= times_ms.size();
            double var = 0.0;
            for (double t : times_ms) var += (t - mean) * (t - mean);
            var /= times_ms.size();
            TimingPoint p;
            p.columns = grid.num_columns();
            p.algorithm = algo;
            p.mean_ms = mean;
            p.std_ms = std::sqrt(var);
            p.min_ms = *std::min_element(times_ms.begin(), times_ms.end());
            points.push_back(p);
        }
    }
    return points;
}

void write_profile_csv(const std::string& path, const CVector& profile,
                       const AngleDopplerGrid& grid) {
    std::ofstream out = open_output(path);
    out << "f_d,f_s,magnitude\n";
    for (int kd = 0; kd < grid.num_doppler; ++kd) {
        for (int ks = 0; ks < grid.num_spatial; ++ks) {
            out << format_double(grid.doppler_value(kd)) << ','
                << format_double(grid.spatial_value(ks)) << ','
                << format_double(std::abs(profile(grid.column_index(kd, ks)))) << '\n';
        }
    }
}

void write_pd_csv(const std::string& path, const std::vector<PdPoint>& points) {
    std::ofstream out = open_output(path);
    out << "snr_db,case,algorithm,pd,ci_lo,ci_hi,trials\n";
    for (const PdPoint& p : points) {
        out << format_double(p.snr_db) << ',' << p.error_case << ',' << to_string(p.algorithm)
            << ',' << format_double(p.pd) << ',' << format_double(p.ci_lo) << ','
            << format_double(p.ci_hi) << ',' << p.trials << '\n';
    }
}

void write_roc_csv(const std::string& path, const std::vector<RocPoint>& points) {
    std::ofstream out = open_output(path);
    out << "pfa,pd,doppler,algorithm\n";
    for (const RocPoint& p : points) {
        out << format_double(p.pfa) << ',' << format_double(p.pd) << ','
            << format_double(p.doppler) << ',' << to_string(p.algorithm) << '\n';
    }
}

void write_timing_csv(const std::string& path, const std::vector<TimingPoint>& points) {
    std::ofstream out = open_output(path);
    out << "columns,algorithm,mean_ms,std_ms,min_ms\n";
    for (const TimingPoint& p : points) {
        out << p.columns << ',' << to_string(p.algorithm) << ',' << format_double(p.mean_ms)
            << ',' << format_double(p.std_ms) << ',' << format_double(p.min_ms) << '\n';
    }
}

void save_records(const std::vector<TrialRecord>& records, const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const TrialRecord& r : records) {
        nlohmann::json item;
        item["trial"] = r.trial;
        item["seed"] = r.seed;
        item["algorithm"] = r.algorithm;
        item["error_case"] = r.error_case;
        item["statistic_db"] = r.statistic_db;
        item["detected"] = r.detected;
        item["iterations"] = r.iterations;
        item["wall_seconds"] = r.wall_seconds;
        arr.push_back(item);
    }
    std::ofstream out = open_output(path);
    out << arr.dump(2) << '\n';
}

void write_manifest(const ExperimentSpec& spec, const std::string& subcommand,
                    const std::string& path) {
    nlohmann::json manifest{{"spec_hash", spec_hash(spec)},
                            {"base_seed", spec.base_seed},
                            {"subcommand", subcommand},
                            {"version", "stapcal 0.1.0"},
                            {"spec", spec_to_json(spec)}};
    std::ofstream out = open_output(path);
    out << manifest.dump(2) << '\n';
}

void binomial_interval(int successes, int trials, double& lo, double& hi) {
    // Wilson score interval at 95%.
    const double z = 1.959963984540054;
    const double n = trials;
    const double phat = successes / n;
    const double denom = 1.0 + z * z / n;
    const double center = (phat + z * z / (2.0 * n)) / denom;
    const double margin =
        z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
    lo = std::max(0.0, center - margin);
    hi = std::min(1.0, center + margin);
}

}  // namespace stapcal
