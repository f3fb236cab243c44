#ifndef STAPCAL_HARNESS_HPP
#define STAPCAL_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stapcal/detector.hpp"
#include "stapcal/solver.hpp"

namespace stapcal {

enum class Algorithm { kJieAdm, kAdm, kAdmt };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct ErrorCase {
    double eps_max = 0.0;
    double phi_max = 0.0;
};

struct ExperimentSpec {
    RadarConfig radar;            // desk scale by default (M = N = 8)
    double rho_s = 3.0;
    double rho_d = 3.0;
    SolverParams solver;
    DetectorConfig detector;
    std::vector<ErrorCase> error_cases = {{0.0, 0.0}};
    std::vector<TargetSpec> targets;
    std::vector<Algorithm> algorithms = {Algorithm::kJieAdm, Algorithm::kAdm, Algorithm::kAdmt};
    int num_trials = 200;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    bool snap_targets_to_grid = true;
    double pfa = 1e-2;
    int calibration_trials = 1000;
    int pd_target_index = 0;          // target the PD/ROC statistics track
    std::vector<double> snr_grid_db = {-12, -9, -6, -3, 0, 3, 6};
    std::vector<double> pfa_grid = {1e-2, 2e-2, 5e-2, 1e-1, 2e-1, 5e-1, 1.0};
    std::vector<int> timing_sizes = {4, 6, 8, 10, 12};  // N = M sweep values
    int workers = 0;                  // 0: hardware concurrency

    ExperimentSpec();
    void validate() const;

    // Shipped scenarios: the three-target boresight study and the
    // single-target detection study.
    static ExperimentSpec three_target_preset();
    static ExperimentSpec single_target_preset();
};

/// Immutable per-experiment machinery shared across trials.
struct Scenario {
    RadarConfig radar;
    AngleDopplerGrid grid;
    SteeringDictionary dict;
    SolverParams solver;   // tau resolved once
    DetectorConfig detector;

    explicit Scenario(const ExperimentSpec& spec);
};

struct TrialResult {
    double statistic_db = 0.0;  // CFAR statistic at the tested Doppler bin
    bool detected = false;
    int iterations = 0;
    double solve_seconds = 0.0;
};

// One full pipeline trial: draw GP errors and data for this seed, solve with
// the chosen algorithm (CUT jointly with the secondary snapshots, shared t),
// and evaluate the CFAR statistic at the grid bin nearest test_doppler.
// An empty target list gives an H0 trial. Data depend only on the seed, so
// algorithms compared at the same seed see identical measurements.
TrialResult run_detection_trial(const Scenario& scenario, const ErrorCase& errors,
                                Algorithm algorithm, const std::vector<TargetSpec>& targets,
                                double test_doppler, std::uint64_t seed,
                                double threshold_db);

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    std::string algorithm;
    int error_case = 0;
    double statistic_db = 0.0;
    bool detected = false;
    int iterations = 0;
    double wall_seconds = 0.0;
};

struct PdPoint {
    double snr_db = 0.0;
    int error_case = 0;
    Algorithm algorithm = Algorithm::kJieAdm;
    double pd = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int trials = 0;
};

struct RocPoint {
    double pfa = 0.0;
    double pd = 0.0;
    double doppler = 0.0;
    Algorithm algorithm = Algorithm::kJieAdm;
};

struct TimingPoint {
    int columns = 0;
    Algorithm algorithm = Algorithm::kJieAdm;
    double mean_ms = 0.0;
    double std_ms = 0.0;
    double min_ms = 0.0;  // robust to scheduler noise; use for overhead ratios
};

// Seed streams: pure functions of (base_seed, purpose, error case, trial).
// Algorithms intentionally share data seeds (common random numbers).
std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view purpose, int error_case,
                         int trial);

// Reconstructed |profile| heat maps, one seeded realization per
// (error case, algorithm); writes profile_case<i>_<algo>.csv.
void run_profile_experiment(const ExperimentSpec& spec);

std::vector<PdPoint> run_pd_vs_snr(const ExperimentSpec& spec, const std::vector<double>& snr_grid,
                                   bool allow_small_trials = false);

std::vector<RocPoint> run_roc(const ExperimentSpec& spec, const std::vector<double>& pfa_grid,
                              bool allow_small_trials = false);

std::vector<TimingPoint> run_timing(const ExperimentSpec& spec, const std::vector<int>& sizes);

// Threshold calibration for the spec's scenario (first error case unless
// given): H0-only trials, statistic at the PD target's Doppler bin.
ThresholdCalibration calibrate_spec_threshold(const ExperimentSpec& spec, Algorithm algorithm,
                                              int error_case_index, double pfa, int num_trials);

// CSV / JSON persistence. Writers are deterministic (no timestamps).
void write_profile_csv(const std::string& path, const CVector& profile,
                       const AngleDopplerGrid& grid);
void write_pd_csv(const std::string& path, const std::vector<PdPoint>& points);
void write_roc_csv(const std::string& path, const std::vector<RocPoint>& points);
void write_timing_csv(const std::string& path, const std::vector<TimingPoint>& points);
void save_records(const std::vector<TrialRecord>& records, const std::string& path);
void write_manifest(const ExperimentSpec& spec, const std::string& subcommand,
                    const std::string& path);

// Wilson 95% binomial interval.
void binomial_interval(int successes, int trials, double& lo, double& hi);

}  // namespace stapcal

#endif
