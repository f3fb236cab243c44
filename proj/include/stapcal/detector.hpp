#ifndef STAPCAL_DETECTOR_HPP
#define STAPCAL_DETECTOR_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "stapcal/dictionary.hpp"

namespace stapcal {

struct DetectorConfig {
    double mainlobe_spatial = 0.0;  // spatial frequency of the tested beam
    int num_secondary = 10;         // adjacent range bins forming the background
    int num_guard = 2;              // excluded bins per side around the CUT
    double threshold_db = 0.0;      // xi

    void validate() const;
};

struct DetectionRow {
    double doppler = 0.0;
    double cut_statistic = 0.0;
    double secondary_median = 0.0;
    double statistic_db = 0.0;  // +-inf in the degenerate zero cases
    bool detected = false;
};

struct DetectionReport {
    std::vector<DetectionRow> rows;  // one per grid Doppler value
};

// Profile entries whose grid frequencies fall strictly inside the
// one-resolution-cell window (f_d +- 1/2N) x (f_s +- 1/2M). Open intervals;
// may be empty near the grid edges.
std::vector<Complex> extract_window(const CVector& profile, const AngleDopplerGrid& grid,
                                    int num_pulses, int num_elements, double doppler_center,
                                    double spatial_center);

// Sum of entry magnitudes; 0 for an empty window.
double test_statistic(const std::vector<Complex>& window);

// Median with even counts averaged over the two central order statistics.
double median(std::vector<double> values);

// 20 log10(cut) - 20 log10(median), extended with +-inf when either side is 0
// (cut == 0 maps to -inf so the decision defaults to H0).
double cfar_statistic_db(double cut_statistic, double secondary_median);

bool median_cfar(double cut_statistic, const std::vector<double>& secondary_statistics,
                 double threshold_db);

DetectionReport detect_doppler_sweep(const CVector& cut_profile, const CMatrix& secondary_profiles,
                                     const AngleDopplerGrid& grid, int num_pulses,
                                     int num_elements, const DetectorConfig& cfg);

/// Empirical threshold from target-absent Monte Carlo trials of a full
/// pipeline. The trial function maps a derived seed to one H0 CFAR statistic
/// (in dB); the returned threshold is the ceil((1-pfa)*n)-th order statistic.
struct ThresholdCalibration {
    double threshold_db = 0.0;
    double pfa = 0.0;
    int num_trials = 0;
    std::uint64_t seed = 0;
    bool quantile_unstable = false;  // num_trials * pfa < 10
};

ThresholdCalibration calibrate_threshold(
    const std::function<double(std::uint64_t trial_seed)>& h0_statistic_db, double pfa,
    int num_trials, std::uint64_t base_seed);

}  // namespace stapcal

#endif
