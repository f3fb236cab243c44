#include "stapcal/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stapcal/rng.hpp"

namespace stapcal {

void DetectorConfig::validate() const {
    if (num_secondary < 1) throw std::invalid_argument("DetectorConfig: num_secondary must be >= 1");
    if (num_guard < 0) throw std::invalid_argument("DetectorConfig: num_guard must be >= 0");
}

std::vector<Complex> extract_window(const CVector& profile, const AngleDopplerGrid& grid,
                                    int num_pulses, int num_elements, double doppler_center,
                                    double spatial_center) {
    if (profile.size() != grid.num_columns()) {
        throw std::invalid_argument("extract_window: profile length does not match grid");
    }
    const double half_d = 0.5 / num_pulses;
    const double half_s = 0.5 / num_elements;
    std::vector<int> doppler_bins;
    for (int kd = 0; kd < grid.num_doppler; ++kd) {
        const double f = grid.doppler_value(kd);
        if (f > doppler_center - half_d && f < doppler_center + half_d) doppler_bins.push_back(kd);
    }
    std::vector<int> spatial_bins;
    for (int ks = 0; ks < grid.num_spatial; ++ks) {
        const double f = grid.spatial_value(ks);
        if (f > spatial_center - half_s && f < spatial_center + half_s) spatial_bins.push_back(ks);
    }
    std::vector<Complex> window;
    window.reserve(doppler_bins.size() * spatial_bins.size());
    for (int kd : doppler_bins) {
        for (int ks : spatial_bins) {
            window.push_back(profile(grid.column_index(kd, ks)));
        }
    }
    return window;
}

double test_statistic(const std::vector<Complex>& window) {
    double sum = 0.0;
    for (const Complex& v : window) sum += std::abs(v);
    return sum;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double cfar_statistic_db(double cut_statistic, double secondary_median) {
    if (cut_statistic <= 0.0) return -std::numeric_limits<double>::infinity();
    if (secondary_median <= 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(cut_statistic) - 20.0 * std::log10(secondary_median);
}

bool median_cfar(double cut_statistic, const std::vector<double>& secondary_statistics,
                 double threshold_db) {
    return cfar_statistic_db(cut_statistic, median(secondary_statistics)) > threshold_db;
}

DetectionReport detect_doppler_sweep(const CVector& cut_profile, const CMatrix& secondary_profiles,
                                     const AngleDopplerGrid& grid, int num_pulses,
                                     int num_elements, const DetectorConfig& cfg) {
    cfg.validate();
    if (secondary_profiles.cols() < 1) {
        throw std::invalid_argument("detect_doppler_sweep: need secondary profiles");
    }
    DetectionReport report;
    report.rows.reserve(grid.num_doppler);
    for (int kd = 0; kd < grid.num_doppler; ++kd) {
        const double fd = grid.doppler_value(kd);
        DetectionRow row;
        row.doppler = fd;
        row.cut_statistic = test_statistic(
            extract_window(cut_profile, grid, num_pulses, num_elements, fd, cfg.mainlobe_spatial));
        std::vector<double> secondary;
        secondary.reserve(secondary_profiles.cols());
        for (int l = 0; l < secondary_profiles.cols(); ++l) {
            secondary.push_back(test_statistic(extract_window(secondary_profiles.col(l), grid,
                                                              num_pulses, num_elements, fd,
                                                              cfg.mainlobe_spatial)));
        }
        row.secondary_median = median(secondary);
        row.statistic_db = cfar_statistic_db(row.cut_statistic, row.secondary_median);
        row.detected = row.statistic_db > cfg.threshold_db;
        report.rows.push_back(row);
    }
    return report;
}

ThresholdCalibration calibrate_threshold(
    const std::function<double(std::uint64_t trial_seed)>& h0_statistic_db, double pfa,
    int num_trials, std::uint64_t base_seed) {
    if (pfa <= 0.0 || pfa >= 1.0) throw std::invalid_argument("calibrate_threshold: pfa must lie in (0,1)");
    if (num_trials < 1) throw std::invalid_argument("calibrate_threshold: num_trials must be >= 1");
    std::vector<double> stats(num_trials);
    for (int i = 0; i < num_trials; ++i) {
        stats[i] = h0_statistic_db(derive_seed(base_seed, static_cast<std::uint64_t>(i)));
    }
    std::sort(stats.begin(), stats.end());
    // ceil((1-pfa)*n)-th order statistic, 1-based; e.g. pfa=1e-2 with 2000
    // trials selects the 1980th.
    int k = static_cast<int>(std::ceil((1.0 - pfa) * num_trials));
    k = std::clamp(k, 1, num_trials);
    ThresholdCalibration cal;
    cal.threshold_db = stats[k - 1];
    cal.pfa = pfa;
    cal.num_trials = num_trials;
    cal.seed = base_seed;
    cal.quantile_unstable = num_trials * pfa < 10.0;
    return cal;
}

}  // namespace stapcal
