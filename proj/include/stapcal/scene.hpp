#ifndef STAPCAL_SCENE_HPP
#define STAPCAL_SCENE_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "stapcal/rng.hpp"

namespace stapcal {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Array / waveform / platform parameters of the simulated radar.
/// Defaults are the published airborne system (side-looking ULA,
/// 1.24 GHz carrier, half-wavelength spacing, PRF 1984 Hz).
struct RadarConfig {
    int num_elements = 10;        // M
    int num_pulses = 10;          // N per CPI
    double carrier_wavelength = 299792458.0 / 1.24e9;  // meters
    double element_spacing = 0.5 * (299792458.0 / 1.24e9);
    double prf = 1984.0;          // Hz
    double platform_velocity = 100.0;  // m/s
    double platform_height = 3000.0;   // m
    double cnr_db = 30.0;         // per patch, per channel, per pulse
    double noise_power = 1.0;     // sigma_n^2, linear
    int num_clutter_patches = 361;

    int dofs() const { return num_elements * num_pulses; }
    void validate() const;  // throws std::invalid_argument
};

/// Multiplicative per-element gain/phase distortion c_m = (1+eps_m) e^{j phi_m}.
struct GainPhaseError {
    CVector c;        // length M, all entries nonzero
    double eps_max = 0.0;
    double phi_max = 0.0;

    static GainPhaseError none(int num_elements);
};

struct TargetSpec {
    double doppler = 0.0;   // normalized Doppler, [-0.5, 0.5)
    double spatial = 0.0;   // normalized spatial frequency, [-0.5, 0.5)
    double snr_db = 0.0;    // per element, per pulse
};

struct ClutterPatch {
    double doppler;
    double spatial;
    double power;  // sigma_ck^2
};

// Wrap a normalized frequency into [-0.5, 0.5).
double wrap_frequency(double f);

// Steering vectors for the side-looking ULA. Entry k is exp(j 2 pi k f).
CVector spatial_steering(double spatial_freq, int num_elements);
CVector temporal_steering(double doppler_freq, int num_pulses);

// Kronecker space-time steering vector, length N*M; sample index
// n*M + m (pulse-major, element-minor).
CVector space_time_steering(double doppler_freq, double spatial_freq,
                            int num_pulses, int num_elements);

// C v with C = I_N (x) diag(c): scales element m of every pulse by c_m.
CVector apply_gain_errors(const CVector& c, const CVector& x);

// eps_m ~ U[-eps_max, eps_max], phi_m ~ U[-phi_max, phi_max], independent
// across elements. eps_max must be < 1 so that every c_m is invertible.
GainPhaseError draw_gp_errors(double eps_max, double phi_max, int num_elements, Rng& rng);

// Patch geometry: angles uniform over [-pi/2, pi/2], frequencies from the
// side-looking mapping, per-patch power from the configured CNR.
std::vector<ClutterPatch> clutter_patches(const RadarConfig& cfg);

CVector synthesize_clutter(const RadarConfig& cfg, const GainPhaseError& gp, Rng& rng);

// Exact clutter covariance C (sum_k sigma_ck^2 v_k v_k^H) C^H.
CMatrix clutter_covariance(const RadarConfig& cfg, const GainPhaseError& gp);

// Full return: targets (through the GP errors) + clutter + thermal noise.
// The noise enters after the array and is not multiplied by C.
// An empty target list gives an H0 snapshot.
CVector synthesize_snapshot(const RadarConfig& cfg, const GainPhaseError& gp,
                            const std::vector<TargetSpec>& targets, Rng& rng);

}  // namespace stapcal

#endif
