#include "stapcal/scene.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stapcal {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void RadarConfig::validate() const {
    if (num_elements < 2) throw std::invalid_argument("RadarConfig: num_elements must be >= 2");
    if (num_pulses < 2) throw std::invalid_argument("RadarConfig: num_pulses must be >= 2");
    if (num_clutter_patches < 1) throw std::invalid_argument("RadarConfig: num_clutter_patches must be >= 1");
    if (carrier_wavelength <= 0.0) throw std::invalid_argument("RadarConfig: carrier_wavelength must be > 0");
    if (element_spacing <= 0.0) throw std::invalid_argument("RadarConfig: element_spacing must be > 0");
    if (prf <= 0.0) throw std::invalid_argument("RadarConfig: prf must be > 0");
    if (platform_velocity <= 0.0) throw std::invalid_argument("RadarConfig: platform_velocity must be > 0");
    if (platform_height <= 0.0) throw std::invalid_argument("RadarConfig: platform_height must be > 0");
    if (noise_power <= 0.0) throw std::invalid_argument("RadarConfig: noise_power must be > 0");
}

GainPhaseError GainPhaseError::none(int num_elements) {
    GainPhaseError gp;
    gp.c = CVector::Ones(num_elements);
    return gp;
}

double wrap_frequency(double f) {
    double w = f - std::floor(f + 0.5);
    if (w >= 0.5) w -= 1.0;  // guards the f = 0.5 - eps rounding edge
    return w;
}

CVector spatial_steering(double spatial_freq, int num_elements) {
    CVector v(num_elements);
    for (int m = 0; m < num_elements; ++m) {
        v(m) = std::polar(1.0, kTwoPi * m * spatial_freq);
    }
    return v;
}

CVector temporal_steering(double doppler_freq, int num_pulses) {
    CVector v(num_pulses);
    for (int n = 0; n < num_pulses; ++n) {
        v(n) = std::polar(1.0, kTwoPi * n * doppler_freq);
    }
    return v;
}

CVector space_time_steering(double doppler_freq, double spatial_freq,
                            int num_pulses, int num_elements) {
    const CVector vd = temporal_steering(doppler_freq, num_pulses);
    const CVector vs = spatial_steering(spatial_freq, num_elements);
    CVector v(num_pulses * num_elements);
    for (int n = 0; n < num_pulses; ++n) {
        v.segment(n * num_elements, num_elements) = vd(n) * vs;
    }
    return v;
}

CVector apply_gain_errors(const CVector& c, const CVector& x) {
    const int m_count = static_cast<int>(c.size());
    if (x.size() % m_count != 0) throw std::invalid_argument("apply_gain_errors: size mismatch");
    CVector y(x.size());
    const int pulses = static_cast<int>(x.size()) / m_count;
    for (int n = 0; n < pulses; ++n) {
        y.segment(n * m_count, m_count) =
            x.segment(n * m_count, m_count).cwiseProduct(c);
    }
    return y;
}

GainPhaseError draw_gp_errors(double eps_max, double phi_max, int num_elements, Rng& rng) {
    if (eps_max < 0.0 || eps_max >= 1.0) {
        throw std::invalid_argument("draw_gp_errors: eps_max must lie in [0, 1)");
    }
    if (phi_max < 0.0) throw std::invalid_argument("draw_gp_errors: phi_max must be >= 0");
    if (num_elements < 1) throw std::invalid_argument("draw_gp_errors: num_elements must be >= 1");
    // Draw from Uniform[-1, 1] and scale, so the consumed RNG stream does not
    // depend on the bounds (zero-error cases stay stream-compatible).
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    GainPhaseError gp;
    gp.eps_max = eps_max;
    gp.phi_max = phi_max;
    gp.c = CVector(num_elements);
    for (int m = 0; m < num_elements; ++m) {
        const double eps = eps_max * unit(rng);
        const double phi = phi_max * unit(rng);
        gp.c(m) = std::polar(1.0 + eps, phi);
    }
    return gp;
}

std::vector<ClutterPatch> clutter_patches(const RadarConfig& cfg) {
    cfg.validate();
    const int nc = cfg.num_clutter_patches;
    const double cnr_lin = std::pow(10.0, cfg.cnr_db / 10.0);
    const double patch_power = cfg.noise_power * cnr_lin;
    std::vector<ClutterPatch> patches(nc);
    for (int k = 0; k < nc; ++k) {
        const double theta =
            nc == 1 ? 0.0
                    : -0.5 * std::numbers::pi +
                          std::numbers::pi * static_cast<double>(k) / (nc - 1);
        const double s = std::sin(theta);
        ClutterPatch& p = patches[k];
        p.spatial = wrap_frequency(cfg.element_spacing / cfg.carrier_wavelength * s);
        p.doppler = wrap_frequency(2.0 * cfg.platform_velocity * s / (cfg.carrier_wavelength * cfg.prf));
        p.power = patch_power;
    }
    return patches;
}

CVector synthesize_clutter(const RadarConfig& cfg, const GainPhaseError& gp, Rng& rng) {
    const auto patches = clutter_patches(cfg);
    CVector x = CVector::Zero(cfg.dofs());
    for (const ClutterPatch& p : patches) {
        const Complex amp = complex_gaussian(rng, p.power);
        x += amp * space_time_steering(p.doppler, p.spatial, cfg.num_pulses, cfg.num_elements);
    }
    return apply_gain_errors(gp.c, x);
}

CMatrix clutter_covariance(const RadarConfig& cfg, const GainPhaseError& gp) {
    const auto patches = clutter_patches(cfg);
    const int nm = cfg.dofs();
    CMatrix r = CMatrix::Zero(nm, nm);
    for (const ClutterPatch& p : patches) {
        const CVector v = apply_gain_errors(
            gp.c, space_time_steering(p.doppler, p.spatial, cfg.num_pulses, cfg.num_elements));
        r.noalias() += p.power * v * v.adjoint();
    }
    // Symmetrize away accumulation round-off.
    r = 0.5 * (r + r.adjoint()).eval();
    return r;
}

CVector synthesize_snapshot(const RadarConfig& cfg, const GainPhaseError& gp,
                            const std::vector<TargetSpec>& targets, Rng& rng) {
    cfg.validate();
    CVector x = CVector::Zero(cfg.dofs());
    std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);
    for (const TargetSpec& t : targets) {
        const double amp_mag = std::sqrt(cfg.noise_power * std::pow(10.0, t.snr_db / 10.0));
        const Complex amp = std::polar(amp_mag, phase_dist(rng));
        x += amp * apply_gain_errors(
                       gp.c, space_time_steering(t.doppler, t.spatial, cfg.num_pulses,
                                                 cfg.num_elements));
    }
    x += synthesize_clutter(cfg, gp, rng);
    for (int k = 0; k < cfg.dofs(); ++k) {
        x(k) += complex_gaussian(rng, cfg.noise_power);
    }
    return x;
}

}  // namespace stapcal
