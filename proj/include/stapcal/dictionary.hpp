#ifndef STAPCAL_DICTIONARY_HPP
#define STAPCAL_DICTIONARY_HPP

#include <Eigen/Dense>

#include "stapcal/scene.hpp"

namespace stapcal {

/// Uniform spatio-Doppler grid over [-0.5, 0.5) x [-0.5, 0.5).
/// Columns are enumerated Doppler-major: q = kd * num_spatial + ks.
struct AngleDopplerGrid {
    int num_doppler = 0;  // N_d = rho_d * N
    int num_spatial = 0;  // N_s = rho_s * M

    int num_columns() const { return num_doppler * num_spatial; }
    double doppler_value(int kd) const { return -0.5 + static_cast<double>(kd) / num_doppler; }
    double spatial_value(int ks) const { return -0.5 + static_cast<double>(ks) / num_spatial; }
    double doppler_spacing() const { return 1.0 / num_doppler; }
    double spatial_spacing() const { return 1.0 / num_spatial; }
    int column_index(int kd, int ks) const { return kd * num_spatial + ks; }
    int nearest_doppler_bin(double f) const;
    int nearest_spatial_bin(double f) const;
    // Grid frequency nearest to f (for pinning on-grid scenarios).
    double snap_doppler(double f) const { return doppler_value(nearest_doppler_bin(f)); }
    double snap_spatial(double f) const { return spatial_value(nearest_spatial_bin(f)); }
};

AngleDopplerGrid build_grid(int num_elements, int num_pulses, double rho_s, double rho_d);
AngleDopplerGrid build_grid(const RadarConfig& cfg, double rho_s, double rho_d);

/// Over-complete space-time steering dictionary. Column q is the space-time
/// steering vector at the q-th grid point (raw steering vectors, column norm
/// sqrt(NM)). Small dictionaries are materialized; larger ones are applied
/// through the factored (temporal x spatial) form, which is exact.
class SteeringDictionary {
  public:
    static constexpr int kDenseThreshold = 4096;

    SteeringDictionary(const AngleDopplerGrid& grid, int num_pulses, int num_elements);

    int rows() const { return num_pulses_ * num_elements_; }
    int cols() const { return grid_.num_columns(); }
    const AngleDopplerGrid& grid() const { return grid_; }
    int num_pulses() const { return num_pulses_; }
    int num_elements() const { return num_elements_; }

    CVector column(int q) const;

    // Phi * profile and Phi^H * y; batch overloads act columnwise.
    CVector apply(const CVector& profile) const;
    CMatrix apply(const CMatrix& profiles) const;
    CVector adjoint(const CVector& y) const;
    CMatrix adjoint(const CMatrix& ys) const;

    // Materialized Phi; throws for dictionaries above the dense threshold.
    const CMatrix& dense() const;
    bool is_dense() const { return dense_.size() > 0; }

    // Largest eigenvalue of Phi^H Phi via power iteration.
    double gram_spectral_norm(int iterations = 50) const;

    // Matrix-free route (always available; apply/adjoint dispatch to it above
    // the dense threshold).
    CMatrix apply_factored(const CMatrix& profiles) const;
    CMatrix adjoint_factored(const CMatrix& ys) const;

  private:
    AngleDopplerGrid grid_;
    int num_pulses_;
    int num_elements_;
    CMatrix temporal_table_;  // N_d x N, entry (kd, n) = exp(j 2 pi n f_d,kd)
    CMatrix spatial_table_;   // N_s x M
    CMatrix dense_;           // empty above threshold
};

// T x with T = I_N (x) diag(t): scales element m of every pulse by t_m.
CVector apply_inverse_errors(const CVector& t, const CVector& x);
CMatrix apply_inverse_errors(const CVector& t, const CMatrix& xs);

/// Linear map t -> T x = diag(x) (1_N (x) I_M) t for a fixed snapshot x.
/// Q^H Q is diagonal; entry m sums |x_{nM+m}|^2 over pulses.
class QOperator {
  public:
    QOperator(CVector snapshot, int num_elements);

    CVector apply(const CVector& t) const;     // Q t, length NM
    CVector adjoint(const CVector& z) const;   // Q^H z, length M
    Eigen::VectorXd gram_diagonal() const;     // diag(Q^H Q), length M
    CMatrix dense() const;                     // NM x M, for oracles

  private:
    CVector x_;
    int num_elements_;
    int num_pulses_;
};

}  // namespace stapcal

#endif
