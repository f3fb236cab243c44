#ifndef STAPCAL_SOLVER_HPP
#define STAPCAL_SOLVER_HPP

#include <string>
#include <vector>

#include "stapcal/dictionary.hpp"

namespace stapcal {

struct SolverParams {
    double rho = 0.01;      // BPDN regularization weight
    double beta = 0.1;      // augmented-Lagrangian penalty
    double tau = 0.0;       // proximal step; <= 0 selects 0.99 / lambda_max(Phi^H Phi)
    Complex sigma = 0.0;    // normalization constant; 0 selects M (error-free fixed point t = 1)
    double zeta = 1e-4;     // relative-change stopping tolerance
    int max_iter = 500;

    void validate() const;
    double resolve_tau(const SteeringDictionary& dict) const;
    Complex resolve_sigma(int num_elements) const;
};

/// Iterates of the alternating-direction solve. Columns of the matrices are
/// per-snapshot vectors; t holds the inverse gain/phase errors (t_m = 1/c_m).
struct SolverState {
    CMatrix profiles;     // (Nd*Ns) x L
    CMatrix residuals;    // NM x L
    CMatrix multipliers;  // NM x L
    CVector t;            // M
    int iteration = 0;

    static SolverState initial(const SteeringDictionary& dict, int num_snapshots);
};

enum class Termination { kTolerance, kMaxIter, kZeroData };

std::string to_string(Termination t);

struct SolveReport {
    CMatrix profiles;                 // (Nd*Ns) x L
    CVector t;                        // estimated inverse errors
    CVector c;                        // 1 / t entrywise
    int iterations = 0;
    std::vector<double> rel_change;   // per-iteration relative profile change
    Termination termination = Termination::kMaxIter;
};

// Complex soft thresholding: shrinks magnitudes by kappa, keeps phases; 0/0 := 0.
CVector soft_threshold(const CVector& v, double kappa);
CMatrix soft_threshold(const CMatrix& v, double kappa);

// One-block updates, exposed for verification. Each consumes the blocks the
// iteration order has already advanced (residuals before profiles before t
// before multipliers) and returns the refreshed block.
CMatrix update_residuals(const SolverState& s, const SteeringDictionary& dict,
                         const CMatrix& snapshots, const SolverParams& params);
CMatrix update_profiles(const SolverState& s, const SteeringDictionary& dict,
                        const CMatrix& snapshots, const SolverParams& params, double tau);
CVector update_calibration(const SolverState& s, const SteeringDictionary& dict,
                           const CMatrix& snapshots, const SolverParams& params);
CMatrix update_multipliers(const SolverState& s, const SteeringDictionary& dict,
                           const CMatrix& snapshots, const SolverParams& params);

// Joint estimation of the sparse spatio-Doppler profiles and the inverse
// gain/phase errors across L >= 1 snapshots (shared t).
SolveReport solve_jie_adm(const CMatrix& snapshots, const SteeringDictionary& dict,
                          const SolverParams& params);

// Same iteration with t frozen. t_fixed = ones is the plain sparse-recovery
// baseline; t_fixed = 1/c_true is the known-errors oracle baseline.
SolveReport solve_adm_fixed_t(const CMatrix& snapshots, const SteeringDictionary& dict,
                              const SolverParams& params, const CVector& t_fixed);

// Test oracle: min ||z - Q t||^2 s.t. sum_m t_m = sigma via the dense KKT
// system, stacked over snapshot columns of (Z, X). Small M only.
CVector constrained_ls_oracle(const CMatrix& z, const CMatrix& snapshots, Complex sigma,
                              int num_elements);

}  // namespace stapcal

#endif
