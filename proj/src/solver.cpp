#include "stapcal/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stapcal {

namespace {

// Closed-form equality-constrained LS step for t given Z = Phi*Upsilon + Gamma - Lambda/beta.
CVector calibration_step(const CMatrix& z, const CMatrix& snapshots, Complex sigma,
                         int num_elements) {
    const int batch = static_cast<int>(snapshots.cols());
    Eigen::VectorXd a = Eigen::VectorXd::Zero(num_elements);
    CVector b = CVector::Zero(num_elements);
    for (int l = 0; l < batch; ++l) {
        QOperator q(snapshots.col(l), num_elements);
        a += q.gram_diagonal();
        b += q.adjoint(z.col(l));
    }
    for (int m = 0; m < num_elements; ++m) {
        if (a(m) == 0.0) {
            throw std::runtime_error(
                "calibration step: degenerate channel (element " + std::to_string(m) +
                " has all-zero samples across snapshots)");
        }
    }
    Complex ratio_sum = 0.0;
    double inv_sum = 0.0;
    for (int m = 0; m < num_elements; ++m) {
        ratio_sum += b(m) / a(m);
        inv_sum += 1.0 / a(m);
    }
    const Complex gamma = (sigma - ratio_sum) / inv_sum;
    CVector t(num_elements);
    for (int m = 0; m < num_elements; ++m) t(m) = (b(m) + gamma) / a(m);
    return t;
}

double relative_change(const CMatrix& prev, const CMatrix& next) {
    double num = 0.0;
    double den = 0.0;
    for (int l = 0; l < next.cols(); ++l) {
        num += (prev.col(l) - next.col(l)).norm();
        den += next.col(l).norm();
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

SolveReport solve_impl(const CMatrix& snapshots, const SteeringDictionary& dict,
                       const SolverParams& params, const CVector* t_fixed) {
    params.validate();
    const int batch = static_cast<int>(snapshots.cols());
    if (batch < 1) throw std::invalid_argument("solve: need at least one snapshot");
    if (snapshots.rows() != dict.rows()) throw std::invalid_argument("solve: snapshot length mismatch");
    const int m_count = dict.num_elements();
    if (t_fixed) {
        if (t_fixed->size() != m_count) throw std::invalid_argument("solve: t_fixed length mismatch");
        if ((t_fixed->array() == Complex(0.0)).any()) {
            throw std::invalid_argument("solve: t_fixed must have no zero entries");
        }
    }

    SolveReport report;
    if (snapshots.norm() == 0.0) {
        report.profiles = CMatrix::Zero(dict.cols(), batch);
        report.t = t_fixed ? *t_fixed : CVector::Ones(m_count);
        report.c = report.t.cwiseInverse();
        report.termination = Termination::kZeroData;
        return report;
    }

    const double tau = params.resolve_tau(dict);
    const Complex sigma = params.resolve_sigma(m_count);
    const double shrink = tau / params.beta;
    const double residual_gain = params.rho * params.beta / (1.0 + params.rho * params.beta);

    SolverState state = SolverState::initial(dict, batch);
    if (t_fixed) state.t = *t_fixed;
    CMatrix phi_profiles = dict.apply(state.profiles);
    CMatrix tx = apply_inverse_errors(state.t, snapshots);

    report.termination = Termination::kMaxIter;
    for (int p = 0; p < params.max_iter; ++p) {
        state.residuals = residual_gain * (state.multipliers / params.beta - phi_profiles + tx);
        const CMatrix pre_image =
            phi_profiles + state.residuals - tx - state.multipliers / params.beta;
        const CMatrix gradient = dict.adjoint(pre_image);
        CMatrix new_profiles = soft_threshold(CMatrix(state.profiles - tau * gradient), shrink);
        const double rel = relative_change(state.profiles, new_profiles);
        CMatrix new_phi_profiles = dict.apply(new_profiles);
        state.profiles = std::move(new_profiles);
        if (!t_fixed) {
            const CMatrix z =
                new_phi_profiles + state.residuals - state.multipliers / params.beta;
            state.t = calibration_step(z, snapshots, sigma, m_count);
            tx = apply_inverse_errors(state.t, snapshots);
        }
        state.multipliers -=
            params.beta * (new_phi_profiles + state.residuals - tx);
        phi_profiles = std::move(new_phi_profiles);
        state.iteration = p + 1;
        report.rel_change.push_back(rel);
        if (rel <= params.zeta) {
            report.termination = Termination::kTolerance;
            break;
        }
    }
    report.profiles = std::move(state.profiles);
    report.t = state.t;
    report.c = state.t.cwiseInverse();
    report.iterations = state.iteration;
    return report;
}

}  // namespace

void SolverParams::validate() const {
    if (rho <= 0.0) throw std::invalid_argument("SolverParams: rho must be > 0");
    if (beta <= 0.0) throw std::invalid_argument("SolverParams: beta must be > 0");
    if (zeta <= 0.0 || zeta >= 1.0) throw std::invalid_argument("SolverParams: zeta must lie in (0,1)");
    if (max_iter < 1) throw std::invalid_argument("SolverParams: max_iter must be >= 1");
}

double SolverParams::resolve_tau(const SteeringDictionary& dict) const {
    if (tau > 0.0) return tau;
    const double lambda_max = dict.gram_spectral_norm();
    if (lambda_max <= 0.0) throw std::runtime_error("resolve_tau: spectral estimate failed");
    return 0.99 / lambda_max;
}

Complex SolverParams::resolve_sigma(int num_elements) const {
    return sigma == Complex(0.0) ? Complex(static_cast<double>(num_elements)) : sigma;
}

SolverState SolverState::initial(const SteeringDictionary& dict, int num_snapshots) {
    SolverState s;
    s.profiles = CMatrix::Zero(dict.cols(), num_snapshots);
    s.residuals = CMatrix::Zero(dict.rows(), num_snapshots);
    s.multipliers = CMatrix::Zero(dict.rows(), num_snapshots);
    s.t = CVector::Ones(dict.num_elements());
    return s;
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::kTolerance: return "tolerance";
        case Termination::kMaxIter: return "max_iter";
        case Termination::kZeroData: return "zero_data";
    }
    return "unknown";
}

CMatrix soft_threshold(const CMatrix& v, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("soft_threshold: kappa must be >= 0");
    CMatrix out(v.rows(), v.cols());
    for (int j = 0; j < v.cols(); ++j) {
        for (int i = 0; i < v.rows(); ++i) {
            const Complex val = v(i, j);
            const double mag = std::abs(val);
            out(i, j) = mag <= kappa ? Complex(0.0) : val * ((mag - kappa) / mag);
        }
    }
    return out;
}

CVector soft_threshold(const CVector& v, double kappa) {
    return soft_threshold(CMatrix(v), kappa).col(0);
}

CMatrix update_residuals(const SolverState& s, const SteeringDictionary& dict,
                         const CMatrix& snapshots, const SolverParams& params) {
    const double gain = params.rho * params.beta / (1.0 + params.rho * params.beta);
    return gain * (s.multipliers / params.beta - dict.apply(s.profiles) +
                   apply_inverse_errors(s.t, snapshots));
}

CMatrix update_profiles(const SolverState& s, const SteeringDictionary& dict,
                        const CMatrix& snapshots, const SolverParams& params, double tau) {
    const CMatrix pre_image = dict.apply(s.profiles) + s.residuals -
                              apply_inverse_errors(s.t, snapshots) - s.multipliers / params.beta;
    const CMatrix gradient = dict.adjoint(pre_image);
    return soft_threshold(CMatrix(s.profiles - tau * gradient), tau / params.beta);
}

CVector update_calibration(const SolverState& s, const SteeringDictionary& dict,
                           const CMatrix& snapshots, const SolverParams& params) {
    const CMatrix z = dict.apply(s.profiles) + s.residuals - s.multipliers / params.beta;
    return calibration_step(z, snapshots, params.resolve_sigma(dict.num_elements()),
                            dict.num_elements());
}

CMatrix update_multipliers(const SolverState& s, const SteeringDictionary& dict,
                           const CMatrix& snapshots, const SolverParams& params) {
    return s.multipliers - params.beta * (dict.apply(s.profiles) + s.residuals -
                                          apply_inverse_errors(s.t, snapshots));
}

SolveReport solve_jie_adm(const CMatrix& snapshots, const SteeringDictionary& dict,
                          const SolverParams& params) {
    return solve_impl(snapshots, dict, params, nullptr);
}

SolveReport solve_adm_fixed_t(const CMatrix& snapshots, const SteeringDictionary& dict,
                              const SolverParams& params, const CVector& t_fixed) {
    return solve_impl(snapshots, dict, params, &t_fixed);
}

CVector constrained_ls_oracle(const CMatrix& z, const CMatrix& snapshots, Complex sigma,
                              int num_elements) {
    const int batch = static_cast<int>(snapshots.cols());
    CMatrix gram = CMatrix::Zero(num_elements, num_elements);
    CVector rhs = CVector::Zero(num_elements);
    for (int l = 0; l < batch; ++l) {
        const CMatrix q = QOperator(snapshots.col(l), num_elements).dense();
        gram.noalias() += q.adjoint() * q;
        rhs.noalias() += q.adjoint() * z.col(l);
    }
    // KKT system of min ||z - Q t||^2 s.t. 1^T t = sigma:
    //   [Q^H Q  -1] [t    ]   [Q^H z]
    //   [1^T     0] [gamma] = [sigma]
    CMatrix kkt = CMatrix::Zero(num_elements + 1, num_elements + 1);
    kkt.topLeftCorner(num_elements, num_elements) = gram;
    kkt.topRightCorner(num_elements, 1) = -CVector::Ones(num_elements);
    kkt.bottomLeftCorner(1, num_elements) = CVector::Ones(num_elements).transpose();
    CVector full_rhs(num_elements + 1);
    full_rhs.head(num_elements) = rhs;
    full_rhs(num_elements) = sigma;
    Eigen::FullPivLU<CMatrix> lu(kkt);
    if (!lu.isInvertible()) throw std::runtime_error("constrained_ls_oracle: singular KKT system");
    const CVector sol = lu.solve(full_rhs);
    return sol.head(num_elements);
}

}  // namespace stapcal
