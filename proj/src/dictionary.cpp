#include "stapcal/dictionary.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stapcal {

namespace {
using RowMajorC = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int nearest_bin(double f, int count) {
    // Grid points are -0.5 + k/count; nearest in the wrapped sense.
    const long k = std::lround((f + 0.5) * count);
    return static_cast<int>(((k % count) + count) % count);
}
}  // namespace

int AngleDopplerGrid::nearest_doppler_bin(double f) const { return nearest_bin(f, num_doppler); }
int AngleDopplerGrid::nearest_spatial_bin(double f) const { return nearest_bin(f, num_spatial); }

AngleDopplerGrid build_grid(int num_elements, int num_pulses, double rho_s, double rho_d) {
    if (rho_s <= 1.0 || rho_d <= 1.0) {
        throw std::invalid_argument("build_grid: oversampling factors must be > 1");
    }
    const double ns = rho_s * num_elements;
    const double nd = rho_d * num_pulses;
    const double ns_round = std::round(ns);
    const double nd_round = std::round(nd);
    if (std::abs(ns - ns_round) > 1e-9 || std::abs(nd - nd_round) > 1e-9) {
        throw std::invalid_argument("build_grid: rho_s*M and rho_d*N must be integers");
    }
    AngleDopplerGrid grid;
    grid.num_spatial = static_cast<int>(ns_round);
    grid.num_doppler = static_cast<int>(nd_round);
    return grid;
}

AngleDopplerGrid build_grid(const RadarConfig& cfg, double rho_s, double rho_d) {
    cfg.validate();
    return build_grid(cfg.num_elements, cfg.num_pulses, rho_s, rho_d);
}

SteeringDictionary::SteeringDictionary(const AngleDopplerGrid& grid, int num_pulses,
                                       int num_elements)
    : grid_(grid), num_pulses_(num_pulses), num_elements_(num_elements) {
    if (grid.num_doppler <= 0 || grid.num_spatial <= 0) {
        throw std::invalid_argument("SteeringDictionary: empty grid");
    }
    if (grid.num_columns() < rows()) {
        throw std::invalid_argument("SteeringDictionary: grid is not over-complete");
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    temporal_table_ = CMatrix(grid.num_doppler, num_pulses_);
    for (int kd = 0; kd < grid.num_doppler; ++kd) {
        const double f = grid.doppler_value(kd);
        for (int n = 0; n < num_pulses_; ++n) {
            temporal_table_(kd, n) = std::polar(1.0, two_pi * n * f);
        }
    }
    spatial_table_ = CMatrix(grid.num_spatial, num_elements_);
    for (int ks = 0; ks < grid.num_spatial; ++ks) {
        const double f = grid.spatial_value(ks);
        for (int m = 0; m < num_elements_; ++m) {
            spatial_table_(ks, m) = std::polar(1.0, two_pi * m * f);
        }
    }
    if (cols() <= kDenseThreshold) {
        dense_ = CMatrix(rows(), cols());
        for (int kd = 0; kd < grid.num_doppler; ++kd) {
            for (int ks = 0; ks < grid.num_spatial; ++ks) {
                dense_.col(grid.column_index(kd, ks)) = space_time_steering(
                    grid.doppler_value(kd), grid.spatial_value(ks), num_pulses_, num_elements_);
            }
        }
    }
}

CVector SteeringDictionary::column(int q) const {
    const int kd = q / grid_.num_spatial;
    const int ks = q % grid_.num_spatial;
    return space_time_steering(grid_.doppler_value(kd), grid_.spatial_value(ks), num_pulses_,
                               num_elements_);
}

CMatrix SteeringDictionary::apply_factored(const CMatrix& profiles) const {
    const int batch = static_cast<int>(profiles.cols());
    CMatrix out(rows(), batch);
    for (int l = 0; l < batch; ++l) {
        Eigen::Map<const RowMajorC> coeffs(profiles.col(l).data(), grid_.num_doppler,
                                           grid_.num_spatial);
        // x(n, m) = sum_kd sum_ks A(kd, ks) e^{j2pi n fd} e^{j2pi m fs}
        RowMajorC samples = temporal_table_.transpose() * (coeffs * spatial_table_);
        out.col(l) = Eigen::Map<const CVector>(samples.data(), rows());
    }
    return out;
}

CMatrix SteeringDictionary::adjoint_factored(const CMatrix& ys) const {
    const int batch = static_cast<int>(ys.cols());
    CMatrix out(cols(), batch);
    for (int l = 0; l < batch; ++l) {
        Eigen::Map<const RowMajorC> samples(ys.col(l).data(), num_pulses_, num_elements_);
        RowMajorC coeffs =
            temporal_table_.conjugate() * samples * spatial_table_.conjugate().transpose();
        out.col(l) = Eigen::Map<const CVector>(coeffs.data(), cols());
    }
    return out;
}

CMatrix SteeringDictionary::apply(const CMatrix& profiles) const {
    if (profiles.rows() != cols()) throw std::invalid_argument("dictionary apply: profile length mismatch");
    if (is_dense()) return dense_ * profiles;
    return apply_factored(profiles);
}

CVector SteeringDictionary::apply(const CVector& profile) const {
    return apply(CMatrix(profile)).col(0);
}

CMatrix SteeringDictionary::adjoint(const CMatrix& ys) const {
    if (ys.rows() != rows()) throw std::invalid_argument("dictionary adjoint: vector length mismatch");
    if (is_dense()) return dense_.adjoint() * ys;
    return adjoint_factored(ys);
}

CVector SteeringDictionary::adjoint(const CVector& y) const {
    return adjoint(CMatrix(y)).col(0);
}

const CMatrix& SteeringDictionary::dense() const {
    if (!is_dense()) {
        throw std::logic_error("SteeringDictionary: dense form not materialized above threshold");
    }
    return dense_;
}

double SteeringDictionary::gram_spectral_norm(int iterations) const {
    CVector v = CVector::Ones(cols());
    v /= v.norm();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        CVector w = adjoint(apply(v));
        lambda = w.norm();
        if (lambda == 0.0) return 0.0;
        v = w / lambda;
    }
    return lambda;
}

CVector apply_inverse_errors(const CVector& t, const CVector& x) {
    return apply_gain_errors(t, x);
}

CMatrix apply_inverse_errors(const CVector& t, const CMatrix& xs) {
    CMatrix out(xs.rows(), xs.cols());
    for (int l = 0; l < xs.cols(); ++l) out.col(l) = apply_gain_errors(t, xs.col(l));
    return out;
}

QOperator::QOperator(CVector snapshot, int num_elements)
    : x_(std::move(snapshot)), num_elements_(num_elements) {
    if (num_elements_ < 1 || x_.size() % num_elements_ != 0) {
        throw std::invalid_argument("QOperator: snapshot length not a multiple of num_elements");
    }
    num_pulses_ = static_cast<int>(x_.size()) / num_elements_;
}

CVector QOperator::apply(const CVector& t) const {
    if (t.size() != num_elements_) throw std::invalid_argument("QOperator: t length mismatch");
    return apply_gain_errors(t, x_);
}

CVector QOperator::adjoint(const CVector& z) const {
    if (z.size() != x_.size()) throw std::invalid_argument("QOperator: z length mismatch");
    CVector out = CVector::Zero(num_elements_);
    for (int n = 0; n < num_pulses_; ++n) {
        out += x_.segment(n * num_elements_, num_elements_)
                   .conjugate()
                   .cwiseProduct(z.segment(n * num_elements_, num_elements_));
    }
    return out;
}

Eigen::VectorXd QOperator::gram_diagonal() const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(num_elements_);
    for (int n = 0; n < num_pulses_; ++n) {
        out += x_.segment(n * num_elements_, num_elements_).cwiseAbs2();
    }
    return out;
}

CMatrix QOperator::dense() const {
    CMatrix q = CMatrix::Zero(x_.size(), num_elements_);
    for (int n = 0; n < num_pulses_; ++n) {
        for (int m = 0; m < num_elements_; ++m) {
            q(n * num_elements_ + m, m) = x_(n * num_elements_ + m);
        }
    }
    return q;
}

}  // namespace stapcal
