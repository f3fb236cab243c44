#include <doctest.h>

#include <cmath>

#include "stapcal/dictionary.hpp"

using namespace stapcal;

namespace {

CVector random_cvector(int n, Rng& rng) {
    CVector v(n);
    for (int i = 0; i < n; ++i) v(i) = complex_gaussian(rng, 1.0);
    return v;
}

CMatrix dense_from_columns(const SteeringDictionary& dict) {
    CMatrix phi(dict.rows(), dict.cols());
    for (int q = 0; q < dict.cols(); ++q) phi.col(q) = dict.column(q);
    return phi;
}

}  // namespace

TEST_CASE("grid construction and rejection rules") {
    const AngleDopplerGrid big = build_grid(10, 10, 5.0, 5.0);
    CHECK(big.num_spatial == 50);
    CHECK(big.num_doppler == 50);

    const AngleDopplerGrid small = build_grid(2, 2, 2.0, 2.0);
    CHECK(small.num_columns() == 16);
    CHECK(small.doppler_spacing() == doctest::Approx(1.0 / small.num_doppler).epsilon(1e-15));

    CHECK_THROWS_AS(build_grid(4, 4, 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 4, 2.5, 2.0), std::invalid_argument);  // non-integer N_s
}

TEST_CASE("grid values cover the half-open frequency square") {
    const AngleDopplerGrid grid = build_grid(4, 4, 2.0, 2.0);
    CHECK(grid.doppler_value(0) == -0.5);
    CHECK(grid.doppler_value(grid.num_doppler - 1) < 0.5);
    CHECK(grid.spatial_value(4) == doctest::Approx(0.0));
    CHECK(grid.column_index(1, 2) == 1 * grid.num_spatial + 2);
}

TEST_CASE("nearest bins and snapping wrap around the alias boundary") {
    const AngleDopplerGrid grid = build_grid(4, 4, 2.0, 2.0);  // spacing 1/8
    CHECK(grid.nearest_doppler_bin(-0.5) == 0);
    CHECK(grid.snap_doppler(0.13) == doctest::Approx(0.125));
    CHECK(grid.snap_spatial(-0.24) == doctest::Approx(-0.25));
    // 0.49 is nearer to the alias of -0.5 than to the largest grid value 0.375.
    CHECK(grid.nearest_doppler_bin(0.49) == 0);
}

TEST_CASE("columns are raw steering vectors at grid frequencies") {
    const int n = 3, m = 2;
    const AngleDopplerGrid grid = build_grid(m, n, 2.0, 2.0);
    const SteeringDictionary dict(grid, n, m);
    for (int kd = 0; kd < grid.num_doppler; ++kd) {
        for (int ks = 0; ks < grid.num_spatial; ++ks) {
            const CVector expect = space_time_steering(grid.doppler_value(kd),
                                                       grid.spatial_value(ks), n, m);
            const CVector col = dict.column(grid.column_index(kd, ks));
            CHECK((col - expect).norm() < 1e-13);
            CHECK(col.norm() == doctest::Approx(std::sqrt(double(n * m))).epsilon(1e-12));
        }
    }
}

TEST_CASE("apply on a basis vector reproduces the column") {
    const AngleDopplerGrid grid = build_grid(3, 3, 2.0, 2.0);
    const SteeringDictionary dict(grid, 3, 3);
    for (int q : {0, 7, dict.cols() - 1}) {
        CVector e = CVector::Zero(dict.cols());
        e(q) = 1.0;
        CHECK((dict.apply(e) - dict.column(q)).norm() < 1e-12);
    }
}

TEST_CASE("adjoint satisfies the inner-product identity") {
    const AngleDopplerGrid grid = build_grid(3, 4, 2.0, 2.0);
    const SteeringDictionary dict(grid, 4, 3);
    Rng rng(6);
    for (int rep = 0; rep < 10; ++rep) {
        const CVector alpha = random_cvector(dict.cols(), rng);
        const CVector y = random_cvector(dict.rows(), rng);
        const Complex lhs = y.dot(dict.apply(alpha));    // y^H (Phi alpha)
        const Complex rhs = dict.adjoint(y).dot(alpha);  // (Phi^H y)^H alpha
        CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
    }
}

TEST_CASE("factored route matches the dense matrix exactly") {
    const AngleDopplerGrid grid = build_grid(4, 3, 2.0, 2.0);  // 6*8 = 48 columns
    const SteeringDictionary dict(grid, 3, 4);
    REQUIRE(dict.is_dense());
    const CMatrix phi = dense_from_columns(dict);
    CHECK((dict.dense() - phi).norm() < 1e-12);

    Rng rng(8);
    const CMatrix alphas = CMatrix::NullaryExpr(
        dict.cols(), 3, [&](Eigen::Index, Eigen::Index) { return complex_gaussian(rng, 1.0); });
    const CMatrix ys = CMatrix::NullaryExpr(
        dict.rows(), 3, [&](Eigen::Index, Eigen::Index) { return complex_gaussian(rng, 1.0); });

    CHECK((dict.apply_factored(alphas) - phi * alphas).norm() <
          1e-10 * (phi * alphas).norm());
    CHECK((dict.adjoint_factored(ys) - phi.adjoint() * ys).norm() <
          1e-10 * (phi.adjoint() * ys).norm());
}

TEST_CASE("large dictionaries stay matrix-free") {
    // 65 * 65 = 4225 columns exceeds the dense threshold.
    const AngleDopplerGrid grid = build_grid(13, 13, 5.0, 5.0);
    const SteeringDictionary dict(grid, 13, 13);
    CHECK_FALSE(dict.is_dense());
    CHECK_THROWS_AS(dict.dense(), std::logic_error);

    Rng rng(12);
    const CVector y = random_cvector(dict.rows(), rng);
    // Full uniform grid: Phi Phi^H = (N_d N_s) I.
    const CVector back = dict.apply(CVector(dict.adjoint(y)));
    CHECK((back - double(dict.cols()) * y).norm() < 1e-8 * back.norm());
}

TEST_CASE("gram spectral norm of the full uniform grid") {
    const AngleDopplerGrid grid = build_grid(4, 4, 3.0, 3.0);
    const SteeringDictionary dict(grid, 4, 4);
    CHECK(dict.gram_spectral_norm() == doctest::Approx(double(dict.cols())).epsilon(1e-6));
}

TEST_CASE("inverse-error application scales elements within each pulse") {
    Rng rng(3);
    const int n = 3, m = 2;
    const CVector x = random_cvector(n * m, rng);
    CHECK((apply_inverse_errors(CVector::Ones(m), x) - x).norm() == 0.0);

    CVector t(m);
    t << Complex(2, 0), Complex(1, 0);
    const CVector y = apply_inverse_errors(t, x);
    for (int p = 0; p < n; ++p) {
        CHECK(std::abs(y(p * m) - 2.0 * x(p * m)) < 1e-14);
        CHECK(std::abs(y(p * m + 1) - x(p * m + 1)) < 1e-14);
    }
}

TEST_CASE("T x equals Q t for random inputs") {
    Rng rng(21);
    const int n = 4, m = 3;
    for (int rep = 0; rep < 10; ++rep) {
        const CVector x = random_cvector(n * m, rng);
        const CVector t = random_cvector(m, rng);
        const QOperator q(x, m);
        CHECK((apply_inverse_errors(t, x) - q.apply(t)).norm() < 1e-13);
    }
}

TEST_CASE("Q operator identities") {
    const int n = 2, m = 2;
    const CVector ones = CVector::Ones(n * m);
    const QOperator q(ones, m);
    CHECK((q.gram_diagonal() - Eigen::VectorXd::Constant(m, 2.0)).norm() == 0.0);
    CHECK((q.apply(CVector::Ones(m)) - ones).norm() == 0.0);

    Rng rng(14);
    const CVector x = random_cvector(2 * 3, rng);
    const QOperator qr(x, 3);
    const CMatrix dense = qr.dense();
    const Eigen::VectorXd diag = (dense.adjoint() * dense).diagonal().real();
    CHECK((qr.gram_diagonal() - diag).norm() < 1e-12);

    const CVector z = random_cvector(6, rng);
    CHECK((qr.adjoint(z) - dense.adjoint() * z).norm() < 1e-12);
}

TEST_CASE("overcompleteness is enforced") {
    AngleDopplerGrid grid;
    grid.num_doppler = 2;
    grid.num_spatial = 2;
    CHECK_THROWS_AS(SteeringDictionary(grid, 4, 4), std::invalid_argument);
}
