#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "stapcal/scene.hpp"
#include "stapcal/solver.hpp"

using namespace stapcal;

namespace {

CVector random_cvector(int n, Rng& rng) {
    CVector v(n);
    for (int i = 0; i < n; ++i) v(i) = complex_gaussian(rng, 1.0);
    return v;
}

CMatrix random_cmatrix(int rows, int cols, Rng& rng) {
    CMatrix m(rows, cols);
    for (int j = 0; j < cols; ++j) m.col(j) = random_cvector(rows, rng);
    return m;
}

struct SmallProblem {
    AngleDopplerGrid grid;
    SteeringDictionary dict;
    CMatrix snapshots;
    SolverParams params;

    SmallProblem(int m, int n, int batch, Rng& rng)
        : grid(build_grid(m, n, 2.0, 2.0)),
          dict(grid, n, m),
          snapshots(random_cmatrix(n * m, batch, rng)) {
        params.tau = params.resolve_tau(dict);
    }
};

SolverState random_state(const SteeringDictionary& dict, int batch, Rng& rng) {
    SolverState s = SolverState::initial(dict, batch);
    s.profiles = random_cmatrix(dict.cols(), batch, rng);
    s.residuals = random_cmatrix(dict.rows(), batch, rng);
    s.multipliers = random_cmatrix(dict.rows(), batch, rng);
    s.t = random_cvector(dict.num_elements(), rng);
    return s;
}

}  // namespace

TEST_CASE("soft thresholding shrinks magnitudes and keeps phases") {
    CVector v(3);
    v << Complex(3, 4), Complex(0.5, 0), Complex(0, -2);

    CHECK((soft_threshold(v, 0.0) - v).norm() == 0.0);

    const CVector s = soft_threshold(v, 2.5);
    CHECK(std::abs(s(0) - Complex(1.5, 2.0)) < 1e-14);  // |3+4j| = 5, shrink to 2.5
    CHECK(s(1) == Complex(0.0));                        // below threshold
    CHECK(s(2) == Complex(0.0));                        // |0-2j| = 2 <= 2.5
    const CVector s1 = soft_threshold(v, 1.0);
    CHECK(std::abs(s1(2) - Complex(0, -1.0)) < 1e-14);

    CVector zero = CVector::Zero(2);
    CHECK(soft_threshold(zero, 0.0).norm() == 0.0);  // 0/0 := 0

    Rng rng(4);
    const CVector r = random_cvector(16, rng);
    const CVector sr = soft_threshold(r, 0.3);
    for (int i = 0; i < r.size(); ++i) {
        const double mag = std::abs(r(i));
        if (mag <= 0.3) {
            CHECK(sr(i) == Complex(0.0));
        } else {
            CHECK(std::abs(std::abs(sr(i)) - (mag - 0.3)) < 1e-13);
            CHECK(std::abs(std::arg(sr(i)) - std::arg(r(i))) < 1e-13);
        }
    }

    CHECK_THROWS_AS(soft_threshold(v, -1.0), std::invalid_argument);
}

TEST_CASE("residual update zeroes on a consistent state and solves its stationarity") {
    Rng rng(10);
    SmallProblem prob(3, 3, 2, rng);

    SolverState s = SolverState::initial(prob.dict, 2);
    s.profiles = random_cmatrix(prob.dict.cols(), 2, rng);
    // Choose snapshots so that Phi*Upsilon = T X exactly with Lambda = 0.
    CMatrix consistent = prob.dict.apply(s.profiles);
    CHECK(update_residuals(s, prob.dict, consistent, prob.params).norm() < 1e-12);

    // rho*beta -> infinity: coefficient -> 1.
    SolverParams big = prob.params;
    big.rho = 1e12;
    big.beta = 1e3;
    s = random_state(prob.dict, 2, rng);
    const CMatrix target = s.multipliers / big.beta - prob.dict.apply(s.profiles) +
                           apply_inverse_errors(s.t, prob.snapshots);
    CHECK((update_residuals(s, prob.dict, prob.snapshots, big) - target).norm() <
          1e-9 * target.norm());

    // Stationarity of the augmented Lagrangian in r at the update:
    // r/rho - lambda + beta (Phi a + r - T x) = 0.
    s = random_state(prob.dict, 2, rng);
    const CMatrix r = update_residuals(s, prob.dict, prob.snapshots, prob.params);
    const CMatrix grad =
        r / prob.params.rho - s.multipliers +
        prob.params.beta *
            (prob.dict.apply(s.profiles) + r - apply_inverse_errors(s.t, prob.snapshots));
    CHECK(grad.norm() < 1e-10 * (r.norm() / prob.params.rho + s.multipliers.norm()));
}

TEST_CASE("profile update matches a dense one-step recomputation") {
    Rng rng(20);
    SmallProblem prob(2, 2, 2, rng);
    SolverState s = random_state(prob.dict, 2, rng);
    s.residuals = update_residuals(s, prob.dict, prob.snapshots, prob.params);

    const CMatrix phi = prob.dict.dense();
    const CMatrix pre = phi * s.profiles + s.residuals -
                        apply_inverse_errors(s.t, prob.snapshots) -
                        s.multipliers / prob.params.beta;
    const CMatrix expect = soft_threshold(
        CMatrix(s.profiles - prob.params.tau * (phi.adjoint() * pre)),
        prob.params.tau / prob.params.beta);
    const CMatrix got = update_profiles(s, prob.dict, prob.snapshots, prob.params,
                                        prob.params.tau);
    CHECK((got - expect).norm() < 1e-11 * (expect.norm() + 1.0));

    // Zero data with zero state stays at zero.
    SolverState z = SolverState::initial(prob.dict, 1);
    const CMatrix zero = CMatrix::Zero(prob.dict.rows(), 1);
    CHECK(update_profiles(z, prob.dict, zero, prob.params, prob.params.tau).norm() == 0.0);

    // Single column reduces to the single-snapshot computation.
    const CMatrix multi = update_profiles(s, prob.dict, prob.snapshots, prob.params,
                                          prob.params.tau);
    for (int l = 0; l < 2; ++l) {
        SolverState one = SolverState::initial(prob.dict, 1);
        one.profiles = s.profiles.col(l);
        one.residuals = s.residuals.col(l);
        one.multipliers = s.multipliers.col(l);
        one.t = s.t;
        const CMatrix single = update_profiles(one, prob.dict, CMatrix(prob.snapshots.col(l)),
                                               prob.params, prob.params.tau);
        // Matrix-matrix and matrix-vector kernels may round differently, so
        // agreement is numerical rather than bitwise across batch widths.
        CHECK((single.col(0) - multi.col(l)).norm() < 1e-13 * (multi.col(l).norm() + 1.0));
    }
}

TEST_CASE("calibration update solves the constrained least squares exactly") {
    Rng rng(30);

    // Exact-fit consistency: Z = Q t0 with sum t0 = sigma recovers t0.
    {
        SmallProblem prob(3, 2, 2, rng);
        CVector t0 = random_cvector(3, rng);
        t0(0) += prob.params.resolve_sigma(3) - t0.sum();  // force the constraint
        SolverState s = SolverState::initial(prob.dict, 2);
        // Arrange state so that z = Phi*profiles + residuals - multipliers/beta = Q t0.
        s.residuals = apply_inverse_errors(t0, prob.snapshots);
        const CVector t = update_calibration(s, prob.dict, prob.snapshots, prob.params);
        CHECK((t - t0).norm() < 1e-10 * t0.norm());
    }

    // Constraint holds on random inputs; matches the dense KKT oracle.
    for (int rep = 0; rep < 5; ++rep) {
        SmallProblem prob(3, 2, 2, rng);
        SolverState s = random_state(prob.dict, 2, rng);
        const CVector t = update_calibration(s, prob.dict, prob.snapshots, prob.params);
        const Complex sigma = prob.params.resolve_sigma(3);
        CHECK(std::abs(t.sum() - sigma) < 1e-9 * std::abs(sigma));

        const CMatrix z = prob.dict.apply(s.profiles) + s.residuals -
                          s.multipliers / prob.params.beta;
        const CVector oracle = constrained_ls_oracle(z, prob.snapshots, sigma, 3);
        CHECK((t - oracle).norm() < 1e-8 * oracle.norm());
    }

    // Degenerate channel: one element silent across all snapshots and pulses.
    {
        SmallProblem prob(3, 2, 1, rng);
        CMatrix x = prob.snapshots;
        for (int n = 0; n < 2; ++n) x(n * 3 + 1, 0) = 0.0;
        SolverState s = random_state(prob.dict, 1, rng);
        CHECK_THROWS_AS(update_calibration(s, prob.dict, x, prob.params), std::runtime_error);
    }
}

TEST_CASE("multiplier update leaves feasible points unchanged") {
    Rng rng(40);
    SmallProblem prob(2, 3, 2, rng);
    SolverState s = random_state(prob.dict, 2, rng);
    // Make the constraint hold: residuals = T x - Phi*profiles.
    s.residuals = apply_inverse_errors(s.t, prob.snapshots) - prob.dict.apply(s.profiles);
    const CMatrix updated = update_multipliers(s, prob.dict, prob.snapshots, prob.params);
    CHECK((updated - s.multipliers).norm() < 1e-10 * (s.multipliers.norm() + 1.0));

    // General case matches the dense recomputation.
    s = random_state(prob.dict, 2, rng);
    const CMatrix phi = prob.dict.dense();
    const CMatrix expect =
        s.multipliers - prob.params.beta * (phi * s.profiles + s.residuals -
                                            apply_inverse_errors(s.t, prob.snapshots));
    CHECK((update_multipliers(s, prob.dict, prob.snapshots, prob.params) - expect).norm() <
          1e-11 * expect.norm());
}

TEST_CASE("full solve equals the composed step functions bitwise") {
    Rng rng(50);
    SmallProblem prob(3, 3, 2, rng);
    // Unit-scale data shrinks to zero on the first step; scale it up so the
    // iteration stays live for the whole comparison.
    prob.snapshots *= 25.0;
    SolverParams params = prob.params;
    params.zeta = 1e-30;
    params.max_iter = 25;

    const SolveReport report = solve_jie_adm(prob.snapshots, prob.dict, params);

    SolverState s = SolverState::initial(prob.dict, 2);
    for (int p = 0; p < params.max_iter; ++p) {
        s.residuals = update_residuals(s, prob.dict, prob.snapshots, params);
        s.profiles = update_profiles(s, prob.dict, prob.snapshots, params, params.tau);
        s.t = update_calibration(s, prob.dict, prob.snapshots, params);
        s.multipliers = update_multipliers(s, prob.dict, prob.snapshots, params);
    }
    CHECK((report.profiles - s.profiles).norm() == 0.0);
    CHECK((report.t - s.t).norm() == 0.0);
    CHECK(report.iterations == params.max_iter);
    CHECK(report.rel_change.size() == static_cast<std::size_t>(report.iterations));
}

TEST_CASE("frozen-t solve validates its input and skips the calibration block") {
    Rng rng(60);
    SmallProblem prob(3, 3, 1, rng);

    CVector bad = CVector::Ones(3);
    bad(1) = 0.0;
    CHECK_THROWS_AS(solve_adm_fixed_t(prob.snapshots, prob.dict, prob.params, bad),
                    std::invalid_argument);

    CVector t_fixed = random_cvector(3, rng);
    SolverParams params = prob.params;
    params.max_iter = 10;
    params.zeta = 1e-30;
    const SolveReport r = solve_adm_fixed_t(prob.snapshots, prob.dict, params, t_fixed);
    CHECK((r.t - t_fixed).norm() == 0.0);
    CHECK((r.c - t_fixed.cwiseInverse()).norm() < 1e-14);
}

TEST_CASE("zero data terminates immediately with the zero-data guard") {
    Rng rng(70);
    SmallProblem prob(3, 3, 2, rng);
    const CMatrix zero = CMatrix::Zero(prob.dict.rows(), 2);
    const SolveReport r = solve_jie_adm(zero, prob.dict, prob.params);
    CHECK(r.profiles.norm() == 0.0);
    CHECK((r.t - CVector::Ones(3)).norm() == 0.0);
    CHECK(r.termination == Termination::kZeroData);
    CHECK(to_string(r.termination) == "zero_data");
}

TEST_CASE("parameter validation") {
    SolverParams p;
    CHECK_NOTHROW(p.validate());
    p.rho = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = SolverParams{};
    p.zeta = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = SolverParams{};
    p.max_iter = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK(SolverParams{}.resolve_sigma(8) == Complex(8.0));
}

TEST_CASE("noiseless on-grid sparse scene is recovered") {
    const AngleDopplerGrid grid = build_grid(4, 4, 2.0, 2.0);
    const SteeringDictionary dict(grid, 4, 4);

    CVector alpha_true = CVector::Zero(dict.cols());
    const std::set<int> support = {grid.column_index(1, 2), grid.column_index(4, 6),
                                   grid.column_index(6, 1)};
    Rng rng(80);
    for (int q : support) alpha_true(q) = complex_gaussian(rng, 1.0) + Complex(2.0, 0.0);
    const CMatrix x = dict.apply(CMatrix(alpha_true));

    const SolveReport r = solve_jie_adm(x, dict, SolverParams{});
    CHECK(r.termination == Termination::kTolerance);
    CHECK(r.iterations <= 500);
    CHECK((r.profiles.col(0) - alpha_true).norm() / alpha_true.norm() <= 1e-2);
    CHECK((r.t - CVector::Ones(4)).norm() < 1e-3);

    // Support: the largest recovered entries sit exactly on the true support.
    std::vector<std::pair<double, int>> mags;
    for (int q = 0; q < dict.cols(); ++q) mags.push_back({std::abs(r.profiles(q, 0)), q});
    std::sort(mags.rbegin(), mags.rend());
    for (std::size_t k = 0; k < support.size(); ++k) CHECK(support.count(mags[k].second) == 1);
}

TEST_CASE("joint estimation improves the gain/phase estimate on clean erroneous data") {
    const AngleDopplerGrid grid = build_grid(4, 4, 2.0, 2.0);
    const SteeringDictionary dict(grid, 4, 4);

    Rng rng(90);
    const GainPhaseError gp = draw_gp_errors(0.1, 0.1 * std::numbers::pi, 4, rng);
    CVector alpha_true = CVector::Zero(dict.cols());
    alpha_true(grid.column_index(2, 3)) = Complex(3.0, 1.0);
    alpha_true(grid.column_index(6, 5)) = Complex(-2.0, 2.0);
    const CVector x = apply_gain_errors(gp.c, dict.apply(CVector(alpha_true)));

    SolverParams params;
    params.max_iter = 2000;
    const SolveReport r = solve_jie_adm(CMatrix(x), dict, params);

    // Evaluate c up to a complex scale via the least-squares scalar fit.
    const Complex scale = r.c.dot(gp.c) / r.c.squaredNorm();
    const double aligned = (scale * r.c - gp.c).norm();
    const double baseline = (CVector::Ones(4) - gp.c).norm();
    CHECK(aligned < baseline);
}
