#include "stapcal/selftest.hpp"

#include <cmath>
#include <functional>

#include "stapcal/detector.hpp"
#include "stapcal/harness.hpp"
#include "stapcal/solver.hpp"

namespace stapcal {

namespace {

CVector random_complex_vector(int n, Rng& rng) {
    CVector v(n);
    for (int i = 0; i < n; ++i) v(i) = complex_gaussian(rng, 1.0);
    return v;
}

CMatrix random_complex_matrix(int rows, int cols, Rng& rng) {
    CMatrix m(rows, cols);
    for (int j = 0; j < cols; ++j) m.col(j) = random_complex_vector(rows, rng);
    return m;
}

struct Battery {
    std::ostream& out;
    int failures = 0;

    void check(const char* name, const std::function<bool()>& property) {
        bool ok = false;
        try {
            ok = property();
        } catch (const std::exception& e) {
            out << "FAIL " << name << " (exception: " << e.what() << ")\n";
            ++failures;
            return;
        }
        out << (ok ? "PASS " : "FAIL ") << name << '\n';
        if (!ok) ++failures;
    }
};

}  // namespace

int run_selftest(std::ostream& out) {
    Battery battery{out};
    Rng rng(20240901);

    battery.check("steering: space-time vector equals explicit Kronecker product", [&] {
        for (int rep = 0; rep < 20; ++rep) {
            std::uniform_real_distribution<double> freq(-0.5, 0.5);
            const double fd = freq(rng), fs = freq(rng);
            const CVector vd = temporal_steering(fd, 5);
            const CVector vs = spatial_steering(fs, 3);
            const CVector v = space_time_steering(fd, fs, 5, 3);
            for (int n = 0; n < 5; ++n) {
                for (int m = 0; m < 3; ++m) {
                    if (std::abs(v(n * 3 + m) - vd(n) * vs(m)) > 1e-14) return false;
                }
            }
        }
        return true;
    });

    battery.check("gain errors: C(vd x vs) = vd x (c . vs)", [&] {
        for (int rep = 0; rep < 20; ++rep) {
            std::uniform_real_distribution<double> freq(-0.5, 0.5);
            const double fd = freq(rng), fs = freq(rng);
            const CVector c = random_complex_vector(4, rng);
            const CVector left = apply_gain_errors(c, space_time_steering(fd, fs, 3, 4));
            const CVector vd = temporal_steering(fd, 3);
            const CVector cs = c.cwiseProduct(spatial_steering(fs, 4));
            for (int n = 0; n < 3; ++n) {
                if ((left.segment(n * 4, 4) - vd(n) * cs).norm() > 1e-13) return false;
            }
        }
        return true;
    });

    battery.check("dictionary: adjoint inner-product identity", [&] {
        const AngleDopplerGrid grid = build_grid(3, 4, 2.0, 2.0);
        const SteeringDictionary dict(grid, 4, 3);
        for (int rep = 0; rep < 10; ++rep) {
            const CVector alpha = random_complex_vector(dict.cols(), rng);
            const CVector y = random_complex_vector(dict.rows(), rng);
            const Complex lhs = dict.apply(alpha).dot(y);
            const Complex rhs = alpha.dot(dict.adjoint(y));
            if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(lhs))) return false;
        }
        return true;
    });

    battery.check("q-operator: T x = Q t for all (t, x)", [&] {
        for (int rep = 0; rep < 20; ++rep) {
            const CVector x = random_complex_vector(12, rng);
            const CVector t = random_complex_vector(4, rng);
            const QOperator q(x, 4);
            if ((apply_inverse_errors(t, x) - q.apply(t)).norm() > 1e-13) return false;
        }
        return true;
    });

    battery.check("shrinkage: contraction and phase preservation", [&] {
        for (int rep = 0; rep < 50; ++rep) {
            const CVector v = random_complex_vector(16, rng);
            std::uniform_real_distribution<double> kd(0.0, 2.0);
            const double kappa = kd(rng);
            const CVector s = soft_threshold(v, kappa);
            for (int i = 0; i < v.size(); ++i) {
                if (std::abs(s(i)) > std::abs(v(i)) + 1e-14) return false;
                if (std::abs(s(i)) > 0.0 &&
                    std::abs(std::arg(s(i)) - std::arg(v(i))) > 1e-12) {
                    return false;
                }
            }
        }
        return true;
    });

    battery.check("calibration update matches dense constrained-LS oracle", [&] {
        const AngleDopplerGrid grid = build_grid(3, 2, 2.0, 2.0);
        const SteeringDictionary dict(grid, 2, 3);
        for (int rep = 0; rep < 25; ++rep) {
            const int batch = 1 + rep % 3;
            const CMatrix x = random_complex_matrix(6, batch, rng);
            SolverState state = SolverState::initial(dict, batch);
            state.profiles = random_complex_matrix(dict.cols(), batch, rng);
            state.residuals = random_complex_matrix(6, batch, rng);
            state.multipliers = random_complex_matrix(6, batch, rng);
            SolverParams params;
            const CVector t = update_calibration(state, dict, x, params);
            const CMatrix z = dict.apply(state.profiles) + state.residuals -
                              state.multipliers / params.beta;
            const CVector oracle = constrained_ls_oracle(z, x, params.resolve_sigma(3), 3);
            if ((t - oracle).norm() > 1e-8 * std::max(1.0, oracle.norm())) return false;
            if (std::abs(t.sum() - params.resolve_sigma(3)) > 1e-9 * 3.0) return false;
        }
        return true;
    });

    battery.check("detector: scale invariance of decisions", [&] {
        const AngleDopplerGrid grid = build_grid(4, 4, 2.0, 2.0);
        DetectorConfig cfg;
        cfg.num_secondary = 4;
        cfg.threshold_db = 3.0;
        for (int rep = 0; rep < 10; ++rep) {
            const CVector cut = random_complex_vector(grid.num_columns(), rng);
            const CMatrix secondary = random_complex_matrix(grid.num_columns(), 4, rng);
            std::uniform_real_distribution<double> sd(0.1, 10.0);
            const double scale = sd(rng);
            const DetectionReport a = detect_doppler_sweep(cut, secondary, grid, 4, 4, cfg);
            const DetectionReport b =
                detect_doppler_sweep(scale * cut, scale * secondary, grid, 4, 4, cfg);
            for (std::size_t i = 0; i < a.rows.size(); ++i) {
                if (a.rows[i].detected != b.rows[i].detected) return false;
            }
        }
        return true;
    });

    battery.check("solver: deterministic given identical inputs", [&] {
        const AngleDopplerGrid grid = build_grid(3, 3, 2.0, 2.0);
        const SteeringDictionary dict(grid, 3, 3);
        const CMatrix x = random_complex_matrix(9, 2, rng);
        SolverParams params;
        params.max_iter = 40;
        const SolveReport a = solve_jie_adm(x, dict, params);
        const SolveReport b = solve_jie_adm(x, dict, params);
        return a.profiles == b.profiles && a.t == b.t && a.iterations == b.iterations;
    });

    return battery.failures;
}

}  // namespace stapcal
