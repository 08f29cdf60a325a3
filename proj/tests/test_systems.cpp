#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "koop/errors.hpp"
#include "koop/snapshots.hpp"
#include "koop/systems.hpp"

using namespace koop;

namespace {

// Composite-Simpson quadrature, the independent oracle for closed-form
// integrals of the harmonic coefficient family.
double simpson(const HarmonicFunction& f, double a, double b, int panels = 20000) {
    const double h = (b - a) / (2 * panels);
    double sum = f(a) + f(b);
    for (int i = 1; i < 2 * panels; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

// Piecewise-constant damping integral of the switching damped-driven system:
// sigma alternates +1/-1 on segments T_l = l(l+1)/4.
double damped_driven_alpha(double t) {
    double alpha = 0.0;
    double T = 0.0;
    for (int l = 0; T < t; ++l) {
        const double T_next = T + 0.5 * (l + 1);
        const double overlap = std::min(t, T_next) - T;
        alpha += (l % 2 == 0 ? 1.0 : -1.0) * overlap;
        T = T_next;
    }
    return alpha;
}

}  // namespace

TEST_CASE("harmonic function closed-form integral matches quadrature") {
    HarmonicFunction f{0.4, 0.5, -0.3, M_PI};
    CHECK(std::abs(f.integral(0.2, 2.7) - simpson(f, 0.2, 2.7)) < 1e-10);
    HarmonicFunction c = HarmonicFunction::constant_fn(1.5);
    CHECK(f.integral(1.0, 1.0) == 0.0);
    CHECK(std::abs(c.integral(0.0, 2.0) - 3.0) < 1e-15);
}

TEST_CASE("fundamental matrix at t = t0 is the identity") {
    for (const char* name : {"switching-frequency", "switching-damped-driven", "multicompartment",
                             "cont-frequency", "cont-coupled-osc"}) {
        SystemSpec spec = catalog(name);
        Matrix m = fundamental_matrix(spec, 0.7, 0.7).m;
        CHECK((m - Matrix::Identity(m.rows(), m.cols())).norm() < 1e-14);
    }
}

TEST_CASE("fundamental matrix rejects t < t0 and generic variants") {
    SystemSpec spec = catalog("switching-frequency");
    CHECK_THROWS_AS(fundamental_matrix(spec, 0.0, 1.0), NumericError);
    GenericSystem gen;
    gen.dimension = 2;
    gen.matrix = [](double) { return Matrix::Zero(2, 2); };
    SystemSpec gspec;
    gspec.variant = gen;
    CHECK_THROWS_AS(fundamental_matrix(gspec, 1.0, 0.0), NumericError);
}

TEST_CASE("switching-frequency propagator over the first segment") {
    SystemSpec spec = catalog("switching-frequency");
    Matrix m = fundamental_matrix(spec, 1.0, 0.0).m;
    // e^{A0} for A0 = [[0,1],[-4,0]]: rotation at frequency 2.
    Matrix expected(2, 2);
    expected << std::cos(2.0), 0.5 * std::sin(2.0), -2.0 * std::sin(2.0), std::cos(2.0);
    CHECK((m - expected).norm() < 1e-13);
}

TEST_CASE("switching damped-driven propagator matches the commuting closed form") {
    SystemSpec spec = catalog("switching-damped-driven");
    for (double t : {0.3, 0.5, 1.0, 2.4, 5.0, 9.37}) {
        const double alpha = damped_driven_alpha(t);
        Matrix expected(2, 2);
        expected << std::exp(alpha) * std::cos(2.0 * t), 0.5 * std::exp(alpha) * std::sin(2.0 * t),
            -2.0 * std::exp(alpha) * std::sin(2.0 * t), std::exp(alpha) * std::cos(2.0 * t);
        Matrix m = fundamental_matrix(spec, t, 0.0).m;
        CHECK((m - expected).norm() < 1e-11 * expected.norm());
    }
}

TEST_CASE("catalog multicompartment carries the published rates and delays") {
    SystemSpec spec = catalog("multicompartment");
    struct Entry {
        int i, j;
        double rate, delay;
    };
    const Entry table[] = {{1, 2, 0.0988, 0.0}, {2, 1, 0.1410, 5.0},  {2, 3, 0.0590, 3.0},
                           {3, 4, 0.1150, 18.0}, {4, 1, 0.0149, 30.0}, {4, 5, 0.0154, 55.0}};
    for (const auto& e : table) {
        // Just before the delay the rate is absent, just after it is present.
        if (e.delay > 0.0) {
            CHECK(std::abs(system_matrix(spec, e.delay - 0.5)(e.j - 1, e.i - 1)) == 0.0);
        }
        CHECK(std::abs(system_matrix(spec, e.delay + 0.5)(e.j - 1, e.i - 1) - e.rate) < 1e-15);
    }
    // Column sums vanish: the total concentration is conserved.
    Matrix a = system_matrix(spec, 60.0);
    for (int c = 0; c < 5; ++c) {
        CHECK(std::abs(a.col(c).sum()) < 1e-15);
    }
}

TEST_CASE("catalog hybrid-coupled-osc alternates the published frequencies") {
    SystemSpec spec = catalog("hybrid-coupled-osc");
    // Segment matrices alternate between k = (4,1,9) and k = (9,1,16).
    const double even_hi = std::sqrt((15.0 + std::sqrt(29.0)) / 2.0);
    const double even_lo = std::sqrt((15.0 - std::sqrt(29.0)) / 2.0);
    const double odd_hi = std::sqrt((27.0 + std::sqrt(53.0)) / 2.0);
    const double odd_lo = std::sqrt((27.0 - std::sqrt(53.0)) / 2.0);
    auto sorted_ims = [](const Matrix& a) {
        Vector mu = eig(a).values;
        std::vector<double> ims;
        for (Eigen::Index i = 0; i < mu.size(); ++i) ims.push_back(mu[i].imag());
        std::sort(ims.begin(), ims.end());
        return ims;
    };
    const std::vector<double> even = sorted_ims(system_matrix(spec, 0.5));
    const std::vector<double> odd = sorted_ims(system_matrix(spec, 1.5));
    CHECK(std::abs(even[3] - even_hi) < 1e-12);
    CHECK(std::abs(even[2] - even_lo) < 1e-12);
    CHECK(std::abs(even[1] + even_lo) < 1e-12);
    CHECK(std::abs(even[0] + even_hi) < 1e-12);
    CHECK(std::abs(odd[3] - odd_hi) < 1e-12);
    CHECK(std::abs(odd[2] - odd_lo) < 1e-12);
    CHECK(std::abs(odd[1] + odd_lo) < 1e-12);
    CHECK(std::abs(odd[0] + odd_hi) < 1e-12);
}

TEST_CASE("coupled_frequencies closed forms") {
    {
        auto [w1, w2] = coupled_frequencies(1.0, 1.0, 9.0, 1.0, 16.0);
        CHECK(std::abs(w1 - std::sqrt((27.0 + std::sqrt(53.0)) / 2.0)) < 1e-13);
        CHECK(std::abs(w2 - std::sqrt((27.0 - std::sqrt(53.0)) / 2.0)) < 1e-13);
        CHECK(std::abs(w1 - 4.14008) < 1e-4);
        CHECK(std::abs(w2 - 3.14007) < 1e-4);
    }
    {
        auto [w1, w2] = coupled_frequencies(1.0, 1.0, 2.0, 1.0, 3.0);
        CHECK(std::abs(w1 - std::sqrt((7.0 + std::sqrt(5.0)) / 2.0)) < 1e-13);
        CHECK(std::abs(w2 - std::sqrt((7.0 - std::sqrt(5.0)) / 2.0)) < 1e-13);
        CHECK(std::abs(w1 - 2.14896) < 1e-4);
        CHECK(std::abs(w2 - 1.54336) < 1e-4);
    }
    {
        // Uncoupled masses oscillate at their own frequencies.
        auto [w1, w2] = coupled_frequencies(1.0, 4.0, 9.0, 0.0, 8.0);
        CHECK(std::abs(w1 - 3.0) < 1e-13);
        CHECK(std::abs(w2 - std::sqrt(2.0)) < 1e-13);
    }
    CHECK_THROWS_AS(coupled_frequencies(0.0, 1.0, 1.0, 1.0, 1.0), NumericError);
    CHECK_THROWS_AS(coupled_frequencies(1.0, 1.0, 1.0, -0.5, 1.0), NumericError);
}

TEST_CASE("continuous-frequency phase integral matches the closed form") {
    SystemSpec spec = catalog("cont-frequency");
    const double w0 = 2.0, Ad = 0.5, Bd = 0.0, wd = M_PI;
    for (double t : {0.4, 1.3, 6.28}) {
        const double t0 = 0.1;
        const double beta_formula = w0 * (t - t0) + (Ad / wd) * (std::sin(wd * t) - std::sin(wd * t0)) -
                                    (Bd / wd) * (std::cos(wd * t) - std::cos(wd * t0));
        const KoopmanSpectrumExact ks = koopman_exact(spec, t, t0);
        CHECK(std::abs(ks.eigenvalues[0].imag() - beta_formula) < 1e-12);
        CHECK(std::abs(ks.eigenvalues[0].real()) < 1e-15);
        // Independent quadrature oracle for the same integral.
        CHECK(std::abs(beta_formula - simpson(spec.spiral()->omega, t0, t)) < 1e-9);
    }
}

TEST_CASE("rk4 keeps a zero system constant") {
    HybridSystem hy;
    hy.switch_times = {0.0};
    hy.matrices = {Matrix::Zero(2, 2)};
    SystemSpec spec;
    spec.variant = hy;
    RealVector x0(2);
    x0 << 0.3, -1.1;
    SnapshotMatrix snaps = integrate_rk4(spec, x0, {0.0, 0.01, 50}, 10);
    for (int k = 0; k <= 50; ++k) {
        CHECK((snaps.values.col(k) - x0.cast<Complex>()).norm() == 0.0);
    }
}

TEST_CASE("rk4 rotation lands on the closed-form point") {
    SpiralBlock sp;
    sp.sigma = HarmonicFunction::constant_fn(0.0);
    sp.omega = HarmonicFunction::constant_fn(2.0);
    SystemSpec spec;
    spec.variant = sp;
    RealVector x0(2);
    x0 << 1.0, 0.0;
    const int steps = 100;
    SnapshotMatrix snaps = integrate_rk4(spec, x0, {0.0, M_PI / 2.0 / steps, steps}, 20);
    CHECK(std::abs(snaps.values(0, steps).real() + 1.0) < 1e-10);  // cos(pi) = -1
    CHECK(std::abs(snaps.values(1, steps).real()) < 1e-10);        // -sin(pi) = 0
}

TEST_CASE("rk4 conserves the multicompartment total") {
    SystemSpec spec = catalog("multicompartment");
    SnapshotMatrix snaps = integrate_rk4(spec, spec.default_x0, {0.0, 0.01, 400}, 10);
    for (int k = 0; k <= 400; ++k) {
        CHECK(std::abs(snaps.values.col(k).sum() - 1.0) < 1e-10);
    }
}

TEST_CASE("rk4 agrees with the analytic propagator on every catalog system") {
    std::mt19937 rng(4242);
    for (const char* name : {"switching-frequency", "switching-damped-driven", "hybrid-coupled-osc",
                             "multicompartment", "cont-frequency", "cont-damping", "cont-coupled-osc",
                             "example1-scalar"}) {
        SystemSpec spec = catalog(name);
        TimeGrid grid{0.0, 0.01, 150};
        SnapshotMatrix numeric = integrate_rk4(spec, spec.default_x0, grid, 100);
        double worst = 0.0;
        for (int k = 0; k <= grid.steps; ++k) {
            const Vector exact = fundamental_matrix(spec, grid.time(k), 0.0).m * spec.default_x0.cast<Complex>();
            worst = std::max(worst, (numeric.values.col(k) - exact).norm() / std::max(1.0, exact.norm()));
        }
        INFO(name);
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("propagators compose across intermediate times") {
    std::mt19937 rng(31415);
    std::uniform_int_distribution<int> pick(0, 600);
    for (const char* name : {"switching-frequency", "switching-damped-driven", "multicompartment",
                             "cont-frequency", "cont-damping", "cont-coupled-osc"}) {
        SystemSpec spec = catalog(name);
        for (int rep = 0; rep < 8; ++rep) {
            int a = pick(rng), b = pick(rng), c = pick(rng);
            int lo = std::min({a, b, c}), hi = std::max({a, b, c});
            int mid = a + b + c - lo - hi;
            if (lo == hi) continue;
            const double dt = 0.01;
            Matrix whole = fundamental_matrix(spec, hi * dt, lo * dt).m;
            Matrix split = fundamental_matrix(spec, hi * dt, mid * dt).m *
                           fundamental_matrix(spec, mid * dt, lo * dt).m;
            INFO(name);
            CHECK((whole - split).norm() <= 1e-10 * std::max(1.0, whole.norm()));
        }
    }
}

TEST_CASE("spiral-block matrices commute at different times") {
    SystemSpec spec = catalog("cont-frequency");
    Matrix a1 = system_matrix(spec, 0.3);
    Matrix a2 = system_matrix(spec, 1.9);
    CHECK((a1 * a2 - a2 * a1).norm() < 1e-12);
}

TEST_CASE("scalar example: exponents integrate the coefficient") {
    SystemSpec spec = catalog("example1-scalar");  // a(t) = 1
    KoopmanSpectrumExact ks = koopman_exact(spec, 2.5, 0.5);
    CHECK(std::abs(ks.eigenvalues[0] - 2.0) < 1e-14);
    CHECK(std::abs(ks.modes(0, 0) - 1.0) < 1e-14);
    // Powers of the state observable evolve with integer multiples of the
    // base exponent.
    const Complex z0(0.8, 0.0);
    const Complex zt = std::exp(ks.eigenvalues[0]) * z0;
    for (int m = 2; m <= 4; ++m) {
        const Complex lhs = std::pow(zt, m);
        const Complex rhs = std::exp(static_cast<double>(m) * ks.eigenvalues[0]) * std::pow(z0, m);
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
    KoopmanSpectrumExact trivial = koopman_exact(spec, 1.0, 1.0);
    CHECK(std::abs(trivial.eigenvalues[0]) == 0.0);
}

TEST_CASE("damped-driven exact exponents follow alpha(t) +- 2ti") {
    SystemSpec spec = catalog("switching-damped-driven");
    TimeGrid grid{0.0, 0.01, 700};
    std::vector<Vector> series = koopman_exact_series(spec, grid);
    double worst = 0.0;
    for (int k = 0; k <= grid.steps; ++k) {
        const double t = grid.time(k);
        const double alpha = damped_driven_alpha(t);
        // Branches carry conjugate exponents; compare as a sorted pair.
        double im_hi = std::max(series[k][0].imag(), series[k][1].imag());
        double im_lo = std::min(series[k][0].imag(), series[k][1].imag());
        worst = std::max(worst, std::abs(series[k][0].real() - alpha));
        worst = std::max(worst, std::abs(series[k][1].real() - alpha));
        worst = std::max(worst, std::abs(im_hi - 2.0 * t));
        worst = std::max(worst, std::abs(im_lo + 2.0 * t));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("exact Koopman expansion reproduces the trajectory") {
    for (const char* name : {"switching-frequency", "multicompartment", "cont-damping"}) {
        SystemSpec spec = catalog(name);
        const Vector x0 = spec.default_x0.cast<Complex>();
        for (double t : {0.02, 0.97, 3.51}) {
            KoopmanSpectrumExact ks = koopman_exact(spec, t, 0.0);
            Vector rebuilt = Vector::Zero(spec.dimension());
            for (int i = 0; i < spec.dimension(); ++i) {
                const Complex phi = ks.left_vectors.col(i).dot(x0);
                rebuilt += std::exp(ks.eigenvalues[i]) * phi * ks.modes.col(i);
            }
            const Vector exact = fundamental_matrix(spec, t, 0.0).m * x0;
            INFO(name);
            CHECK((rebuilt - exact).norm() < 1e-10 * std::max(1.0, exact.norm()));
        }
    }
}

TEST_CASE("catalog rejects unknown names and stray overrides") {
    CHECK_THROWS_AS(catalog("no-such-system"), ConfigError);
    CHECK_THROWS_AS(catalog("cont-frequency", {{"bogus_param", 1.0}}), ConfigError);
}

TEST_CASE("catalog overrides change the declared parameter") {
    SystemSpec spec = catalog("switching-frequency", {{"omega1", 3.0}});
    EigenDecomposition d = eig(system_matrix(spec, 0.5));
    CHECK(std::abs(d.values[0].imag() - 3.0) < 1e-12);
}
