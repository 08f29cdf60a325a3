#include "koop/systems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "koop/branching.hpp"
#include "koop/errors.hpp"

namespace koop {

namespace {

constexpr double kTimeSnap = 1e-12;  // switch times within this of t compare equal

Matrix chop_imag(const Matrix& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (m.imag().cwiseAbs().maxCoeff() <= 1e-13 * scale) {
        return m.real().cast<Complex>();
    }
    return m;
}

Matrix harmonic_oscillator_block(double omega_sq) {
    Matrix a(2, 2);
    a << 0.0, 1.0, -omega_sq, 0.0;
    return a;
}

/// Consumes recognized keys from `overrides`, erroring on leftovers so typos
/// in parameter names surface immediately.
class ParamReader {
public:
    explicit ParamReader(std::map<std::string, double> overrides) : params_(std::move(overrides)) {}

    double get(const std::string& key, double fallback) {
        auto it = params_.find(key);
        if (it == params_.end()) return fallback;
        const double v = it->second;
        params_.erase(it);
        return v;
    }

    void finish(const std::string& catalog_name) const {
        if (!params_.empty()) {
            std::ostringstream msg;
            msg << "catalog '" << catalog_name << "': unknown parameter overrides:";
            for (const auto& [k, v] : params_) msg << " " << k;
            throw ConfigError(msg.str());
        }
    }

private:
    std::map<std::string, double> params_;
};

std::vector<double> alternating_switch_times(double period, double horizon) {
    std::vector<double> times;
    for (double t = 0.0; t <= horizon; t += period) times.push_back(t);
    return times;
}

}  // namespace

double HarmonicFunction::operator()(double t) const {
    return constant + cos_amp * std::cos(freq * t) + sin_amp * std::sin(freq * t);
}

double HarmonicFunction::derivative(double t) const {
    return -cos_amp * freq * std::sin(freq * t) + sin_amp * freq * std::cos(freq * t);
}

double HarmonicFunction::integral(double t0, double t1) const {
    if (freq == 0.0) {
        return (constant + cos_amp) * (t1 - t0);  // cos(0) = 1, sin(0) = 0
    }
    double v = constant * (t1 - t0);
    v += (cos_amp / freq) * (std::sin(freq * t1) - std::sin(freq * t0));
    v -= (sin_amp / freq) * (std::cos(freq * t1) - std::cos(freq * t0));
    return v;
}

int HybridSystem::segment_of(double t) const {
    if (switch_times.empty()) throw NumericError("hybrid system has no segments");
    if (t < switch_times.front() - kTimeSnap) {
        throw NumericError("hybrid system queried before its origin time");
    }
    // Right-continuous: segment l covers [T_l, T_{l+1}); times within the
    // snap tolerance of a switch belong to the later segment.
    auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t + kTimeSnap);
    return static_cast<int>(std::distance(switch_times.begin(), it)) - 1;
}

int SystemSpec::dimension() const {
    return std::visit(
        [](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HybridSystem>) {
                return static_cast<int>(v.matrices.front().rows());
            } else if constexpr (std::is_same_v<T, CommutingFamily>) {
                return static_cast<int>(v.eigenvectors.rows());
            } else if constexpr (std::is_same_v<T, SpiralBlock>) {
                return 2;
            } else {
                return v.dimension;
            }
        },
        variant);
}

bool SystemSpec::has_analytic_oracle() const {
    return !std::holds_alternative<GenericSystem>(variant);
}

Matrix system_matrix(const SystemSpec& spec, double t) {
    return std::visit(
        [&](const auto& v) -> Matrix {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, HybridSystem>) {
                return v.matrices[static_cast<std::size_t>(v.segment_of(t))];
            } else if constexpr (std::is_same_v<T, CommutingFamily>) {
                const int n = static_cast<int>(v.eigenvectors.rows());
                Vector lam(n);
                for (int i = 0; i < n; ++i) lam[i] = Complex(v.eigen_re[i](t), v.eigen_im[i](t));
                Matrix a = v.eigenvectors * lam.asDiagonal() *
                           v.eigenvectors.partialPivLu().solve(Matrix::Identity(n, n));
                return v.real_state ? chop_imag(a) : a;
            } else if constexpr (std::is_same_v<T, SpiralBlock>) {
                Matrix a(2, 2);
                const double s = v.sigma(t);
                const double w = v.omega(t);
                a << s, w, -w, s;
                return a;
            } else {
                if (!v.matrix) throw NumericError("generic system has no matrix function");
                Matrix a = v.matrix(t);
                if (!a.allFinite()) throw NumericError("A(t) evaluated to non-finite entries");
                return a;
            }
        },
        spec.variant);
}

FundamentalMatrix fundamental_matrix(const SystemSpec& spec, double t, double t0) {
    if (t < t0 - kTimeSnap) throw NumericError("fundamental_matrix: requires t >= t0");
    if (std::holds_alternative<GenericSystem>(spec.variant)) {
        throw NumericError("fundamental_matrix: generic systems have no analytic propagator; use integrate_rk4");
    }
    const int n = spec.dimension();
    FundamentalMatrix out{t, t0, Matrix::Identity(n, n)};
    if (t <= t0 + kTimeSnap) return out;

    if (const auto* hy = std::get_if<HybridSystem>(&spec.variant)) {
        double cur = t0;
        int l = hy->segment_of(t0);
        const int last = static_cast<int>(hy->switch_times.size()) - 1;
        while (cur < t - kTimeSnap) {
            const double seg_end =
                (l < last) ? hy->switch_times[static_cast<std::size_t>(l) + 1] : std::numeric_limits<double>::infinity();
            const double next = std::min(t, seg_end);
            if (next > cur + kTimeSnap) {
                out.m = expm(hy->matrices[static_cast<std::size_t>(l)] * (next - cur)) * out.m;
            }
            cur = next;
            if (l < last && cur >= seg_end - kTimeSnap) ++l;
        }
        return out;
    }
    if (const auto* cf = std::get_if<CommutingFamily>(&spec.variant)) {
        Vector exps(n);
        for (int i = 0; i < n; ++i) {
            exps[i] = std::exp(Complex(cf->eigen_re[static_cast<std::size_t>(i)].integral(t0, t),
                                       cf->eigen_im[static_cast<std::size_t>(i)].integral(t0, t)));
        }
        Matrix m = cf->eigenvectors * exps.asDiagonal() *
                   cf->eigenvectors.partialPivLu().solve(Matrix::Identity(n, n));
        out.m = cf->real_state ? chop_imag(m) : m;
        return out;
    }
    const auto& sp = std::get<SpiralBlock>(spec.variant);
    const double alpha = sp.sigma.integral(t0, t);
    const double beta = sp.omega.integral(t0, t);
    Matrix m(2, 2);
    m << std::cos(beta), std::sin(beta), -std::sin(beta), std::cos(beta);
    out.m = std::exp(alpha) * m;
    return out;
}

SnapshotMatrix integrate_rk4(const SystemSpec& spec, const RealVector& x0, const TimeGrid& grid,
                             int substeps) {
    if (substeps < 1) throw NumericError("integrate_rk4: substeps must be >= 1");
    const int n = spec.dimension();
    if (x0.size() != n) throw NumericError("integrate_rk4: initial condition dimension mismatch");

    const auto* hy = std::get_if<HybridSystem>(&spec.variant);

    SnapshotMatrix snaps;
    snaps.grid = grid;
    snaps.values.resize(n, grid.columns());
    snaps.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) snaps.labels[static_cast<std::size_t>(i)] = "x" + std::to_string(i + 1);

    Vector x = x0.cast<Complex>();
    snaps.values.col(0) = x;

    for (int k = 0; k < grid.steps; ++k) {
        const double ta = grid.time(k);
        const double tb = grid.time(k + 1);

        // Break the interval at hybrid switch times so no RK4 step straddles
        // a discontinuity of A(t).
        std::vector<double> cuts{ta};
        if (hy != nullptr) {
            for (double T : hy->switch_times) {
                if (T > ta + kTimeSnap && T < tb - kTimeSnap) cuts.push_back(T);
            }
        }
        cuts.push_back(tb);

        for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
            const double lo = cuts[p];
            const double hi = cuts[p + 1];
            const int nsub = std::max(1, static_cast<int>(std::ceil(substeps * (hi - lo) / grid.dt - 1e-9)));
            const double h = (hi - lo) / nsub;

            // Inside one piece a hybrid matrix is constant; pick it from the
            // midpoint so endpoint evaluations never read the next segment.
            Matrix a_const;
            if (hy != nullptr) a_const = system_matrix(spec, 0.5 * (lo + hi));
            auto eval = [&](double tt) -> Matrix {
                return hy != nullptr ? a_const : system_matrix(spec, tt);
            };

            double tcur = lo;
            for (int j = 0; j < nsub; ++j) {
                const Matrix a1 = eval(tcur);
                const Matrix a2 = eval(tcur + 0.5 * h);
                const Matrix a4 = eval(tcur + h);
                const Vector k1 = a1 * x;
                const Vector k2 = a2 * (x + 0.5 * h * k1);
                const Vector k3 = a2 * (x + 0.5 * h * k2);
                const Vector k4 = a4 * (x + h * k3);
                x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                tcur += h;
            }
        }
        if (!x.allFinite()) throw NumericError("integrate_rk4: trajectory diverged to non-finite values");
        snaps.values.col(k + 1) = x;
    }
    return snaps;
}

std::pair<double, double> coupled_frequencies(double m1, double m2, double k1, double k2, double k3) {
    if (m1 <= 0.0 || m2 <= 0.0 || k1 <= 0.0 || k3 <= 0.0 || k2 < 0.0) {
        throw NumericError("coupled_frequencies: masses and outer elasticities must be positive, coupling non-negative");
    }
    // det(K - nu M) = 0 expands to a quadratic in nu.
    const double a = m1 * m2;
    const double b = -((k1 + k2) * m2 + (k2 + k3) * m1);
    const double c = (k1 + k2) * (k2 + k3) - k2 * k2;
    const double disc = b * b - 4.0 * a * c;
    const double root = std::sqrt(std::max(0.0, disc));
    const double nu1 = (-b + root) / (2.0 * a);
    const double nu2 = (-b - root) / (2.0 * a);
    return {std::sqrt(nu1), std::sqrt(nu2)};
}

namespace {

SystemSpec make_switching_frequency(ParamReader& p) {
    const double w1 = p.get("omega1", 2.0);
    const double w2 = p.get("omega2", 1.0);
    const double period = p.get("period", 1.0);
    const double horizon = p.get("horizon", 120.0);
    HybridSystem hy;
    hy.switch_times = alternating_switch_times(period, horizon);
    for (std::size_t l = 0; l < hy.switch_times.size(); ++l) {
        const double w = (l % 2 == 0) ? w1 : w2;
        hy.matrices.push_back(harmonic_oscillator_block(w * w));
    }
    SystemSpec spec;
    spec.variant = std::move(hy);
    spec.default_x0 = RealVector::Constant(2, 1.0);
    return spec;
}

SystemSpec make_switching_damped_driven(ParamReader& p) {
    const double s1 = p.get("sigma1", 1.0);
    const double s2 = p.get("sigma2", -1.0);
    const double w = p.get("omega", 2.0);
    const double horizon = p.get("horizon", 120.0);
    HybridSystem hy;
    // T_0 = 0 and T_l = T_{l-1} + l/2.
    double T = 0.0;
    for (int l = 0; T <= horizon; ++l) {
        hy.switch_times.push_back(T);
        const double s = (l % 2 == 0) ? s1 : s2;
        Matrix a(2, 2);
        a << s, 1.0, -w * w, s;
        hy.matrices.push_back(a);
        T += 0.5 * (l + 1);
    }
    SystemSpec spec;
    spec.variant = std::move(hy);
    spec.default_x0 = RealVector::Constant(2, 1.0);
    return spec;
}

Matrix coupled_oscillator_matrix(double m1, double m2, double k1, double k2, double k3) {
    Matrix a = Matrix::Zero(4, 4);
    a(0, 2) = 1.0;
    a(1, 3) = 1.0;
    a(2, 0) = -(k1 + k2) / m1;
    a(2, 1) = k2 / m1;
    a(3, 0) = k2 / m2;
    a(3, 1) = -(k2 + k3) / m2;
    return a;
}

SystemSpec make_hybrid_coupled_osc(ParamReader& p) {
    const double m1 = p.get("m1", 1.0);
    const double m2 = p.get("m2", 1.0);
    const double k2 = p.get("k2", 1.0);
    const double k1_even = p.get("k1_even", 4.0);
    const double k1_odd = p.get("k1_odd", 9.0);
    const double k3_even = p.get("k3_even", 9.0);
    const double k3_odd = p.get("k3_odd", 16.0);
    const double period = p.get("period", 1.0);
    const double horizon = p.get("horizon", 120.0);
    HybridSystem hy;
    hy.switch_times = alternating_switch_times(period, horizon);
    for (std::size_t l = 0; l < hy.switch_times.size(); ++l) {
        const bool even = (l % 2 == 0);
        hy.matrices.push_back(coupled_oscillator_matrix(m1, m2, even ? k1_even : k1_odd, k2,
                                                        even ? k3_even : k3_odd));
    }
    SystemSpec spec;
    spec.variant = std::move(hy);
    spec.default_x0 = RealVector::Constant(4, 1.0);
    return spec;
}

SystemSpec make_multicompartment(ParamReader& p) {
    // (i, j, default rate, default delay); rates are transport i -> j.
    struct Edge {
        int i, j;
        double rate, delay;
    };
    std::vector<Edge> edges = {
        {1, 2, 0.0988, 0.0}, {2, 1, 0.1410, 5.0},  {2, 3, 0.0590, 3.0},
        {3, 4, 0.1150, 18.0}, {4, 1, 0.0149, 30.0}, {4, 5, 0.0154, 55.0},
    };
    for (auto& e : edges) {
        const std::string suffix = std::to_string(e.i) + std::to_string(e.j);
        e.rate = p.get("K" + suffix, e.rate);
        e.delay = p.get("T" + suffix, e.delay);
    }

    std::set<double> times{0.0};
    for (const auto& e : edges) times.insert(e.delay);

    HybridSystem hy;
    hy.switch_times.assign(times.begin(), times.end());
    for (double T : hy.switch_times) {
        Matrix a = Matrix::Zero(5, 5);
        for (const auto& e : edges) {
            if (T >= e.delay) {
                a(e.i - 1, e.i - 1) -= e.rate;
                a(e.j - 1, e.i - 1) += e.rate;
            }
        }
        hy.matrices.push_back(a);
    }
    SystemSpec spec;
    spec.variant = std::move(hy);
    spec.default_x0 = RealVector::Zero(5);
    spec.default_x0[0] = 1.0;
    return spec;
}

SystemSpec make_cont_frequency(ParamReader& p) {
    SpiralBlock sp;
    sp.sigma = HarmonicFunction::constant_fn(p.get("sigma0", 0.0));
    sp.omega = {p.get("omega0", 2.0), p.get("A_d", 0.5), p.get("B_d", 0.0), p.get("omega_d", M_PI)};
    SystemSpec spec;
    spec.variant = sp;
    spec.default_x0 = RealVector::Constant(2, 1.0);
    return spec;
}

SystemSpec make_cont_damping(ParamReader& p) {
    SpiralBlock sp;
    sp.sigma = {p.get("sigma0", 0.0), p.get("A_d", 0.5), p.get("B_d", 0.0), p.get("omega_d", M_PI)};
    sp.omega = HarmonicFunction::constant_fn(p.get("omega0", 2.0));
    SystemSpec spec;
    spec.variant = sp;
    spec.default_x0 = RealVector::Constant(2, 1.0);
    return spec;
}

SystemSpec make_cont_coupled_osc(ParamReader& p) {
    const double m1 = p.get("m1", 1.0);
    const double m2 = p.get("m2", 1.0);
    const double k1 = p.get("k1", 2.0);
    const double k2 = p.get("k2", 1.0);
    const double k3 = p.get("k3", 3.0);
    const auto [w1_0, w2_0] = coupled_frequencies(m1, m2, k1, k2, k3);

    HarmonicFunction w1{w1_0, p.get("f1_cos", 0.5), p.get("f1_sin", 0.5), p.get("f1_freq", 2.0)};
    HarmonicFunction w2{w2_0, p.get("f2_cos", 0.5), p.get("f2_sin", 0.5), p.get("f2_freq", 0.4)};

    // State ordering (x1, x2, x3, x4) with rotation pairs (x1, x3), (x2, x4):
    // eigenvectors e_i +- i e_j per pair, eigenvalues +- i omega_p(t).
    const Complex im(0.0, 1.0);
    Matrix r = Matrix::Zero(4, 4);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    // pair (x1, x3): columns 0 (+i w1) and 1 (-i w1)
    r.col(0) << inv_sqrt2, 0.0, im * inv_sqrt2, 0.0;
    r.col(1) << inv_sqrt2, 0.0, -im * inv_sqrt2, 0.0;
    // pair (x2, x4): columns 2 (+i w2) and 3 (-i w2)
    r.col(2) << 0.0, inv_sqrt2, 0.0, im * inv_sqrt2;
    r.col(3) << 0.0, inv_sqrt2, 0.0, -im * inv_sqrt2;

    CommutingFamily cf;
    cf.eigenvectors = r;
    const HarmonicFunction zero = HarmonicFunction::constant_fn(0.0);
    auto negate = [](HarmonicFunction f) {
        f.constant = -f.constant;
        f.cos_amp = -f.cos_amp;
        f.sin_amp = -f.sin_amp;
        return f;
    };
    cf.eigen_re = {zero, zero, zero, zero};
    cf.eigen_im = {w1, negate(w1), w2, negate(w2)};
    cf.real_state = true;

    SystemSpec spec;
    spec.variant = std::move(cf);
    spec.default_x0 = RealVector::Constant(4, 1.0);
    return spec;
}

SystemSpec make_example1_scalar(ParamReader& p) {
    CommutingFamily cf;
    cf.eigenvectors = Matrix::Identity(1, 1);
    cf.eigen_re = {HarmonicFunction{p.get("a_const", 1.0), p.get("a_cos", 0.0), p.get("a_sin", 0.0),
                                    p.get("a_freq", 0.0)}};
    cf.eigen_im = {HarmonicFunction::constant_fn(0.0)};
    cf.real_state = true;

    SystemSpec spec;
    spec.variant = std::move(cf);
    spec.default_x0 = RealVector::Constant(1, 1.0);
    return spec;
}

}  // namespace

SystemSpec catalog(const std::string& name, const std::map<std::string, double>& overrides) {
    ParamReader p(overrides);
    SystemSpec spec;
    if (name == "switching-frequency") {
        spec = make_switching_frequency(p);
    } else if (name == "switching-damped-driven") {
        spec = make_switching_damped_driven(p);
    } else if (name == "hybrid-coupled-osc") {
        spec = make_hybrid_coupled_osc(p);
    } else if (name == "multicompartment") {
        spec = make_multicompartment(p);
    } else if (name == "cont-frequency") {
        spec = make_cont_frequency(p);
    } else if (name == "cont-damping") {
        spec = make_cont_damping(p);
    } else if (name == "cont-coupled-osc") {
        spec = make_cont_coupled_osc(p);
    } else if (name == "example1-scalar") {
        spec = make_example1_scalar(p);
    } else {
        throw ConfigError("unknown catalog system '" + name + "'");
    }
    p.finish(name);
    spec.name = name;
    return spec;
}

KoopmanSpectrumExact koopman_exact(const SystemSpec& spec, double t, double t0) {
    if (!spec.has_analytic_oracle()) {
        throw NumericError("koopman_exact: spec has no analytic propagator");
    }
    const int n = spec.dimension();
    KoopmanSpectrumExact out;
    out.t = t;
    out.t0 = t0;

    if (const auto* cf = std::get_if<CommutingFamily>(&spec.variant)) {
        out.eigenvalues.resize(n);
        for (int i = 0; i < n; ++i) {
            out.eigenvalues[i] = Complex(cf->eigen_re[static_cast<std::size_t>(i)].integral(t0, t),
                                         cf->eigen_im[static_cast<std::size_t>(i)].integral(t0, t));
        }
        out.modes = cf->eigenvectors;
        out.left_vectors = cf->eigenvectors.partialPivLu().solve(Matrix::Identity(n, n)).adjoint();
        return out;
    }
    if (const auto* sp = std::get_if<SpiralBlock>(&spec.variant)) {
        const double alpha = sp->sigma.integral(t0, t);
        const double beta = sp->omega.integral(t0, t);
        out.eigenvalues.resize(2);
        out.eigenvalues[0] = Complex(alpha, beta);
        out.eigenvalues[1] = Complex(alpha, -beta);
        const Complex im(0.0, 1.0);
        Matrix v(2, 2);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        v.col(0) << inv_sqrt2, im * inv_sqrt2;
        v.col(1) << inv_sqrt2, -im * inv_sqrt2;
        out.modes = v;
        out.left_vectors = v.partialPivLu().solve(Matrix::Identity(2, 2)).adjoint();
        return out;
    }
    // Hybrid: spectrum of the propagator, principal branch per eigenvalue.
    EigenDecomposition d = eig(fundamental_matrix(spec, t, t0).m);
    out.eigenvalues = d.values.unaryExpr([](Complex mu) { return std::log(mu); });
    out.modes = d.right_vectors;
    out.left_vectors = d.left_vectors;
    return out;
}

std::vector<Vector> koopman_exact_series(const SystemSpec& spec, const TimeGrid& grid) {
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(grid.columns()));
    if (std::holds_alternative<HybridSystem>(spec.variant)) {
        std::vector<Vector> mus;
        std::vector<Matrix> vecs;
        mus.reserve(static_cast<std::size_t>(grid.columns()));
        for (int k = 0; k <= grid.steps; ++k) {
            EigenDecomposition d = eig(fundamental_matrix(spec, grid.time(k), grid.t0).m);
            mus.push_back(std::move(d.values));
            vecs.push_back(std::move(d.right_vectors));
        }
        return track_eigenvalue_branches(mus, vecs).exponents;
    }
    for (int k = 0; k <= grid.steps; ++k) {
        out.push_back(koopman_exact(spec, grid.time(k), grid.t0).eigenvalues);
    }
    return out;
}

}  // namespace koop
