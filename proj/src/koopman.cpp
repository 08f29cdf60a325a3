#include "koop/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "koop/errors.hpp"

namespace koop {

namespace {

constexpr double kAliasGuard = 1e-6;  // |arg| >= pi*(1 - guard) counts as aliased

std::vector<Complex> principal_rates(const Vector& mus, double dt) {
    std::vector<Complex> rates;
    rates.reserve(static_cast<std::size_t>(mus.size()));
    for (Eigen::Index i = 0; i < mus.size(); ++i) {
        rates.push_back(std::log(mus[i]) / dt);
    }
    return rates;
}

void fill_koopman_from_tracking(SpectralTimeSeries& series, const BranchTracking& tracking) {
    for (std::size_t k = 0; k < tracking.exponents.size(); ++k) {
        auto& step = series.steps[k];
        const Vector& lam = tracking.exponents[k];
        step.koopman_eigs.assign(lam.data(), lam.data() + lam.size());
        step.matching = tracking.matching[k];
        step.ambiguous = tracking.ambiguous[k];
    }
}

std::vector<SwitchEvent> collect_switches(const SpectralTimeSeries& series,
                                          const std::vector<int>& stencil_sizes) {
    std::vector<SwitchEvent> out;
    const auto& steps = series.steps;
    std::size_t k = 1;
    while (k < steps.size()) {
        if (!steps[k].switch_flag) {
            ++k;
            continue;
        }
        const std::size_t k_first = k;
        while (k < steps.size() && steps[k].switch_flag) ++k;
        const std::size_t k_last = k - 1;
        const int s_first = stencil_sizes[k_first];
        const int s_last = stencil_sizes[k_last];
        SwitchEvent ev;
        // The first flagged window's last pair is the earliest inconsistent
        // transition, so the break lies in [t_{k+s-2}, t_{k+s-1}].
        ev.time = series.grid.time(static_cast<int>(k_first) + s_first - 2);
        ev.window_lo = series.grid.time(static_cast<int>(k_first) - 1);
        ev.window_hi = series.grid.time(static_cast<int>(k_last) + s_last - 1);
        ev.merged = (k_last - k_first + 1) > static_cast<std::size_t>(s_first - 1);
        out.push_back(ev);
    }
    return out;
}

}  // namespace

Matrix embed_rows(const Matrix& restricted, const std::vector<int>& rows, int full_dim) {
    if (static_cast<int>(rows.size()) == full_dim) {
        bool identity_order = true;
        for (int i = 0; i < full_dim; ++i) identity_order &= (rows[static_cast<std::size_t>(i)] == i);
        if (identity_order) return restricted;
    }
    Matrix out = Matrix::Identity(full_dim, full_dim);
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < rows.size(); ++b) {
            out(rows[a], rows[b]) = restricted(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    return out;
}

AnalysisResult algorithm1(const SnapshotMatrix& snaps, const Algorithm1Options& options) {
    if (options.epsilon_rel <= 0.0) throw NumericError("algorithm1: epsilon_rel must be positive");
    const int m = snaps.rows();
    const int last_col = static_cast<int>(snaps.values.cols()) - 1;

    AnalysisResult result;
    SpectralTimeSeries& series = result.series;
    OperatorFamily& family = result.family;
    family.accumulated.push_back(Matrix::Identity(m, m));

    SpectralStep step0;
    step0.koopman_eigs.assign(static_cast<std::size_t>(m), Complex(0.0, 0.0));
    series.steps.push_back(step0);

    std::vector<int> stencil_sizes{0};  // per step k, for switch-time localization
    std::vector<Vector> accumulated_mus{Vector::Ones(m)};
    std::vector<Matrix> accumulated_vecs{Matrix::Identity(m, m)};

    int k = 1;
    while (true) {
        // Activity probe over the widest window the stencil could use.
        const int probe_span = std::max(options.stencil.value_or(m + 1), 1) + 1;
        const int probe_last = std::min(k - 1 + probe_span, last_col);
        if (probe_last <= k - 1) break;
        std::vector<int> active = select_active_observables(snaps, k - 1, probe_last,
                                                            options.activity_tol, options.exclude_rows);
        int s = options.stencil.value_or(static_cast<int>(active.size()) + 1);
        if (s < 1) throw NumericError("algorithm1: stencil size must be >= 1");
        if (k + s - 1 > last_col) break;

        // A row whose direction sits below the rank cutoff of this window is
        // not identifiable yet; drop the faintest rows until the fit uses the
        // full restricted dimension, so the local operator never carries
        // spurious null directions into the accumulated products.
        StencilWindow window{k, s};
        LocalOperator local = local_operator_rows(snaps, window, active, options.rank_tol);
        while (local.rank_used < static_cast<int>(active.size()) && active.size() > 1) {
            std::size_t faintest = 0;
            double faintest_mag = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < active.size(); ++i) {
                double mag = 0.0;
                for (int c = window.first_col(); c <= window.last_col(); ++c) {
                    mag = std::max(mag, std::abs(snaps.values(active[i], c)));
                }
                if (mag < faintest_mag) {
                    faintest_mag = mag;
                    faintest = i;
                }
            }
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(faintest));
            if (!options.stencil.has_value()) {
                s = static_cast<int>(active.size()) + 1;  // shrinks, stays in bounds
                window = StencilWindow{k, s};
            }
            local = local_operator_rows(snaps, window, active, options.rank_tol);
        }
        const bool flagged = local.fit_residual_rel() > options.epsilon_rel;

        Matrix applied = embed_rows(local.m, active, m);
        if (flagged) {
            if (family.locals.empty()) {
                throw NumericError(
                    "algorithm1: the first stencil window already exceeds the residual threshold; "
                    "start the data inside one segment so a warm-up operator exists");
            }
            applied = family.locals.back().m;
        }

        LocalOperator stored = local;
        stored.m = applied;
        family.locals.push_back(std::move(stored));
        family.accumulated.push_back(applied * family.accumulated.back());

        SpectralStep step;
        step.switch_flag = flagged;
        step.residual_abs = local.fit_residual_norm;
        step.residual_rel = local.fit_residual_rel();
        step.active_rows = active;
        step.system_eigs = principal_rates(eig(applied).values, snaps.grid.dt);
        const EigenDecomposition acc_eig = eig(family.accumulated.back());
        accumulated_mus.push_back(acc_eig.values);
        accumulated_vecs.push_back(acc_eig.right_vectors);
        series.steps.push_back(std::move(step));
        stencil_sizes.push_back(s);
        ++k;
    }

    const int effective_steps = static_cast<int>(series.steps.size()) - 1;
    series.grid = TimeGrid{snaps.grid.t0, snaps.grid.dt, effective_steps};
    family.grid = series.grid;

    fill_koopman_from_tracking(series, track_eigenvalue_branches(accumulated_mus, accumulated_vecs));
    result.switches = collect_switches(series, stencil_sizes);
    return result;
}

AnalysisResult algorithm2(const SnapshotMatrix& u_snaps) {
    const int m = u_snaps.rows();
    const int steps = static_cast<int>(u_snaps.values.cols()) - 1;
    if (steps < 1) throw NumericError("algorithm2: need at least two snapshots");

    AnalysisResult result;
    SpectralTimeSeries& series = result.series;
    OperatorFamily& family = result.family;
    series.grid = TimeGrid{u_snaps.grid.t0, u_snaps.grid.dt, steps};
    family.grid = series.grid;
    family.accumulated.push_back(Matrix::Identity(m, m));

    std::vector<int> identity_matching(static_cast<std::size_t>(m));
    std::iota(identity_matching.begin(), identity_matching.end(), 0);

    SpectralStep step0;
    step0.koopman_eigs.assign(static_cast<std::size_t>(m), Complex(0.0, 0.0));
    step0.matching = identity_matching;
    series.steps.push_back(step0);

    Vector lambda = Vector::Zero(m);  // running sums of local logarithms
    for (int k = 1; k <= steps; ++k) {
        Vector ratios(m);
        for (int i = 0; i < m; ++i) {
            const Complex denom = u_snaps.values(i, k - 1);
            if (std::abs(denom) == 0.0) {
                throw NumericError("algorithm2: observable " + std::to_string(i + 1) +
                                   " vanishes at column " + std::to_string(k - 1));
            }
            ratios[i] = u_snaps.values(i, k) / denom;
            const double ang = std::arg(ratios[i]);
            if (std::abs(ang) >= M_PI * (1.0 - kAliasGuard)) {
                throw NumericError("algorithm2: local phase increment of observable " +
                                   std::to_string(i + 1) + " at step " + std::to_string(k) +
                                   " reaches the +-pi aliasing boundary; decrease dt");
            }
        }

        LocalOperator local;
        local.m = Matrix(ratios.asDiagonal());
        local.window = StencilWindow{k, 1};
        local.rank_used = m;
        local.target_norm = u_snaps.values.col(k).norm();
        local.pairs_norm = local.target_norm;
        family.locals.push_back(local);
        family.accumulated.push_back(local.m * family.accumulated.back());

        SpectralStep step;
        step.matching = identity_matching;
        step.system_eigs.reserve(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const Complex local_log = std::log(ratios[i]);
            lambda[i] += local_log;
            step.system_eigs.push_back(local_log / u_snaps.grid.dt);
        }
        step.koopman_eigs.assign(lambda.data(), lambda.data() + m);
        series.steps.push_back(std::move(step));
    }
    return result;
}

AnalysisResult moving_stencil_spectrum(const SnapshotMatrix& snaps, int stencil, double rank_tol) {
    if (stencil < 2) throw NumericError("moving_stencil_spectrum: stencil must be >= 2");
    const int m = snaps.rows();
    const int last_col = static_cast<int>(snaps.values.cols()) - 1;
    const int steps = last_col - stencil + 1;
    if (steps < 1) throw NumericError("moving_stencil_spectrum: not enough snapshots for the stencil");

    AnalysisResult result;
    SpectralTimeSeries& series = result.series;
    OperatorFamily& family = result.family;
    series.grid = TimeGrid{snaps.grid.t0, snaps.grid.dt, steps};
    family.grid = series.grid;
    family.accumulated.push_back(Matrix::Identity(m, m));

    SpectralStep step0;
    step0.koopman_eigs.assign(static_cast<std::size_t>(m), Complex(0.0, 0.0));
    series.steps.push_back(step0);

    std::vector<Vector> accumulated_mus{Vector::Ones(m)};
    std::vector<Matrix> accumulated_vecs{Matrix::Identity(m, m)};
    for (int k = 1; k <= steps; ++k) {
        LocalOperator local = local_operator(snaps, StencilWindow{k, stencil}, rank_tol);
        family.accumulated.push_back(local.m * family.accumulated.back());
        SpectralStep step;
        step.residual_abs = local.fit_residual_norm;
        step.residual_rel = local.fit_residual_rel();
        step.system_eigs = principal_rates(eig(local.m).values, snaps.grid.dt);
        const EigenDecomposition acc_eig = eig(family.accumulated.back());
        accumulated_mus.push_back(acc_eig.values);
        accumulated_vecs.push_back(acc_eig.right_vectors);
        family.locals.push_back(std::move(local));
        series.steps.push_back(std::move(step));
    }
    fill_koopman_from_tracking(series, track_eigenvalue_branches(accumulated_mus, accumulated_vecs));
    return result;
}

BranchTracking extract_koopman_eigs(const OperatorFamily& family) {
    std::vector<Vector> mus;
    std::vector<Matrix> vecs;
    mus.reserve(family.accumulated.size());
    vecs.reserve(family.accumulated.size());
    for (const Matrix& acc : family.accumulated) {
        EigenDecomposition d = eig(acc);
        mus.push_back(std::move(d.values));
        vecs.push_back(std::move(d.right_vectors));
    }
    return track_eigenvalue_branches(mus, vecs);
}

KoopmanDecomposition koopman_mode_decomposition(const Matrix& m, const Vector& x0) {
    if (m.rows() != x0.size()) throw NumericError("koopman_mode_decomposition: dimension mismatch");
    EigenDecomposition d = eig(m);
    const double cond = eigenbasis_condition(d.right_vectors);
    if (!(cond <= 1e8)) {
        throw NumericError("koopman_mode_decomposition: eigenbasis condition " + std::to_string(cond) +
                           " exceeds 1e8 (defective or near-defective operator)");
    }
    KoopmanDecomposition out;
    out.eigenvalues = d.values.unaryExpr([](Complex mu) { return std::log(mu); });
    out.weights = d.left_vectors.adjoint() * x0;
    out.modes = d.right_vectors;
    return out;
}

std::vector<double> error_ek(const OperatorFamily& family, const SystemSpec& spec) {
    if (!spec.has_analytic_oracle()) {
        throw NumericError("error_ek: spec has no analytic propagator");
    }
    std::vector<double> out;
    out.reserve(family.accumulated.size());
    for (std::size_t k = 0; k < family.accumulated.size(); ++k) {
        const Matrix exact = fundamental_matrix(spec, family.grid.time(static_cast<int>(k)), family.grid.t0).m;
        out.push_back(spectral_norm(family.accumulated[k] - exact) / spectral_norm(exact));
    }
    return out;
}

Theorem2Prediction theorem2_bias(double sigma, double sigma_dot, double omega, double omega_dot,
                                 double dt) {
    if (omega == 0.0) throw NumericError("theorem2_bias: omega must be nonzero");
    const double radicand = 1.0 - sigma_dot / (omega * omega);
    if (radicand < 0.0) {
        throw NumericError("theorem2_bias: 1 - sigma_dot/omega^2 is negative, outside the theorem's range");
    }
    Theorem2Prediction p;
    p.log_abs_mu = (sigma + omega_dot / (2.0 * omega)) * dt;
    p.arg_mu = omega * dt * std::sqrt(radicand);
    return p;
}

Matrix estimate_generator(const Matrix& one_step, double dt) {
    if (dt <= 0.0) throw NumericError("estimate_generator: dt must be positive");
    return matrix_log(one_step) / dt;
}

std::vector<SegmentEstimate> estimate_segment_generators(const SnapshotMatrix& snaps,
                                                         const std::vector<SwitchEvent>& switches,
                                                         const Algorithm1Options& options) {
    const double dt = snaps.grid.dt;
    const int last_col = static_cast<int>(snaps.values.cols()) - 1;

    std::vector<double> boundaries{snaps.grid.t0};
    for (const auto& ev : switches) boundaries.push_back(ev.time);
    boundaries.push_back(snaps.grid.time(last_col));

    std::vector<SegmentEstimate> out;
    for (std::size_t b = 0; b + 1 < boundaries.size(); ++b) {
        // Keep clear of the straddle windows at both ends of the segment.
        const int margin = 2;
        int k_lo = static_cast<int>(std::ceil((boundaries[b] - snaps.grid.t0) / dt - 1e-9)) + margin;
        int k_hi = static_cast<int>(std::floor((boundaries[b + 1] - snaps.grid.t0) / dt + 1e-9)) - margin;
        k_lo = std::max(k_lo, 0);
        k_hi = std::min(k_hi, last_col);
        if (k_hi - k_lo < 2) continue;

        SegmentEstimate est;
        est.t_begin = boundaries[b];
        est.t_end = boundaries[b + 1];
        // Activity filter only: rank handling is the pooled SVD's job, and a
        // segment-wide pair pool is full-rank for every truly active row.
        for (int i = 0; i < snaps.rows(); ++i) {
            if (std::find(options.exclude_rows.begin(), options.exclude_rows.end(), i) !=
                options.exclude_rows.end()) {
                continue;
            }
            double variation = 0.0;
            for (int k = k_lo; k <= k_hi; ++k) {
                variation = std::max(variation, std::abs(snaps.values(i, k) - snaps.values(i, k_lo)));
            }
            if (variation > options.activity_tol) est.rows.push_back(i);
        }
        if (est.rows.empty()) continue;
        const Matrix pooled = pooled_operator(snaps, k_lo, k_hi, est.rows, options.rank_tol);
        est.generator = estimate_generator(pooled, dt);
        out.push_back(std::move(est));
    }
    return out;
}

}  // namespace koop
