// Command-line front end: simulate catalog or user-defined linear
// non-autonomous systems, run the spectral algorithms on snapshot files,
// compare against analytic propagators, and sweep the moving-stencil bias
// over time steps.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "koop/config.hpp"
#include "koop/csv.hpp"
#include "koop/errors.hpp"
#include "koop/koopman.hpp"
#include "koop/snapshots.hpp"
#include "koop/systems.hpp"

namespace {

using nlohmann::json;

struct GridFlags {
    double t0 = 0.0;
    double dt = 0.01;
    int steps = 1000;
};

void add_grid_flags(CLI::App* cmd, GridFlags& grid) {
    cmd->add_option("--t0", grid.t0, "start time");
    cmd->add_option("--dt", grid.dt, "time step");
    cmd->add_option("--steps", grid.steps, "number of steps (columns - 1)");
}

koop::RealVector resolve_x0(const koop::SystemSpec& spec, const std::string& x0_text) {
    if (!x0_text.empty()) return koop::parse_x0(x0_text);
    if (spec.default_x0.size() == 0) {
        throw koop::ConfigError("this system has no default initial condition; pass --x0");
    }
    return spec.default_x0;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw koop::IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw koop::IoError("failed while writing '" + path + "'");
}

json switch_report(const koop::AnalysisResult& result, double dt, const std::string& algorithm) {
    json report;
    report["algorithm"] = algorithm;
    json times = json::array();
    json intervals = json::array();
    for (const auto& ev : result.switches) {
        times.push_back(ev.time);
        intervals.push_back(json{{"lo", ev.window_lo}, {"hi", ev.window_hi}, {"merged", ev.merged}});
    }
    report["switch_times"] = times;
    report["switch_intervals"] = intervals;
    report["uncertainty"] = dt;
    report["caveat"] =
        "a flagged run longer than one stencil span is reported as one merged interval and may "
        "contain several switches";
    json ambiguous = json::array();
    for (std::size_t k = 0; k < result.series.steps.size(); ++k) {
        if (result.series.steps[k].ambiguous) ambiguous.push_back(k);
    }
    report["ambiguous_matching_steps"] = ambiguous;
    return report;
}

json segments_report(const std::vector<koop::SegmentEstimate>& segments) {
    json out = json::array();
    for (const auto& seg : segments) {
        json rows = json::array();
        for (int r : seg.rows) rows.push_back(r);
        json gen = json::array();
        for (Eigen::Index r = 0; r < seg.generator.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < seg.generator.cols(); ++c) {
                row.push_back(seg.generator(r, c).real());
            }
            gen.push_back(std::move(row));
        }
        out.push_back(json{{"t_begin", seg.t_begin},
                           {"t_end", seg.t_end},
                           {"active_rows", rows},
                           {"generator", gen}});
    }
    return out;
}

struct AnalyzeFlags {
    std::string input;
    std::string algorithm = "alg1";
    double epsilon_rel = 1e-6;
    std::optional<int> stencil;
    double rank_tol = 1e-10;
    std::string pairs;
    std::vector<int> exclude_rows;
    std::string out;
    std::string residuals_out;
    std::string report_out;
};

koop::AnalysisResult run_algorithm(const AnalyzeFlags& flags, const koop::SnapshotMatrix& snaps,
                                   std::vector<koop::SegmentEstimate>* segments) {
    if (flags.algorithm == "alg1") {
        koop::Algorithm1Options opt;
        opt.epsilon_rel = flags.epsilon_rel;
        opt.stencil = flags.stencil;
        opt.rank_tol = flags.rank_tol;
        opt.exclude_rows = flags.exclude_rows;
        koop::AnalysisResult result = koop::algorithm1(snaps, opt);
        if (segments != nullptr) {
            *segments = koop::estimate_segment_generators(snaps, result.switches, opt);
        }
        return result;
    }
    if (flags.algorithm == "alg2") {
        if (!flags.pairs.empty()) {
            const koop::ObservableMap map = koop::parse_pairings(flags.pairs);
            return koop::algorithm2(koop::apply_observables(map, snaps));
        }
        return koop::algorithm2(snaps);
    }
    if (flags.algorithm == "dmd-moving") {
        const int s = flags.stencil.value_or(snaps.rows() + 1);
        return koop::moving_stencil_spectrum(snaps, s, flags.rank_tol);
    }
    throw koop::ConfigError("unknown algorithm '" + flags.algorithm +
                            "' (expected alg1, alg2, or dmd-moving)");
}

int cmd_simulate(const std::string& system_arg, const GridFlags& grid, const std::string& x0_text,
                 const std::string& out_path) {
    const koop::SystemSpec spec = koop::system_from_argument(system_arg);
    const koop::RealVector x0 = resolve_x0(spec, x0_text);
    if (grid.dt <= 0.0) throw koop::ConfigError("--dt must be positive");
    if (grid.steps < 0) throw koop::ConfigError("--steps must be non-negative");
    const koop::TimeGrid tg{grid.t0, grid.dt, grid.steps};
    koop::write_snapshot_csv(out_path, koop::sample_trajectory(spec, x0, tg));
    return 0;
}

int cmd_analyze(const AnalyzeFlags& flags) {
    const koop::SnapshotMatrix snaps = koop::read_snapshot_csv(flags.input);
    std::vector<koop::SegmentEstimate> segments;
    const koop::AnalysisResult result =
        run_algorithm(flags, snaps, flags.algorithm == "alg1" ? &segments : nullptr);

    if (!flags.out.empty()) koop::write_spectral_csv(flags.out, result.series);
    if (!flags.residuals_out.empty()) koop::write_residual_csv(flags.residuals_out, result.series);
    if (!flags.report_out.empty()) {
        json report = switch_report(result, snaps.grid.dt, flags.algorithm);
        if (flags.algorithm == "alg1") report["segments"] = segments_report(segments);
        write_json(flags.report_out, report);
    }
    return 0;
}

// The polar observables of a spiral block evolve by their own diagonal
// system diag(sigma(t), -i omega(t)); operator errors of the two-snapshot
// algorithm are measured against that propagator, not the state one.
koop::SystemSpec observable_reference(const koop::SystemSpec& state_spec) {
    const koop::SpiralBlock* sp = state_spec.spiral();
    if (sp == nullptr) {
        throw koop::ConfigError(
            "compare with alg2 is supported for spiral-block systems (single observable pair)");
    }
    koop::CommutingFamily cf;
    cf.eigenvectors = koop::Matrix::Identity(2, 2);
    cf.eigen_re = {sp->sigma, koop::HarmonicFunction::constant_fn(0.0)};
    koop::HarmonicFunction neg_omega = sp->omega;
    neg_omega.constant = -neg_omega.constant;
    neg_omega.cos_amp = -neg_omega.cos_amp;
    neg_omega.sin_amp = -neg_omega.sin_amp;
    cf.eigen_im = {koop::HarmonicFunction::constant_fn(0.0), neg_omega};
    cf.real_state = false;
    koop::SystemSpec out;
    out.variant = std::move(cf);
    out.name = state_spec.name + "-observables";
    return out;
}

int cmd_compare(const AnalyzeFlags& flags, const std::string& system_arg,
                const std::string& spectral_path, const std::string& ek_out,
                const std::string& report_out) {
    koop::SystemSpec spec = koop::system_from_argument(system_arg);
    if (!spec.has_analytic_oracle()) {
        throw koop::ConfigError("compare needs a system with an analytic propagator");
    }
    if (flags.algorithm == "alg2") spec = observable_reference(spec);
    const koop::SnapshotMatrix snaps = koop::read_snapshot_csv(flags.input);
    const koop::AnalysisResult result = run_algorithm(flags, snaps, nullptr);

    const std::vector<double> ek = koop::error_ek(result.family, spec);
    if (!ek_out.empty()) koop::write_ek_csv(ek_out, result.family.grid, ek);

    // Accumulated eigenvalues against the exact propagator spectrum; the
    // comparison goes through e^lambda so branch choices cannot inflate it.
    std::vector<std::vector<koop::Complex>> computed;
    if (!spectral_path.empty()) {
        computed = koop::read_spectral_koopman_eigs(spectral_path);
    } else {
        for (const auto& step : result.series.steps) computed.push_back(step.koopman_eigs);
    }
    double max_dev = 0.0;
    const std::size_t upto =
        std::min(computed.size(), static_cast<std::size_t>(result.family.grid.steps) + 1);
    for (std::size_t k = 0; k < upto; ++k) {
        const koop::Matrix exact =
            koop::fundamental_matrix(spec, result.family.grid.time(static_cast<int>(k)),
                                     result.family.grid.t0)
                .m;
        const koop::Vector mu_exact = koop::eig(exact).values;
        for (const koop::Complex& lam : computed[k]) {
            const koop::Complex mu = std::exp(lam);
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < mu_exact.size(); ++i) {
                best = std::min(best, std::abs(mu - mu_exact[i]));
            }
            max_dev = std::max(max_dev, best);
        }
    }

    double max_ek = 0.0;
    double mean_ek = 0.0;
    for (double e : ek) {
        max_ek = std::max(max_ek, e);
        mean_ek += e;
    }
    if (!ek.empty()) mean_ek /= static_cast<double>(ek.size());

    if (!report_out.empty()) {
        write_json(report_out, json{{"algorithm", flags.algorithm},
                                    {"max_Ek", max_ek},
                                    {"mean_Ek", mean_ek},
                                    {"max_eigenvalue_deviation", max_dev}});
    }
    std::cout << "max_Ek=" << max_ek << " mean_Ek=" << mean_ek
              << " max_eigenvalue_deviation=" << max_dev << "\n";
    return 0;
}

int cmd_theorem2(const std::string& system_arg, const std::vector<double>& dts,
                 const std::string& x0_text, const std::string& out_path,
                 const std::string& report_out) {
    const koop::SystemSpec spec = koop::system_from_argument(system_arg);
    const koop::SpiralBlock* sp = spec.spiral();
    if (sp == nullptr) {
        throw koop::ConfigError("theorem2 needs a spiral-block system (sigma/omega coefficient form)");
    }
    if (dts.empty()) throw koop::ConfigError("--dt-sweep needs at least one time step");
    const koop::RealVector x0 = resolve_x0(spec, x0_text);

    // Probe the bias on t in [0.1, 0.9]; the grid reaches past the last
    // probe anchor so every anchor has a full three-snapshot stencil.
    const double probe_lo = 0.1;
    const double probe_hi = 0.9;

    std::ofstream out;
    if (!out_path.empty()) {
        out.open(out_path, std::ios::binary);
        if (!out) throw koop::IoError("cannot open '" + out_path + "' for writing");
        out << "# schema=theorem2 version=1\n";
        out << "dt,t,measured_log_rate,predicted_log_rate,measured_arg_rate,predicted_arg_rate\n";
    }

    std::vector<double> max_err_log, max_err_arg;
    json rows_at_half = json::array();
    for (double dt : dts) {
        if (dt <= 0.0) throw koop::ConfigError("--dt-sweep entries must be positive");
        const int steps = static_cast<int>(std::ceil((probe_hi + 2.0 * dt) / dt));
        const koop::SnapshotMatrix snaps = koop::sample_trajectory(spec, x0, {0.0, dt, steps});
        const koop::AnalysisResult naive = koop::moving_stencil_spectrum(snaps, 2);

        double err_log = 0.0;
        double err_arg = 0.0;
        for (int k = 1; k <= naive.series.grid.steps; ++k) {
            const double t = naive.series.grid.time(k);
            if (t < probe_lo - 1e-12 || t > probe_hi + 1e-12) continue;
            const auto& eigs = naive.series.steps[static_cast<std::size_t>(k)].system_eigs;
            // Conjugate pair: take the branch with non-negative frequency.
            koop::Complex lam = eigs.front();
            for (const auto& e : eigs) {
                if (e.imag() > lam.imag()) lam = e;
            }
            const koop::Theorem2Prediction pred =
                koop::theorem2_bias(sp->sigma(t), sp->sigma.derivative(t), sp->omega(t),
                                    sp->omega.derivative(t), dt);
            err_log = std::max(err_log, std::abs(lam.real() - pred.log_abs_mu / dt));
            err_arg = std::max(err_arg, std::abs(lam.imag() - pred.arg_mu / dt));
            if (out.is_open()) {
                char buf[256];
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", dt, t,
                              lam.real(), pred.log_abs_mu / dt, lam.imag(), pred.arg_mu / dt);
                out << buf << "\n";
            }
            if (std::abs(t - 0.5) < 0.5 * dt + 1e-12) {
                rows_at_half.push_back(json{{"dt", dt},
                                            {"t", t},
                                            {"measured_log_rate", lam.real()},
                                            {"predicted_log_rate", pred.log_abs_mu / dt},
                                            {"measured_arg_rate", lam.imag()},
                                            {"predicted_arg_rate", pred.arg_mu / dt}});
            }
        }
        max_err_log.push_back(err_log);
        max_err_arg.push_back(err_arg);
    }

    // Least-squares slope of ln(err) against ln(dt).
    auto fit_order = [&](const std::vector<double>& errs) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (std::size_t i = 0; i < errs.size(); ++i) {
            if (errs[i] <= 0.0) continue;
            const double x = std::log(dts[i]);
            const double y = std::log(errs[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        if (n < 2) return 0.0;
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    const double order_log = fit_order(max_err_log);
    const double order_arg = fit_order(max_err_arg);

    if (!report_out.empty()) {
        write_json(report_out, json{{"dts", dts},
                                    {"max_residual_log_rate", max_err_log},
                                    {"max_residual_arg_rate", max_err_arg},
                                    {"order_log_rate", order_log},
                                    {"order_arg_rate", order_arg},
                                    {"at_t_half", rows_at_half}});
    }
    std::cout << "order_log_rate=" << order_log << " order_arg_rate=" << order_arg << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-dependent spectra of linear non-autonomous systems from snapshot data"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "sample a trajectory to a snapshot CSV");
    std::string sim_system, sim_x0, sim_out = "snapshots.csv";
    GridFlags sim_grid;
    sim->add_option("--system", sim_system, "catalog name, JSON file, or inline JSON")->required();
    add_grid_flags(sim, sim_grid);
    sim->add_option("--x0", sim_x0, "comma-separated initial condition");
    sim->add_option("--out", sim_out, "output CSV path");

    auto* ana = app.add_subcommand("analyze", "run a spectral algorithm on a snapshot CSV");
    AnalyzeFlags ana_flags;
    int ana_stencil = -1;
    ana->add_option("snapshots", ana_flags.input, "snapshot CSV file")->required();
    ana->add_option("--algorithm", ana_flags.algorithm, "alg1 | alg2 | dmd-moving");
    ana->add_option("--epsilon-rel", ana_flags.epsilon_rel, "relative residual threshold (alg1)");
    ana->add_option("--stencil", ana_stencil, "stencil size override");
    ana->add_option("--rank-tol", ana_flags.rank_tol, "relative singular value cutoff");
    ana->add_option("--pairs", ana_flags.pairs,
                    "state index pairs for alg2 observables, e.g. (0,1),(2,3)");
    ana->add_option("--exclude-rows", ana_flags.exclude_rows,
                    "rows dropped from active-observable selection");
    ana->add_option("--out", ana_flags.out, "spectral CSV path");
    ana->add_option("--residuals-out", ana_flags.residuals_out, "residual CSV path");
    ana->add_option("--report-out", ana_flags.report_out, "switch report JSON path");

    auto* cmp = app.add_subcommand("compare", "error of an algorithm against the analytic propagator");
    AnalyzeFlags cmp_flags;
    int cmp_stencil = -1;
    std::string cmp_system, cmp_spectral, cmp_out = "ek.csv", cmp_report;
    cmp->add_option("snapshots", cmp_flags.input, "snapshot CSV file")->required();
    cmp->add_option("--system", cmp_system, "system with an analytic propagator")->required();
    cmp->add_option("--algorithm", cmp_flags.algorithm, "alg1 | alg2 | dmd-moving");
    cmp->add_option("--epsilon-rel", cmp_flags.epsilon_rel, "relative residual threshold (alg1)");
    cmp->add_option("--stencil", cmp_stencil, "stencil size override");
    cmp->add_option("--rank-tol", cmp_flags.rank_tol, "relative singular value cutoff");
    cmp->add_option("--pairs", cmp_flags.pairs, "state index pairs for alg2 observables");
    cmp->add_option("--exclude-rows", cmp_flags.exclude_rows,
                    "rows dropped from active-observable selection");
    cmp->add_option("--spectral", cmp_spectral, "existing spectral CSV to take exponents from");
    cmp->add_option("--out", cmp_out, "E_k CSV path");
    cmp->add_option("--report-out", cmp_report, "summary JSON path");

    auto* th = app.add_subcommand("theorem2", "moving-stencil bias sweep over time steps");
    std::string th_system, th_x0, th_out = "theorem2.csv", th_report;
    std::vector<double> th_dts;
    th->add_option("--system", th_system, "spiral-block system")->required();
    th->add_option("--dt-sweep", th_dts, "time steps to sweep")->delimiter(',')->required();
    th->add_option("--x0", th_x0, "comma-separated initial condition");
    th->add_option("--out", th_out, "sweep CSV path");
    th->add_option("--report-out", th_report, "orders JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_system, sim_grid, sim_x0, sim_out);
        if (ana->parsed()) {
            if (ana_stencil > 0) ana_flags.stencil = ana_stencil;
            return cmd_analyze(ana_flags);
        }
        if (cmp->parsed()) {
            if (cmp_stencil > 0) cmp_flags.stencil = cmp_stencil;
            return cmd_compare(cmp_flags, cmp_system, cmp_spectral, cmp_out, cmp_report);
        }
        if (th->parsed()) return cmd_theorem2(th_system, th_dts, th_x0, th_out, th_report);
    } catch (const koop::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const koop::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const koop::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
