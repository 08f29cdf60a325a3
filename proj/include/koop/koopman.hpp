#pragma once

#include <optional>
#include <vector>

#include "koop/branching.hpp"
#include "koop/dmd.hpp"
#include "koop/linalg.hpp"
#include "koop/snapshots.hpp"
#include "koop/systems.hpp"

namespace koop {

/// Local operators together with their accumulated products:
/// accumulated[0] = I and accumulated[k] = locals[k-1].m * accumulated[k-1],
/// exactly as computed. locals[k-1] stores the operator actually applied at
/// step k (the previous operator when a window was flagged) with the
/// residuals of the window as computed before any replacement.
struct OperatorFamily {
    TimeGrid grid;  // t_k of accumulated[k]; may end earlier than the data grid
    std::vector<Matrix> accumulated;
    std::vector<LocalOperator> locals;
};

/// Per-step spectral data. system_eigs lists exponents of the local one-step
/// operator (canonical order, principal branch, divided by dt); koopman_eigs
/// lists branch-tracked exponents of the accumulated operator.
struct SpectralStep {
    std::vector<Complex> system_eigs;
    std::vector<Complex> koopman_eigs;
    double residual_abs = 0.0;
    double residual_rel = 0.0;
    bool switch_flag = false;
    std::vector<int> matching;  // branch -> canonical index at this step
    bool ambiguous = false;
    std::vector<int> active_rows;
};

struct SpectralTimeSeries {
    TimeGrid grid;
    std::vector<SpectralStep> steps;  // steps[k] for k = 0..grid.steps
};

/// Detected switch: estimated time plus the window interval it was localized
/// to. `merged` marks runs longer than one straddle span (several switches
/// may hide inside one interval).
struct SwitchEvent {
    double time = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    bool merged = false;
};

struct Algorithm1Options {
    double epsilon_rel = 1e-6;
    std::optional<int> stencil;  // default: active row count + 1 per window
    double rank_tol = 1e-10;
    double activity_tol = 1e-12;
    std::vector<int> exclude_rows;  // designated conserved coordinates
};

struct AnalysisResult {
    SpectralTimeSeries series;
    OperatorFamily family;
    std::vector<SwitchEvent> switches;
};

/// Hybrid-system spectrum from snapshots: local operators on moving stencils,
/// switch detection through the operator-consistency residual, previous
/// operator reuse inside flagged windows, and accumulated spectra.
AnalysisResult algorithm1(const SnapshotMatrix& snaps, const Algorithm1Options& options = {});

/// Continuous-time-dependency spectrum from decoupled observables: per-row
/// two-snapshot stencils give diagonal local operators; exponents accumulate
/// per-step principal logarithms row by row.
AnalysisResult algorithm2(const SnapshotMatrix& u_snaps);

/// Deliberately naive baseline: local operators on moving stencils mapped
/// straight to exponents, no switch handling, accumulation without any
/// operator replacement.
AnalysisResult moving_stencil_spectrum(const SnapshotMatrix& snaps, int stencil, double rank_tol = 1e-10);

/// Branch-tracked exponents of the accumulated operators.
BranchTracking extract_koopman_eigs(const OperatorFamily& family);

/// Spectral triple of one operator: exponents (principal branch),
/// eigenfunction weights phi_i(x0) = <x0, w_i>, and modes v_i, satisfying
/// sum_i e^{lambda_i} phi_i(x0) v_i = M x0.
struct KoopmanDecomposition {
    Vector eigenvalues;
    Vector weights;
    Matrix modes;
};

/// Throws NumericError when the eigenbasis condition number exceeds 1e8.
KoopmanDecomposition koopman_mode_decomposition(const Matrix& m, const Vector& x0);

/// Relative spectral-norm error of the accumulated operators against the
/// analytic propagator of `spec`, per step.
std::vector<double> error_ek(const OperatorFamily& family, const SystemSpec& spec);

/// Leading-order spectrum of a three-snapshot stencil operator on the spiral
/// block with slowly varying coefficients.
struct Theorem2Prediction {
    double log_abs_mu = 0.0;  // (sigma + omega_dot / (2 omega)) * dt
    double arg_mu = 0.0;      // omega * dt * sqrt(1 - sigma_dot / omega^2)
};

Theorem2Prediction theorem2_bias(double sigma, double sigma_dot, double omega, double omega_dot,
                                 double dt);

/// Generator estimate A = log(M)/dt from a one-step operator.
Matrix estimate_generator(const Matrix& one_step, double dt);

/// Per-segment generator estimates between detected switches: rows active in
/// the segment interior, pooled one-step operator over its clean columns,
/// principal logarithm divided by dt.
struct SegmentEstimate {
    double t_begin = 0.0;
    double t_end = 0.0;
    std::vector<int> rows;
    Matrix generator;
};

std::vector<SegmentEstimate> estimate_segment_generators(const SnapshotMatrix& snaps,
                                                         const std::vector<SwitchEvent>& switches,
                                                         const Algorithm1Options& options = {});

/// Places a row-restricted operator into the full dimension with identity on
/// the remaining coordinates (inactive coordinates evolve trivially).
Matrix embed_rows(const Matrix& restricted, const std::vector<int>& rows, int full_dim);

}  // namespace koop
