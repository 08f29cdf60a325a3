#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "koop/linalg.hpp"
#include "koop/snapshots.hpp"

namespace koop {

/// Scalar function c + a cos(w t) + b sin(w t) with exact derivative and
/// integral. This family is closed under the antiderivatives needed by the
/// analytic propagators, so no quadrature enters the oracles.
struct HarmonicFunction {
    double constant = 0.0;
    double cos_amp = 0.0;
    double sin_amp = 0.0;
    double freq = 0.0;

    [[nodiscard]] double operator()(double t) const;
    [[nodiscard]] double derivative(double t) const;
    [[nodiscard]] double integral(double t0, double t1) const;
    [[nodiscard]] bool is_constant() const { return (cos_amp == 0.0 && sin_amp == 0.0) || freq == 0.0; }

    static HarmonicFunction constant_fn(double c) { return {c, 0.0, 0.0, 0.0}; }
};

/// Piecewise-constant governing matrix. Segment l runs over
/// [switch_times[l], switch_times[l+1]); the last segment extends to +inf.
struct HybridSystem {
    std::vector<double> switch_times;  // strictly increasing, first entry = origin time
    std::vector<Matrix> matrices;      // one per segment

    [[nodiscard]] int segment_of(double t) const;  // right-continuous lookup
};

/// A(t) = R diag(lambda_i(t)) R^{-1} with time-independent eigenvectors.
/// Eigenvalue functions are complex with harmonic real and imaginary parts.
struct CommutingFamily {
    Matrix eigenvectors;  // columns R_i, invertible
    std::vector<HarmonicFunction> eigen_re;
    std::vector<HarmonicFunction> eigen_im;
    bool real_state = true;  // chop imaginary round-off when rebuilding real A(t)
};

/// 2x2 block [[sigma(t), omega(t)], [-omega(t), sigma(t)]].
struct SpiralBlock {
    HarmonicFunction sigma;
    HarmonicFunction omega;
};

/// Arbitrary matrix-valued A(t); only the numerical integrator accepts it.
struct GenericSystem {
    int dimension = 0;
    std::function<Matrix(double)> matrix;
};

/// Declarative description of a linear non-autonomous system. The variant is
/// the source of truth for both the analytic propagator and the integrator.
struct SystemSpec {
    std::variant<HybridSystem, CommutingFamily, SpiralBlock, GenericSystem> variant;
    RealVector default_x0;
    std::string name;  // catalog name when applicable

    [[nodiscard]] int dimension() const;
    [[nodiscard]] bool has_analytic_oracle() const;
    [[nodiscard]] const HybridSystem* hybrid() const { return std::get_if<HybridSystem>(&variant); }
    [[nodiscard]] const SpiralBlock* spiral() const { return std::get_if<SpiralBlock>(&variant); }
};

/// Propagator M(t, t0) mapping states at t0 to states at t.
struct FundamentalMatrix {
    double t = 0.0;
    double t0 = 0.0;
    Matrix m;
};

/// Exact spectral data of the flow map from t0 to t: exponents lambda_i with
/// e^{lambda_i} an eigenvalue of M(t, t0), the left eigenvectors defining the
/// eigenfunction functionals, and the modes (right eigenvectors).
struct KoopmanSpectrumExact {
    double t = 0.0;
    double t0 = 0.0;
    Vector eigenvalues;
    Matrix left_vectors;
    Matrix modes;
};

/// Governing matrix A(t), right-continuous at hybrid switch times.
Matrix system_matrix(const SystemSpec& spec, double t);

/// Analytic fundamental matrix. Hybrid specs use per-segment exponentials,
/// commuting families R e^{int Lambda} R^{-1}, spiral blocks the rotation
/// closed form. Generic specs are rejected; use integrate_rk4 for those.
FundamentalMatrix fundamental_matrix(const SystemSpec& spec, double t, double t0);

/// Classical fixed-step RK4 trajectory oracle. Steps never straddle hybrid
/// switch times; `substeps` sub-intervals are taken per grid interval.
SnapshotMatrix integrate_rk4(const SystemSpec& spec, const RealVector& x0, const TimeGrid& grid,
                             int substeps);

/// Named example systems with their default parameters. Recognized names:
/// switching-frequency, switching-damped-driven, hybrid-coupled-osc,
/// multicompartment, cont-frequency, cont-damping, cont-coupled-osc,
/// example1-scalar. Overrides replace the documented parameter defaults.
SystemSpec catalog(const std::string& name, const std::map<std::string, double>& overrides = {});

/// Natural frequencies of the two-mass spring chain, from the generalized
/// eigenvalue problem det(K - nu M) = 0; returns (omega1, omega2) with
/// omega1 >= omega2 > 0.
std::pair<double, double> coupled_frequencies(double m1, double m2, double k1, double k2, double k3);

/// Exact Koopman spectrum of the flow map. For commuting and spiral variants
/// the exponents accumulate the analytic integrals of the eigenvalue
/// functions (continuous branch); hybrid variants report the principal
/// branch (use koopman_exact_series for continuity across steps).
KoopmanSpectrumExact koopman_exact(const SystemSpec& spec, double t, double t0);

/// Branch-tracked exact Koopman exponents on a grid: entry k holds the
/// exponents of M(t_k, t0) with imaginary parts continued across steps.
std::vector<Vector> koopman_exact_series(const SystemSpec& spec, const TimeGrid& grid);

}  // namespace koop
