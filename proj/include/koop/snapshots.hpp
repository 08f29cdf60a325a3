#pragma once

#include <string>
#include <utility>
#include <vector>

#include "koop/linalg.hpp"

namespace koop {

struct SystemSpec;

/// Uniform time grid t_k = t0 + k*dt, k = 0..steps.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.01;
    int steps = 0;

    [[nodiscard]] double time(int k) const { return t0 + k * dt; }
    [[nodiscard]] int columns() const { return steps + 1; }
};

/// Column-per-time matrix of observable values; column k holds the observable
/// vector at t_k. Labels name the rows.
struct SnapshotMatrix {
    TimeGrid grid;
    Matrix values;  // rows = observables, cols = grid.columns()
    std::vector<std::string> labels;

    [[nodiscard]] int rows() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] bool is_real(double tol = 0.0) const;
};

/// Invertible transform between state coordinates and per-pair polar
/// observables. Each state index pair (i, j) maps to the pair
/// (radius, unit phase factor): r = sqrt(x_i^2 + x_j^2), p = (x_i + i x_j)/r.
struct ObservableMap {
    std::vector<std::pair<int, int>> pairings;

    [[nodiscard]] int state_dimension() const { return 2 * static_cast<int>(pairings.size()); }
    /// Throws ConfigError unless the pairings cover indices 0..n-1 exactly once.
    void validate(int state_dim) const;
};

/// Samples the trajectory of a linear non-autonomous system on the grid:
/// column k = M(t_k, t0) x0 when the system has an analytic propagator,
/// otherwise a high-resolution RK4 fallback.
SnapshotMatrix sample_trajectory(const SystemSpec& spec, const RealVector& x0, const TimeGrid& grid);

/// Maps state snapshots to polar-pair observables. Fails with the offending
/// column index if a trajectory hits a pair's coordinate origin.
SnapshotMatrix apply_observables(const ObservableMap& map, const SnapshotMatrix& snaps);

/// Inverse of apply_observables: x_i = r Re(p), x_j = r Im(p). Requires every
/// phase entry to have modulus 1 within 1e-6.
SnapshotMatrix reconstruct_state(const ObservableMap& map, const SnapshotMatrix& u_snaps);

/// Rows considered active over the window columns [first_col, last_col]:
/// rows whose value varies by more than `tol` and that keep the restricted
/// stencil at full numerical rank. Rows listed in excluded_rows are dropped
/// unconditionally (the designated conserved coordinate of closed models).
std::vector<int> select_active_observables(const SnapshotMatrix& snaps, int first_col, int last_col,
                                           double tol = 1e-12, const std::vector<int>& excluded_rows = {});

}  // namespace koop
