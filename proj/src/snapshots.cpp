#include "koop/snapshots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "koop/errors.hpp"
#include "koop/systems.hpp"

namespace koop {

bool SnapshotMatrix::is_real(double tol) const {
    return values.imag().cwiseAbs().maxCoeff() <= tol;
}

void ObservableMap::validate(int state_dim) const {
    if (pairings.empty()) throw ConfigError("observable map has no pairings");
    if (2 * static_cast<int>(pairings.size()) != state_dim) {
        throw ConfigError("observable pairings must cover the state dimension exactly (" +
                          std::to_string(state_dim) + " coordinates)");
    }
    std::set<int> seen;
    for (const auto& [i, j] : pairings) {
        if (i < 0 || j < 0 || i >= state_dim || j >= state_dim || i == j) {
            throw ConfigError("invalid observable pairing (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
        }
        if (!seen.insert(i).second || !seen.insert(j).second) {
            throw ConfigError("observable pairings reuse a state coordinate");
        }
    }
}

SnapshotMatrix sample_trajectory(const SystemSpec& spec, const RealVector& x0, const TimeGrid& grid) {
    const int n = spec.dimension();
    if (x0.size() != n) throw NumericError("sample_trajectory: initial condition dimension mismatch");
    if (!spec.has_analytic_oracle()) {
        return integrate_rk4(spec, x0, grid, 100);
    }
    SnapshotMatrix snaps;
    snaps.grid = grid;
    snaps.values.resize(n, grid.columns());
    snaps.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) snaps.labels[static_cast<std::size_t>(i)] = "x" + std::to_string(i + 1);
    const Vector x0c = x0.cast<Complex>();
    for (int k = 0; k <= grid.steps; ++k) {
        snaps.values.col(k) = fundamental_matrix(spec, grid.time(k), grid.t0).m * x0c;
    }
    return snaps;
}

SnapshotMatrix apply_observables(const ObservableMap& map, const SnapshotMatrix& snaps) {
    map.validate(snaps.rows());
    if (!snaps.is_real(1e-12)) {
        throw NumericError("apply_observables: state snapshots must be real");
    }
    const int m = snaps.rows();
    SnapshotMatrix out;
    out.grid = snaps.grid;
    out.values.resize(m, snaps.values.cols());
    out.labels.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) out.labels[static_cast<std::size_t>(i)] = "u" + std::to_string(i + 1);

    for (int k = 0; k < snaps.values.cols(); ++k) {
        for (std::size_t p = 0; p < map.pairings.size(); ++p) {
            const auto [i, j] = map.pairings[p];
            const double xi = snaps.values(i, k).real();
            const double xj = snaps.values(j, k).real();
            const double radius = std::hypot(xi, xj);
            if (radius == 0.0) {
                throw NumericError("apply_observables: trajectory hits coordinate origin of pair (" +
                                   std::to_string(i) + "," + std::to_string(j) + ") at column " +
                                   std::to_string(k));
            }
            out.values(static_cast<int>(2 * p), k) = radius;
            out.values(static_cast<int>(2 * p + 1), k) = Complex(xi / radius, xj / radius);
        }
    }
    return out;
}

SnapshotMatrix reconstruct_state(const ObservableMap& map, const SnapshotMatrix& u_snaps) {
    map.validate(u_snaps.rows());
    const int n = u_snaps.rows();
    SnapshotMatrix out;
    out.grid = u_snaps.grid;
    out.values.resize(n, u_snaps.values.cols());
    out.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.labels[static_cast<std::size_t>(i)] = "x" + std::to_string(i + 1);

    for (int k = 0; k < u_snaps.values.cols(); ++k) {
        for (std::size_t p = 0; p < map.pairings.size(); ++p) {
            const auto [i, j] = map.pairings[p];
            const Complex radius = u_snaps.values(static_cast<int>(2 * p), k);
            const Complex phase = u_snaps.values(static_cast<int>(2 * p + 1), k);
            if (std::abs(std::abs(phase) - 1.0) > 1e-6) {
                throw NumericError("reconstruct_state: phase observable u" + std::to_string(2 * p + 2) +
                                   " has modulus " + std::to_string(std::abs(phase)) + " at column " +
                                   std::to_string(k));
            }
            out.values(i, k) = radius.real() * phase.real();
            out.values(j, k) = radius.real() * phase.imag();
        }
    }
    return out;
}

std::vector<int> select_active_observables(const SnapshotMatrix& snaps, int first_col, int last_col,
                                           double tol, const std::vector<int>& excluded_rows) {
    if (first_col < 0 || last_col >= snaps.values.cols() || first_col > last_col) {
        throw NumericError("select_active_observables: window outside the snapshot grid");
    }
    const int m = snaps.rows();
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
        if (std::find(excluded_rows.begin(), excluded_rows.end(), i) != excluded_rows.end()) continue;
        double variation = 0.0;
        for (int k = first_col; k <= last_col; ++k) {
            variation = std::max(variation, std::abs(snaps.values(i, k) - snaps.values(i, first_col)));
        }
        // A row that is nonzero but frozen carries no dynamics over this
        // window; a row that is identically zero carries none either.
        double magnitude = 0.0;
        for (int k = first_col; k <= last_col; ++k) {
            magnitude = std::max(magnitude, std::abs(snaps.values(i, k)));
        }
        if (variation > tol && magnitude > tol) active.push_back(i);
    }
    if (active.empty()) {
        throw NumericError("select_active_observables: no active observables in window");
    }

    // Shrink until the restricted basis columns have full numerical rank.
    // Probe columns are sampled across the whole window so long ranges judge
    // rank by the span they actually cover, not just their first snapshots.
    while (active.size() > 1) {
        const int r = static_cast<int>(active.size());
        const int window_len = last_col - first_col + 1;
        const int cols = std::min(window_len, 2 * r);
        Matrix basis(r, cols);
        for (int c = 0; c < cols; ++c) {
            const int col = cols == 1 ? first_col
                                      : first_col + (c * (window_len - 1)) / (cols - 1);
            for (int i = 0; i < r; ++i) {
                basis(i, c) = snaps.values(active[static_cast<std::size_t>(i)], col);
            }
        }
        Eigen::JacobiSVD<Matrix> svd(basis);
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (Eigen::Index q = 0; q < sv.size(); ++q) {
            if (sv[q] > sv[0] * 1e-10) ++rank;
        }
        if (rank >= std::min(r, cols)) break;
        // Keep the strong signals: the faintest row is the one whose
        // direction has not yet climbed above the rank cutoff.
        int victim = 0;
        double faintest = std::numeric_limits<double>::infinity();
        for (int i = 0; i < r; ++i) {
            const double mag = basis.row(i).cwiseAbs().maxCoeff();
            if (mag < faintest) {
                faintest = mag;
                victim = i;
            }
        }
        active.erase(active.begin() + victim);
    }
    return active;
}

}  // namespace koop
