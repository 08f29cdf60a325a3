#pragma once

#include <string>
#include <vector>

#include "koop/koopman.hpp"
#include "koop/snapshots.hpp"

namespace koop {

/// Snapshot CSV: one `# schema=snapshots version=1` comment line, a header
/// `t,<label>,...`, one row per grid time. Complex-valued matrices split each
/// label into `re_<label>,im_<label>` columns. Values carry 17 significant
/// digits so files round-trip bit-for-bit through double precision.
void write_snapshot_csv(const std::string& path, const SnapshotMatrix& snaps);

SnapshotMatrix read_snapshot_csv(const std::string& path);

/// Spectral CSV: one row per (step, branch) with the local-operator exponent,
/// the branch-tracked accumulated exponent, the window residual, and the
/// switch flag.
void write_spectral_csv(const std::string& path, const SpectralTimeSeries& series);

/// Branch-tracked accumulated exponents read back from a spectral CSV,
/// indexed [step][branch].
std::vector<std::vector<Complex>> read_spectral_koopman_eigs(const std::string& path);

/// Residual CSV: one row per step with absolute and relative window residuals.
void write_residual_csv(const std::string& path, const SpectralTimeSeries& series);

/// E_k CSV: one row per step with the relative operator error.
void write_ek_csv(const std::string& path, const TimeGrid& grid, const std::vector<double>& ek);

}  // namespace koop
