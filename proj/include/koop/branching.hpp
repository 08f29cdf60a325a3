#pragma once

#include <vector>

#include "koop/linalg.hpp"

namespace koop {

/// Continuous eigenvalue exponents reconstructed from a sequence of spectra.
///
/// Entry k of `exponents` holds one exponent per branch: the real part is
/// ln|mu| of the step-k eigenvalue, the imaginary part accumulates per-step
/// argument increments (each in (-pi, pi]) along branches matched by a
/// minimal-total-cost assignment between consecutive spectra.
struct BranchTracking {
    std::vector<Vector> exponents;
    std::vector<std::vector<int>> matching;  // branch -> index into the step's input spectrum
    std::vector<bool> ambiguous;             // eigenvalue collision within 1e-12 at this step
};

/// mu_sets[k] lists the eigenvalues of the k-th operator (any fixed order);
/// step 0 seeds the branches with principal logarithms. When `vector_sets`
/// is non-empty it must hold the matching right-eigenvector columns; the
/// assignment cost then adds the eigenvector mismatch 1 - |<v_old, v_new>|,
/// which keeps conjugate branches apart when a pair pinches together on the
/// negative real axis.
BranchTracking track_eigenvalue_branches(const std::vector<Vector>& mu_sets,
                                         const std::vector<Matrix>& vector_sets = {});

}  // namespace koop
