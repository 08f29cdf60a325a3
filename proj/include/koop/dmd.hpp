#pragma once

#include <vector>

#include "koop/linalg.hpp"
#include "koop/snapshots.hpp"

namespace koop {

/// Window of size+1 consecutive snapshot columns anchored at index k:
/// columns k-1 .. k+size-1. The first `size` columns form the Krylov basis,
/// the last column is the projection target, and consecutive columns form
/// `size` one-step pairs.
struct StencilWindow {
    int anchor = 1;  // k
    int size = 2;    // s

    [[nodiscard]] int first_col() const { return anchor - 1; }
    [[nodiscard]] int last_col() const { return anchor + size - 1; }
};

/// Recurrence coefficients of the newest snapshot over the stencil basis.
struct CompanionFit {
    Vector coefficients;   // length s
    double residual_norm;  // ||x_{k+s-1} - basis * c||_2, the minimum over c
};

/// One-step operator fitted to a stencil.
///
/// Two residuals are reported. `residual_norm` is the Krylov projection
/// error of the newest snapshot over the stencil basis (zero whenever the
/// basis spans the data space). `fit_residual_norm` is the operator
/// consistency error ||Y - M X||_F over all stencil pairs; it is zero
/// exactly when one linear operator explains every pair, which makes it the
/// usable indicator for windows that mix two governing matrices.
struct LocalOperator {
    Matrix m;
    double residual_norm = 0.0;
    double fit_residual_norm = 0.0;
    double target_norm = 0.0;  // ||x_{k+s-1}||_2, denominator for relative residuals
    double pairs_norm = 0.0;   // ||Y||_F, denominator for the relative fit residual
    StencilWindow window;
    int rank_used = 0;

    [[nodiscard]] double residual_rel() const { return target_norm > 0.0 ? residual_norm / target_norm : 0.0; }
    [[nodiscard]] double fit_residual_rel() const { return pairs_norm > 0.0 ? fit_residual_norm / pairs_norm : 0.0; }
};

/// Least-squares recurrence coefficients via project_onto_span.
CompanionFit companion_coefficients(const SnapshotMatrix& snaps, StencilWindow window);

/// SVD-based least-squares fit of M minimizing sum_j ||x_{k+j} - M x_{k+j-1}||^2
/// over the stencil pairs; singular values below rank_tol * sigma_max are
/// discarded, and the minimum-norm M is returned on rank-deficient stencils.
LocalOperator local_operator(const SnapshotMatrix& snaps, StencilWindow window, double rank_tol = 1e-10);

/// Same fit restricted to a row subset; the returned operator has
/// rows.size() x rows.size() shape.
LocalOperator local_operator_rows(const SnapshotMatrix& snaps, StencilWindow window,
                                  const std::vector<int>& rows, double rank_tol = 1e-10);

/// Pooled one-step operator over columns [first_col, last_col] restricted to
/// `rows`: the least-squares M over every consecutive pair in the range.
/// Long ranges average out the ill-conditioning of short stencils.
Matrix pooled_operator(const SnapshotMatrix& snaps, int first_col, int last_col,
                       const std::vector<int>& rows, double rank_tol = 1e-10);

std::vector<int> select_active_observables(const SnapshotMatrix& snaps, StencilWindow window,
                                           double tol = 1e-12, const std::vector<int>& excluded_rows = {});

}  // namespace koop
