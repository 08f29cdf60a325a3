#include "koop/dmd.hpp"

#include <string>

#include "koop/errors.hpp"

namespace koop {

namespace {

void require_window(const SnapshotMatrix& snaps, StencilWindow w) {
    if (w.size < 1) throw NumericError("stencil size must be >= 1");
    if (w.first_col() < 0 || w.last_col() >= snaps.values.cols()) {
        throw NumericError("stencil window [" + std::to_string(w.first_col()) + "," +
                           std::to_string(w.last_col()) + "] outside the snapshot grid");
    }
}

Matrix window_block(const SnapshotMatrix& snaps, int col0, int ncols, const std::vector<int>& rows) {
    if (rows.empty()) return snaps.values.block(0, col0, snaps.values.rows(), ncols);
    Matrix out(static_cast<Eigen::Index>(rows.size()), ncols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = snaps.values.block(rows[i], col0, 1, ncols);
    }
    return out;
}

LocalOperator fit_operator(const Matrix& data, StencilWindow w, double rank_tol) {
    const Eigen::Index s = w.size;
    const Matrix x = data.leftCols(s);
    const Matrix y = data.rightCols(s);

    LocalOperator op;
    op.window = w;
    op.target_norm = data.col(s).norm();
    op.pairs_norm = y.norm();

    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) {
        throw NumericError("local_operator: stencil basis has effective rank 0");
    }
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > rank_tol * sv[0]) ++rank;
    }
    op.rank_used = rank;

    const Matrix u_r = svd.matrixU().leftCols(rank);
    const Matrix v_r = svd.matrixV().leftCols(rank);
    Vector inv_s(rank);
    for (int i = 0; i < rank; ++i) inv_s[i] = 1.0 / sv[i];
    op.m = y * v_r * inv_s.asDiagonal() * u_r.adjoint();

    op.fit_residual_norm = (y - op.m * x).norm();

    Projection proj = project_onto_span(x, data.col(s));
    op.residual_norm = proj.residual.norm();
    return op;
}

}  // namespace

CompanionFit companion_coefficients(const SnapshotMatrix& snaps, StencilWindow window) {
    require_window(snaps, window);
    const Matrix basis = snaps.values.block(0, window.first_col(), snaps.values.rows(), window.size);
    const Vector target = snaps.values.col(window.last_col());
    if (basis.norm() == 0.0) {
        throw NumericError("companion_coefficients: stencil basis is identically zero");
    }
    Projection p = project_onto_span(basis, target);
    return CompanionFit{p.coefficients, p.residual.norm()};
}

LocalOperator local_operator(const SnapshotMatrix& snaps, StencilWindow window, double rank_tol) {
    return local_operator_rows(snaps, window, {}, rank_tol);
}

LocalOperator local_operator_rows(const SnapshotMatrix& snaps, StencilWindow window,
                                  const std::vector<int>& rows, double rank_tol) {
    require_window(snaps, window);
    const Matrix data = window_block(snaps, window.first_col(), window.size + 1, rows);
    return fit_operator(data, window, rank_tol);
}

Matrix pooled_operator(const SnapshotMatrix& snaps, int first_col, int last_col,
                       const std::vector<int>& rows, double rank_tol) {
    if (first_col < 0 || last_col >= snaps.values.cols() || last_col - first_col < 1) {
        throw NumericError("pooled_operator: need at least two columns inside the grid");
    }
    const int pairs = last_col - first_col;
    const Matrix x = window_block(snaps, first_col, pairs, rows);
    const Matrix y = window_block(snaps, first_col + 1, pairs, rows);

    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) throw NumericError("pooled_operator: zero data");
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > rank_tol * sv[0]) ++rank;
    }
    Vector inv_s(rank);
    for (int i = 0; i < rank; ++i) inv_s[i] = 1.0 / sv[i];
    return y * svd.matrixV().leftCols(rank) * inv_s.asDiagonal() * svd.matrixU().leftCols(rank).adjoint();
}

std::vector<int> select_active_observables(const SnapshotMatrix& snaps, StencilWindow window,
                                           double tol, const std::vector<int>& excluded_rows) {
    require_window(snaps, window);
    return select_active_observables(snaps, window.first_col(), window.last_col(), tol, excluded_rows);
}

}  // namespace koop
