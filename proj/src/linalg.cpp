#include "koop/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "koop/errors.hpp"

namespace koop {

namespace {

void require_square_finite(const Matrix& a, const char* what) {
    if (a.rows() == 0 || a.rows() != a.cols()) {
        throw NumericError(std::string(what) + ": matrix must be square and non-empty");
    }
    if (!a.allFinite()) {
        throw NumericError(std::string(what) + ": matrix has non-finite entries");
    }
}

/// Phase-fix a vector so its first entry of non-negligible magnitude becomes
/// real and non-negative, then normalize to unit 2-norm.
Vector canonical_vector(const Vector& v) {
    const double norm = v.norm();
    if (norm == 0.0) return v;
    Vector out = v / norm;
    const double mag = out.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (std::abs(out[i]) > 1e-12 * mag) {
            const Complex p = out[i];
            out *= std::conj(p) / std::abs(p);
            break;
        }
    }
    return out;
}

}  // namespace

EigenDecomposition eig(const Matrix& a) {
    require_square_finite(a, "eig");
    const Eigen::Index n = a.rows();

    Eigen::ComplexEigenSolver<Matrix> solver(a, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eig: eigenvalue iteration did not converge");
    }

    Vector values = solver.eigenvalues();
    Matrix vectors = solver.eigenvectors();
    if (!values.allFinite() || !vectors.allFinite()) {
        throw NumericError("eig: solver produced non-finite output");
    }

    // Canonical order: |mu| desc, then Re desc, then Im desc.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        const Complex& x = values[i];
        const Complex& y = values[j];
        if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });

    EigenDecomposition out;
    out.values.resize(n);
    out.right_vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[i] = values[order[static_cast<std::size_t>(i)]];
        out.right_vectors.col(i) = canonical_vector(vectors.col(order[static_cast<std::size_t>(i)]));
    }

    // Left vectors from W^* = V^{-1}; this enforces biorthogonality exactly
    // up to the conditioning of V.
    Eigen::PartialPivLU<Matrix> lu(out.right_vectors);
    Matrix v_inv = lu.solve(Matrix::Identity(n, n));
    if (!v_inv.allFinite()) {
        throw NumericError("eig: eigenvector basis is numerically singular");
    }
    out.left_vectors = v_inv.adjoint();
    return out;
}

Matrix expm(const Matrix& a) {
    require_square_finite(a, "expm");
    // Real input stays on the real path; this keeps exponentials of real
    // system matrices exactly real instead of carrying imaginary round-off.
    if (a.imag().isZero(0.0)) {
        RealMatrix ar = a.real();
        RealMatrix er = ar.exp();
        if (!er.allFinite()) throw NumericError("expm: overflow for extreme matrix norm");
        return er.cast<Complex>();
    }
    Matrix e = a.exp();
    if (!e.allFinite()) throw NumericError("expm: overflow for extreme matrix norm");
    return e;
}

Projection project_onto_span(const Matrix& basis, const Vector& target) {
    if (basis.rows() != target.size()) {
        throw NumericError("project_onto_span: basis and target dimensions differ");
    }
    if (basis.cols() == 0) {
        throw NumericError("project_onto_span: empty basis");
    }
    if (!basis.allFinite() || !target.allFinite()) {
        throw NumericError("project_onto_span: non-finite input");
    }
    Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    Projection p;
    p.coefficients = svd.solve(target);
    p.residual = target - basis * p.coefficients;
    return p;
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()[0];
}

Matrix matrix_log(const Matrix& a) {
    EigenDecomposition d = eig(a);
    for (Eigen::Index i = 0; i < d.values.size(); ++i) {
        if (std::abs(d.values[i]) == 0.0) {
            throw NumericError("matrix_log: singular matrix has no logarithm");
        }
    }
    Vector logs = d.values.unaryExpr([](Complex mu) { return std::log(mu); });
    Matrix out = d.right_vectors * logs.asDiagonal() * d.left_vectors.adjoint();
    if (!out.allFinite()) {
        throw NumericError("matrix_log: defective or ill-conditioned eigenbasis");
    }
    return out;
}

double eigenbasis_condition(const Matrix& right_vectors) {
    Eigen::JacobiSVD<Matrix> svd(right_vectors);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[sv.size() - 1] == 0.0) return std::numeric_limits<double>::infinity();
    return sv[0] / sv[sv.size() - 1];
}

}  // namespace koop
