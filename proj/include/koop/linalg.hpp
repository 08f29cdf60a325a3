#pragma once

#include <Eigen/Dense>
#include <complex>

namespace koop {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Eigendecomposition with matched left and right eigenvectors.
///
/// Eigenvalues come in a fixed canonical order: descending |mu|, ties broken
/// by descending real part, then descending imaginary part. Right eigenvectors
/// have unit 2-norm with the first non-negligible entry rotated to be real and
/// non-negative; left eigenvectors are scaled so that <v_i, w_j> = delta_ij,
/// i.e. left_vectors.adjoint() * right_vectors == I.
struct EigenDecomposition {
    Vector values;
    Matrix right_vectors;  // columns v_i with A v_i = mu_i v_i
    Matrix left_vectors;   // columns w_i with w_i^* A = mu_i w_i^*
};

/// Dense eigendecomposition of a square matrix. Throws NumericError on
/// non-convergence or non-finite input; never returns silent NaNs.
EigenDecomposition eig(const Matrix& a);

/// Matrix exponential (scaling-and-squaring accuracy class). Throws
/// NumericError when the result overflows.
Matrix expm(const Matrix& a);

/// Result of the least-squares projection of a target vector onto the span of
/// basis columns: target = basis * coefficients + residual, residual
/// orthogonal to every basis column and of minimal 2-norm.
struct Projection {
    Vector coefficients;
    Vector residual;
};

/// Projects target onto span(basis columns) via truncated SVD. Singular
/// values below sigma_max * 1e-12 are treated as zero, so rank-deficient
/// bases yield the minimum-norm coefficient vector.
Projection project_onto_span(const Matrix& basis, const Vector& target);

/// Largest singular value.
double spectral_norm(const Matrix& a);

/// Principal matrix logarithm through the eigendecomposition. Requires a
/// diagonalizable argument with a usable eigenbasis.
Matrix matrix_log(const Matrix& a);

/// 2-norm condition number of the eigenvector basis of `a`.
double eigenbasis_condition(const Matrix& right_vectors);

}  // namespace koop
