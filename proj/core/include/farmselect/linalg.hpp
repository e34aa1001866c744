#pragma once

#include <Eigen/Core>

#include <string_view>
#include <vector>

namespace farmselect {

using Index = Eigen::Index;

/// Row-major dense matrix used for designs, factors and loadings.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Sorted, duplicate-free list of column indices.
using IndexSet = std::vector<Index>;

/**
 * Leading eigenpairs of a symmetric matrix.
 *
 * values are non-increasing; column j of vectors is the unit eigenvector for
 * values[j], with its largest-magnitude entry non-negative (ties resolved by
 * the lowest row index).
 */
struct EigenPairs
{
    Vector values;
    DenseMatrix vectors;
};

/**
 * Top-k eigenpairs of a symmetric matrix.
 *
 * The input is accepted when |S_ij - S_ji| <= 1e-10 * max|S| and is then
 * symmetrized as (S + S^T) / 2. The full decomposition is computed by
 * Householder tridiagonalization followed by implicit symmetric QR, and
 * truncated to k.
 *
 * Throws NonSymmetric, BadDimension (k outside [1, m]) or NoConvergence.
 */
EigenPairs sym_eigen_topk(const DenseMatrix& S, Index k);

/// Full decomposition; equivalent to sym_eigen_topk(S, S.rows()).
EigenPairs sym_eigen(const DenseMatrix& S);

/**
 * Solves A X = B for symmetric positive-definite A by Cholesky.
 *
 * Throws NotPositiveDefinite when a pivot falls below 1e-12 * trace(A) / dim,
 * BadDimension on shape mismatch.
 */
DenseMatrix solve_spd(const DenseMatrix& A, const DenseMatrix& B);

/// Throws BadDimension naming `what` if any entry is NaN or infinite.
void require_finite(const DenseMatrix& M, std::string_view what);
void require_finite(const Vector& v, std::string_view what);

/// Flips each column so its largest-magnitude entry is non-negative.
void apply_sign_convention(DenseMatrix& vectors);

/// Rows of M selected by `rows`, in the given order.
DenseMatrix take_rows(const DenseMatrix& M, const std::vector<Index>& rows);
Vector take_rows(const Vector& v, const std::vector<Index>& rows);

/// Induced infinity norm (max absolute row sum).
double inf_norm(const DenseMatrix& M);

} // namespace farmselect
