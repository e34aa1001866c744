#pragma once

#include <farmselect/linalg.hpp>

namespace farmselect {

/**
 * PCA estimate of the approximate factor model X = F B^T + U.
 *
 * factors is n x K with F^T F / n = I_K, loadings is (p-1) x K with
 * B = X^T F / n, idiosyncratic is X - F B^T. When the covariates were
 * centered, column_means holds the subtracted means and X above refers to the
 * centered matrix.
 */
struct FactorDecomposition
{
    DenseMatrix loadings;
    DenseMatrix factors;
    DenseMatrix idiosyncratic;
    Index num_factors = 0;
    /// Leading eigenvalues of X X^T, non-increasing.
    Vector eigenvalues;
    Vector column_means;
    bool centered = false;
};

/// min(n, p-1, 20) / 2, the default upper bound for the eigenvalue-ratio search.
Index default_k_max(Index n, Index num_covariates);

/**
 * Estimates K factors by PCA on the n x n Gram matrix X X^T.
 *
 * K = 0 is allowed and leaves idiosyncratic equal to the (optionally centered)
 * covariates. Throws BadDimension when K > min(n, p-1) - 1 and
 * DegenerateInput when every column is constant and K > 0.
 */
FactorDecomposition estimate_factors(const DenseMatrix& X, Index K, bool center = true);

/**
 * Eigenvalue-ratio estimate argmax_{k <= k_max} lambda_k / lambda_{k+1} of X X^T.
 *
 * X is used as given (no centering). Eigenvalues below 1e-12 * lambda_1 are
 * floored before the ratios are formed; ties go to the smallest k.
 */
Index select_num_factors(const DenseMatrix& X, Index k_max);

/// Same rule applied to an already computed non-increasing spectrum.
Index select_num_factors_from_spectrum(const Vector& eigenvalues, Index k_max);

/// Estimates K by the eigenvalue-ratio rule and the factors in a single eigendecomposition.
FactorDecomposition estimate_factors_auto(const DenseMatrix& X, Index k_max, bool center = true);

/**
 * Returns (I - P) M with P = F (F^T F)^{-1} F^T, without forming the n x n
 * projector. Empty factors return M unchanged. Throws RankDeficient when the
 * factor Gram matrix has condition number above 1e10.
 */
DenseMatrix annihilator_apply(const DenseMatrix& factors, const DenseMatrix& M);

/**
 * Maps new covariate rows to (factor scores, idiosyncratic parts) under a
 * fitted decomposition: f = (B^T B)^{-1} B^T (x - mean), u = x - mean - B f.
 */
void project_new_rows(const FactorDecomposition& fit, const DenseMatrix& X_new, DenseMatrix& factors_out,
                      DenseMatrix& idiosyncratic_out);

} // namespace farmselect
