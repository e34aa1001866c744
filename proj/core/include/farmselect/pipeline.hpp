#pragma once

#include <farmselect/factor.hpp>
#include <farmselect/glm.hpp>
#include <farmselect/solver.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace farmselect {

/// How the cross-validated lambda is read off the curve.
enum class LambdaRule { MinCv, OneStandardError };

struct FarmSelectOptions
{
    /// Number of factors; empty selects it by the eigenvalue-ratio rule.
    std::optional<Index> num_factors;
    /// Upper bound for the ratio rule; empty uses default_k_max.
    std::optional<Index> k_max;
    /// Fixed penalty level; empty selects lambda by cross-validation.
    std::optional<double> lambda;
    /// Explicit decreasing grid; empty builds lambda_path_grid(n_lambdas, lambda_ratio).
    std::vector<double> lambdas;
    Index n_lambdas = 100;
    double lambda_ratio = 1e-3;
    Index n_folds = 10;
    LambdaRule rule = LambdaRule::MinCv;
    CvLoss cv_loss = CvLoss::NegLogLik;
    std::uint64_t seed = 0;
    FoldScheme fold_scheme = FoldScheme::RandomPermutation;
    bool center = true;
    /// Scale the idiosyncratic columns to unit variance; coefficients are reported on the original scale.
    bool standardize = false;
    SolverOptions solver;
};

struct FarmSelectResult
{
    FactorDecomposition factor_fit;
    Index K_used = 0;
    double lambda_chosen = 0.0;
    /// Chosen fit; beta is on the scale of the original covariates.
    PenalizedFit fit;
    /// Equal to fit.active_set.
    IndexSet selected;
    LambdaPath path;
    std::vector<double> cv_scores;
    std::vector<double> cv_standard_errors;
    Index chosen_index = 0;
};

/// (1, U, F): intercept column, idiosyncratic block, factor block.
DenseMatrix augmented_design(const FactorDecomposition& decomposition);

/**
 * Two-step FarmSelect: PCA factor estimate, then the L1 fit on (1, U, F) with
 * only the U block penalized. With no fixed lambda the whole grid is fitted and
 * the reported fit is the cross-validated one; with a fixed lambda the path
 * holds that single fit.
 *
 * Throws DegenerateInput when p - 1 <= K, and propagates factor and solver errors.
 */
FarmSelectResult farm_select(const DenseMatrix& X, const Vector& y, const GlmFamily& family,
                             const FarmSelectOptions& options = {});

/// Step 2 alone, on a supplied decomposition.
FarmSelectResult farm_select_with_factors(const FactorDecomposition& decomposition, const Vector& y,
                                          const GlmFamily& family, const FarmSelectOptions& options = {});

/**
 * Linear-model shortcut: removes the span of (1, F) from y and U with
 * annihilator_apply, solves the plain LASSO on the projected data, then
 * recovers the intercept and factor coefficients by least squares.
 * Agrees with farm_select(linear) at every lambda of a shared grid.
 */
FarmSelectResult farm_select_linear_profile(const DenseMatrix& X, const Vector& y,
                                            const FarmSelectOptions& options = {});

/// Linear predictor for new covariate rows, using the factor projection of project_new_rows.
Vector predict_linear(const FarmSelectResult& result, const DenseMatrix& X_new);

/// b'(linear predictor): fitted mean for new covariate rows.
Vector predict_mean(const FarmSelectResult& result, const GlmFamily& family, const DenseMatrix& X_new);

} // namespace farmselect
