#pragma once

#include <farmselect/glm.hpp>
#include <farmselect/linalg.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace farmselect {

/**
 * Which augmented coefficients carry the L1 penalty.
 *
 * The augmented design is laid out as (1, covariate block, nuisance block);
 * index 0 is the intercept and is never penalized, the trailing `nuisance`
 * columns (factor coefficients in FarmSelect) are unpenalized as well.
 */
struct PenaltyMask
{
    std::vector<bool> penalized;
    Index nuisance = 0;

    /// Intercept, `num_covariates` penalized columns, `num_factors` unpenalized columns.
    static PenaltyMask farm_select(Index num_covariates, Index num_factors);
    static PenaltyMask lasso(Index num_covariates) { return farm_select(num_covariates, 0); }

    Index size() const noexcept { return static_cast<Index>(penalized.size()); }
    Index covariate_count() const noexcept { return size() - 1 - nuisance; }
};

struct SolverOptions
{
    /// Convergence when the largest absolute coefficient change in a sweep is below tol.
    double tol = 1e-7;
    /// Budget of coordinate sweeps per fit.
    Index max_sweeps = 100000;
    /// Budget of outer IRLS iterations (logistic family).
    Index max_irls = 100;
    double weight_floor = 1e-5;
    double working_clip = 1e6;
    /// Refine the converged iterate by solving the stationarity equations on its active set.
    bool polish = true;
    /// Receives the penalized objective after every sweep (linear) or IRLS step (logistic).
    std::function<void(double)> trace;
};

struct PenalizedFit
{
    double intercept = 0.0;
    Vector beta;
    Vector gamma;
    double lambda = 0.0;
    /// { j : beta_j != 0 }, sorted.
    IndexSet active_set;
    double objective = 0.0;
    double kkt_max_violation = 0.0;
    Index iterations = 0;
    bool converged = false;

    /// (intercept, beta, gamma) in augmented-design order.
    Vector coefficients() const;
};

struct LambdaPath
{
    std::vector<double> lambdas;
    std::vector<PenalizedFit> fits;
};

/// sign(x) * max(|x| - t, 0).
double soft_threshold(double x, double t) noexcept;

/// neg_loglik(y, W theta) + lambda * sum of |theta_j| over penalized j.
double penalized_objective(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask,
                           const Vector& theta, double lambda);

/**
 * Minimizes neg_loglik(y, W theta) + lambda * ||theta_penalized||_1.
 *
 * Linear family: cyclic coordinate descent with closed-form soft-threshold
 * updates. Logistic family: IRLS outer loop (weights b'' floored at
 * weight_floor, working response clipped at +-working_clip, step halving when
 * the objective would increase) around the same coordinate descent. Sweeps
 * alternate between the working set and its nonzero subset; coordinates
 * outside a sequential strong set (when a warm start with a larger lambda is
 * given) are admitted when they violate the KKT conditions.
 *
 * A fit that exhausts its budget is returned with converged = false.
 * Throws BadDimension for malformed inputs and NonFiniteObjective when the
 * objective is not finite.
 */
PenalizedFit fit_penalized(const DenseMatrix& W, const Vector& y, const GlmFamily& family, double lambda,
                           const PenaltyMask& mask, const PenalizedFit* warm = nullptr,
                           const SolverOptions& options = {});

/// Fit of the unpenalized coordinates alone (all penalized coefficients zero).
PenalizedFit fit_null(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask,
                      const SolverOptions& options = {});

/**
 * Log-spaced grid from lambda_max down to ratio * lambda_max.
 *
 * lambda_max is the largest |W_j^T r0| / n over penalized j, r0 being the
 * gradient residuals of the null fit. Throws DegenerateInput when
 * lambda_max vanishes.
 */
std::vector<double> lambda_path_grid(const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                                     const PenaltyMask& mask, Index n_lambdas = 100, double ratio = 1e-3,
                                     const SolverOptions& options = {});

/// Warm-started fits along a strictly decreasing lambda sequence.
LambdaPath fit_path(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask,
                    const std::vector<double>& lambdas, const SolverOptions& options = {});

enum class FoldScheme {
    /// Seeded uniform permutation cut into contiguous blocks.
    RandomPermutation,
    /// Contiguous blocks of the original row order (time-ordered data).
    ContiguousBlocks,
};

/// Fold index in [0, n_folds) for every row; block sizes differ by at most one.
std::vector<Index> assign_folds(Index n, Index n_folds, std::uint64_t seed,
                                FoldScheme scheme = FoldScheme::RandomPermutation);

/// Held-out loss used to score each lambda.
enum class CvLoss {
    /// Mean held-out neg_loglik.
    NegLogLik,
    /// Share of held-out labels on the wrong side of z = 0 (logistic family only).
    Misclassification,
};

struct CrossValidation
{
    double best_lambda = 0.0;
    Index best_index = 0;
    /// Mean over folds of the held-out loss, aligned with the lambdas.
    std::vector<double> mean_scores;
    /// Standard error across folds of the held-out excess loss (neg_loglik minus its saturated value).
    std::vector<double> standard_errors;
    /// Largest lambda whose mean score is within one standard error of the minimum.
    double one_se_lambda = 0.0;
    Index one_se_index = 0;
    std::vector<Index> fold_of;
};

/**
 * K-fold cross-validation over a fixed lambda sequence. The best lambda
 * minimizes the mean held-out loss; ties go to the larger lambda.
 * Throws BadDimension unless 2 <= n_folds <= n, and BadLabel when
 * Misclassification is requested for the linear family.
 */
CrossValidation cross_validate(const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                               const PenaltyMask& mask, const std::vector<double>& lambdas, Index n_folds,
                               std::uint64_t seed, const SolverOptions& options = {},
                               FoldScheme scheme = FoldScheme::RandomPermutation, CvLoss loss = CvLoss::NegLogLik);

/// Same, with an explicit fold assignment.
CrossValidation cross_validate_with_folds(const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                                          const PenaltyMask& mask, const std::vector<double>& lambdas,
                                          const std::vector<Index>& fold_of, const SolverOptions& options = {},
                                          CvLoss loss = CvLoss::NegLogLik);

/**
 * Largest violation of the subgradient optimality conditions at `fit`:
 * |g_j| for unpenalized j, |g_j + lambda sign(theta_j)| for active penalized j
 * and max(|g_j| - lambda, 0) for inactive penalized j, with g = W^T r / n.
 */
double kkt_check(const PenalizedFit& fit, const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                 const PenaltyMask& mask);

} // namespace farmselect
