#include <farmselect/error.hpp>
#include <farmselect/pipeline.hpp>

#include <cmath>
#include <string>

namespace farmselect {
namespace {

FactorDecomposition decompose(const DenseMatrix& X, const FarmSelectOptions& options)
{
    if (options.num_factors) {
        const Index K = *options.num_factors;
        if (K > 0 && X.cols() <= K) {
            fail(ErrorKind::DegenerateInput, "p - 1 = " + std::to_string(X.cols()) +
                                                 " covariates cannot carry K = " + std::to_string(K) + " factors");
        }
        return estimate_factors(X, K, options.center);
    }
    const Index k_max = options.k_max ? *options.k_max : default_k_max(X.rows(), X.cols());
    return estimate_factors_auto(X, k_max, options.center);
}

/// Unit-variance scaling of columns [first, first + count); constant columns keep scale 1.
Vector scale_columns(DenseMatrix& W, Index first, Index count)
{
    Vector scale = Vector::Ones(count);
    const double n = static_cast<double>(W.rows());
    for (Index j = 0; j < count; ++j) {
        auto col = W.col(first + j);
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / n);
        if (sd > 0.0) {
            scale[j] = sd;
            col /= sd;
        }
    }
    return scale;
}

struct Step2
{
    LambdaPath path;
    std::vector<double> cv_scores;
    std::vector<double> cv_standard_errors;
    Index chosen = 0;
};

Step2 solve_step2(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask,
                  const FarmSelectOptions& options)
{
    Step2 out;
    if (options.lambda) {
        const double lambda = *options.lambda;
        out.path.lambdas = {lambda};
        out.path.fits = {fit_penalized(W, y, family, lambda, mask, nullptr, options.solver)};
        return out;
    }
    const std::vector<double> lambdas =
        options.lambdas.empty()
            ? lambda_path_grid(W, y, family, mask, options.n_lambdas, options.lambda_ratio, options.solver)
            : options.lambdas;
    out.path = fit_path(W, y, family, mask, lambdas, options.solver);
    const CrossValidation cv =
        cross_validate(W, y, family, mask, lambdas, options.n_folds, options.seed, options.solver, options.fold_scheme,
                       options.cv_loss);
    out.cv_scores = cv.mean_scores;
    out.cv_standard_errors = cv.standard_errors;
    out.chosen = options.rule == LambdaRule::OneStandardError ? cv.one_se_index : cv.best_index;
    return out;
}

void unscale(LambdaPath& path, const Vector& scale)
{
    for (auto& fit : path.fits) fit.beta.array() /= scale.array();
}

FarmSelectResult assemble(FactorDecomposition decomposition, Step2 step)
{
    FarmSelectResult result;
    result.K_used = decomposition.num_factors;
    result.factor_fit = std::move(decomposition);
    result.path = std::move(step.path);
    result.cv_scores = std::move(step.cv_scores);
    result.cv_standard_errors = std::move(step.cv_standard_errors);
    result.chosen_index = step.chosen;
    result.fit = result.path.fits[static_cast<std::size_t>(step.chosen)];
    result.lambda_chosen = result.fit.lambda;
    result.selected = result.fit.active_set;
    return result;
}

void check_step2_shapes(const FactorDecomposition& decomposition, const Vector& y)
{
    const Index p1 = decomposition.idiosyncratic.cols();
    const Index K = decomposition.num_factors;
    if (K > 0 && p1 <= K) {
        fail(ErrorKind::DegenerateInput,
             "p - 1 = " + std::to_string(p1) + " covariates cannot carry K = " + std::to_string(K) + " factors");
    }
    if (y.size() != decomposition.idiosyncratic.rows()) {
        fail(ErrorKind::BadDimension, "response length " + std::to_string(y.size()) + " != rows " +
                                          std::to_string(decomposition.idiosyncratic.rows()));
    }
}

} // namespace

DenseMatrix augmented_design(const FactorDecomposition& decomposition)
{
    const Index n = decomposition.idiosyncratic.rows();
    const Index p1 = decomposition.idiosyncratic.cols();
    const Index K = decomposition.num_factors;
    DenseMatrix W(n, 1 + p1 + K);
    W.col(0).setOnes();
    W.middleCols(1, p1) = decomposition.idiosyncratic;
    if (K > 0) W.rightCols(K) = decomposition.factors;
    return W;
}

FarmSelectResult farm_select_with_factors(const FactorDecomposition& decomposition, const Vector& y,
                                          const GlmFamily& family, const FarmSelectOptions& options)
{
    check_step2_shapes(decomposition, y);
    const Index p1 = decomposition.idiosyncratic.cols();
    DenseMatrix W = augmented_design(decomposition);
    const Vector scale = options.standardize ? scale_columns(W, 1, p1) : Vector::Ones(p1);
    const PenaltyMask mask = PenaltyMask::farm_select(p1, decomposition.num_factors);

    Step2 step = solve_step2(W, y, family, mask, options);
    if (options.standardize) unscale(step.path, scale);
    return assemble(decomposition, std::move(step));
}

FarmSelectResult farm_select(const DenseMatrix& X, const Vector& y, const GlmFamily& family,
                             const FarmSelectOptions& options)
{
    if (y.size() != X.rows()) {
        fail(ErrorKind::BadDimension,
             "response length " + std::to_string(y.size()) + " != rows " + std::to_string(X.rows()));
    }
    return farm_select_with_factors(decompose(X, options), y, family, options);
}

FarmSelectResult farm_select_linear_profile(const DenseMatrix& X, const Vector& y, const FarmSelectOptions& options)
{
    if (y.size() != X.rows()) {
        fail(ErrorKind::BadDimension,
             "response length " + std::to_string(y.size()) + " != rows " + std::to_string(X.rows()));
    }
    require_finite(y, "response");
    FactorDecomposition decomposition = decompose(X, options);
    check_step2_shapes(decomposition, y);

    const Index n = X.rows();
    const Index p1 = decomposition.idiosyncratic.cols();
    const Index K = decomposition.num_factors;

    // The intercept is annihilated together with the factors, so the projection
    // is exact whether or not the covariates were centered.
    DenseMatrix nuisance(n, 1 + K);
    nuisance.col(0).setOnes();
    if (K > 0) nuisance.rightCols(K) = decomposition.factors;

    DenseMatrix W(n, 1 + p1);
    W.col(0).setOnes();
    W.rightCols(p1) = annihilator_apply(nuisance, decomposition.idiosyncratic);
    DenseMatrix y_matrix = y;
    const Vector y_tilde = annihilator_apply(nuisance, y_matrix).col(0);
    const Vector scale = options.standardize ? scale_columns(W, 1, p1) : Vector::Ones(p1);

    const GlmFamily family = GlmFamily::linear();
    Step2 step = solve_step2(W, y_tilde, family, PenaltyMask::lasso(p1), options);
    if (options.standardize) unscale(step.path, scale);

    // Recover (intercept, gamma) and restate every fit on the joint augmented problem.
    const DenseMatrix W_joint = augmented_design(decomposition);
    const PenaltyMask joint_mask = PenaltyMask::farm_select(p1, K);
    const DenseMatrix gram = nuisance.transpose() * nuisance;
    for (auto& fit : step.path.fits) {
        const Vector partial = y - decomposition.idiosyncratic * fit.beta;
        const Vector coef = solve_spd(gram, nuisance.transpose() * partial).col(0);
        fit.intercept = coef[0];
        fit.gamma = coef.tail(K);
        if (!options.standardize) {
            fit.objective = penalized_objective(W_joint, y, family, joint_mask, fit.coefficients(), fit.lambda);
            fit.kkt_max_violation = kkt_check(fit, W_joint, y, family, joint_mask);
        }
    }
    return assemble(std::move(decomposition), std::move(step));
}

Vector predict_linear(const FarmSelectResult& result, const DenseMatrix& X_new)
{
    DenseMatrix factors, idiosyncratic;
    project_new_rows(result.factor_fit, X_new, factors, idiosyncratic);
    Vector z = idiosyncratic * result.fit.beta;
    z.array() += result.fit.intercept;
    if (result.K_used > 0) z.noalias() += factors * result.fit.gamma;
    return z;
}

Vector predict_mean(const FarmSelectResult& result, const GlmFamily& family, const DenseMatrix& X_new)
{
    Vector z = predict_linear(result, X_new);
    for (Index t = 0; t < z.size(); ++t) z[t] = family.mean(z[t]);
    return z;
}

} // namespace farmselect
