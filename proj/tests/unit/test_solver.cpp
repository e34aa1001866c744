#include "oracles.hpp"

#include <farmselect/error.hpp>
#include <farmselect/solver.hpp>

#include <gtest/gtest.h>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace farmselect;

namespace {

/// (1, Z) with Z^T Z / n = I and Z orthogonal to the ones vector.
DenseMatrix orthonormal_design(Index n, Index p, std::uint64_t seed)
{
    DenseMatrix A(n, p + 1);
    A.col(0).setOnes();
    A.rightCols(p) = oracle::gaussian_matrix(n, p, seed);
    const DenseMatrix Q = Eigen::HouseholderQR<DenseMatrix>(A).householderQ() * DenseMatrix::Identity(n, p + 1);
    DenseMatrix W(n, p + 1);
    W.col(0).setOnes();
    W.rightCols(p) = std::sqrt(static_cast<double>(n)) * Q.rightCols(p);
    return W;
}

DenseMatrix with_intercept(const DenseMatrix& X)
{
    DenseMatrix W(X.rows(), X.cols() + 1);
    W.col(0).setOnes();
    W.rightCols(X.cols()) = X;
    return W;
}

Vector bernoulli_response(const DenseMatrix& W, const Vector& theta, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vector z = W * theta;
    Vector y(z.size());
    for (Index t = 0; t < z.size(); ++t) y[t] = u(rng) < 1.0 / (1.0 + std::exp(-z[t])) ? 1.0 : 0.0;
    return y;
}

struct LinearProblem
{
    DenseMatrix W;
    Vector y;
};

LinearProblem sparse_linear(Index n, Index p, std::uint64_t seed)
{
    LinearProblem out;
    out.W = with_intercept(oracle::gaussian_matrix(n, p, seed));
    Vector theta = Vector::Zero(p + 1);
    theta[0] = 0.5;
    theta.segment(1, std::min<Index>(3, p)).setConstant(1.5);
    out.y = out.W * theta + 0.5 * oracle::gaussian_matrix(n, 1, seed + 1).col(0);
    return out;
}

} // namespace

TEST(SoftThreshold, Examples)
{
    EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
    EXPECT_EQ(soft_threshold(-0.5, 1.0), 0.0);
    EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
    EXPECT_EQ(soft_threshold(1.0, 1.0), 0.0);
}

TEST(PenaltyMask, Layout)
{
    const PenaltyMask m = PenaltyMask::farm_select(4, 2);
    EXPECT_EQ(m.size(), 7);
    EXPECT_EQ(m.covariate_count(), 4);
    EXPECT_FALSE(m.penalized[0]);
    for (Index j = 1; j <= 4; ++j) EXPECT_TRUE(m.penalized[static_cast<std::size_t>(j)]);
    EXPECT_FALSE(m.penalized[5]);
    EXPECT_FALSE(m.penalized[6]);
}

TEST(FitPenalized, OrthonormalLambdaZeroIsLeastSquares)
{
    const Index n = 40, p = 6;
    const DenseMatrix W = orthonormal_design(n, p, 3);
    const Vector y = oracle::gaussian_matrix(n, 1, 4).col(0);
    const PenalizedFit fit = fit_penalized(W, y, GlmFamily::linear(), 0.0, PenaltyMask::lasso(p));
    const Vector ols = W.transpose() * y / static_cast<double>(n);
    EXPECT_LE((fit.coefficients() - ols).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(kkt_check(fit, W, y, GlmFamily::linear(), PenaltyMask::lasso(p)), 1e-8);
}

TEST(FitPenalized, OrthonormalSoftThresholdOracle)
{
    const Index n = 60, p = 8;
    const DenseMatrix W = orthonormal_design(n, p, 5);
    const Vector y = W.col(1) * 2.0 - W.col(3) * 0.7 + 0.3 * oracle::gaussian_matrix(n, 1, 6).col(0);
    const Vector yc = y.array() - y.mean();
    for (const double lambda : {0.05, 0.3, 1.0}) {
        const PenalizedFit fit = fit_penalized(W, y, GlmFamily::linear(), lambda, PenaltyMask::lasso(p));
        for (Index j = 0; j < p; ++j) {
            const double expected = soft_threshold(W.col(j + 1).dot(yc) / static_cast<double>(n), lambda);
            EXPECT_NEAR(fit.beta[j], expected, 1e-8);
        }
        EXPECT_NEAR(fit.intercept, y.mean(), 1e-8);
    }
}

TEST(FitPenalized, LocalPerturbationAudit)
{
    const Index n = 50;
    const DenseMatrix X = oracle::gaussian_matrix(n, 5, 70);
    const DenseMatrix W = with_intercept(X);
    const Vector y = X.col(0) * 2.0 - X.col(2) + oracle::gaussian_matrix(n, 1, 71).col(0);
    const PenaltyMask mask = PenaltyMask::farm_select(3, 2);
    const double lambda = 0.2;
    const PenalizedFit fit = fit_penalized(W, y, GlmFamily::linear(), lambda, mask);
    const Vector theta = fit.coefficients();
    const double base = penalized_objective(W, y, GlmFamily::linear(), mask, theta, lambda);
    std::mt19937_64 rng(72);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        Vector delta(theta.size());
        for (Index j = 0; j < delta.size(); ++j) delta[j] = z(rng);
        delta *= 1e-3 / delta.norm();
        EXPECT_LE(base, penalized_objective(W, y, GlmFamily::linear(), mask, theta + delta, lambda));
    }
}

TEST(FitPenalized, MatchesSignEnumeration)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DenseMatrix X = oracle::gaussian_matrix(30, 5, 200 + seed);
        const DenseMatrix W = with_intercept(X);
        const Vector y = X.col(1) - 0.5 * X.col(4) + 0.8 * oracle::gaussian_matrix(30, 1, 300 + seed).col(0);
        const PenaltyMask mask = PenaltyMask::farm_select(4, 1);
        for (const double lambda : {0.01, 0.1, 0.4}) {
            const auto exact = oracle::lasso_by_enumeration(W, y, lambda, mask.penalized);
            ASSERT_TRUE(exact.has_value());
            const PenalizedFit fit = fit_penalized(W, y, GlmFamily::linear(), lambda, mask);
            EXPECT_LE((fit.coefficients() - *exact).cwiseAbs().maxCoeff(), 1e-7) << "seed " << seed;
        }
    }
}

TEST(FitPenalized, ActiveSetMatchesNonzeros)
{
    const LinearProblem prob = sparse_linear(60, 30, 9);
    const PenalizedFit fit = fit_penalized(prob.W, prob.y, GlmFamily::linear(), 0.1, PenaltyMask::lasso(30));
    IndexSet nonzero;
    for (Index j = 0; j < fit.beta.size(); ++j)
        if (fit.beta[j] != 0.0) nonzero.push_back(j);
    EXPECT_EQ(fit.active_set, nonzero);
    EXPECT_TRUE(fit.converged);
}

TEST(FitPenalized, ObjectiveNonIncreasingAcrossSweeps)
{
    for (const GlmFamily family : {GlmFamily::linear(), GlmFamily::logistic()}) {
        const LinearProblem prob = sparse_linear(80, 40, 11);
        const Vector y = family.kind == Family::Logistic
                             ? bernoulli_response(prob.W, Vector::Constant(41, 0.3), 12)
                             : prob.y;
        std::vector<double> trace;
        SolverOptions opts;
        opts.polish = false;
        opts.trace = [&](double v) { trace.push_back(v); };
        fit_penalized(prob.W, y, family, 0.02, PenaltyMask::lasso(40), nullptr, opts);
        ASSERT_GE(trace.size(), 2U);
        for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
    }
}

TEST(FitPenalized, LogisticKkt)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const DenseMatrix W = with_intercept(oracle::gaussian_matrix(100, 20, 400 + seed));
        Vector theta = Vector::Zero(21);
        theta.segment(1, 3) << 2.0, -1.5, 1.0;
        const Vector y = bernoulli_response(W, theta, 500 + seed);
        for (const double lambda : {0.005, 0.03, 0.1}) {
            const PenalizedFit fit = fit_penalized(W, y, GlmFamily::logistic(), lambda, PenaltyMask::lasso(20));
            EXPECT_TRUE(fit.converged);
            EXPECT_LE(kkt_check(fit, W, y, GlmFamily::logistic(), PenaltyMask::lasso(20)), 1e-5);
        }
    }
}

TEST(FitPenalized, Deterministic)
{
    const LinearProblem prob = sparse_linear(70, 90, 13);
    const PenalizedFit a = fit_penalized(prob.W, prob.y, GlmFamily::linear(), 0.05, PenaltyMask::lasso(90));
    const PenalizedFit b = fit_penalized(prob.W, prob.y, GlmFamily::linear(), 0.05, PenaltyMask::lasso(90));
    EXPECT_EQ(a.coefficients(), b.coefficients());
    EXPECT_EQ(a.iterations, b.iterations);
}

TEST(FitPenalized, Errors)
{
    const LinearProblem prob = sparse_linear(20, 4, 1);
    EXPECT_THROW(fit_penalized(prob.W, prob.y, GlmFamily::linear(), -1.0, PenaltyMask::lasso(4)), Error);
    EXPECT_THROW(fit_penalized(prob.W, prob.y, GlmFamily::linear(), 0.1, PenaltyMask::lasso(5)), Error);
    DenseMatrix bad = prob.W;
    bad(0, 0) = 2.0;
    EXPECT_THROW(fit_penalized(bad, prob.y, GlmFamily::linear(), 0.1, PenaltyMask::lasso(4)), Error);
}

TEST(LambdaGrid, ZeroResponseIsDegenerate)
{
    const LinearProblem prob = sparse_linear(20, 5, 2);
    try {
        lambda_path_grid(prob.W, Vector::Zero(20), GlmFamily::linear(), PenaltyMask::lasso(5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
    }
}

TEST(LambdaGrid, EndpointsAndNullFit)
{
    const LinearProblem prob = sparse_linear(50, 20, 3);
    const PenaltyMask mask = PenaltyMask::lasso(20);
    const std::vector<double> grid = lambda_path_grid(prob.W, prob.y, GlmFamily::linear(), mask, 25, 0.01);
    ASSERT_EQ(grid.size(), 25U);
    const Vector r0 = prob.y.array() - prob.y.mean();
    const double lambda_max = (prob.W.rightCols(20).transpose() * r0).cwiseAbs().maxCoeff() / 50.0;
    EXPECT_NEAR(grid.front(), lambda_max, 1e-12 * lambda_max);
    EXPECT_NEAR(grid.back(), 0.01 * lambda_max, 1e-12 * lambda_max);
    for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LT(grid[i], grid[i - 1]);

    const PenalizedFit at_max =
        fit_penalized(prob.W, prob.y, GlmFamily::linear(), lambda_max * (1 + 1e-6), mask);
    EXPECT_TRUE(at_max.beta.isZero(0.0));
    EXPECT_LE(kkt_check(at_max, prob.W, prob.y, GlmFamily::linear(), mask), 1e-10);
}

TEST(LambdaGrid, LogisticNullFitAtMax)
{
    const DenseMatrix W = with_intercept(oracle::gaussian_matrix(60, 10, 33));
    Vector theta = Vector::Zero(11);
    theta[1] = 1.5;
    const Vector y = bernoulli_response(W, theta, 34);
    const PenaltyMask mask = PenaltyMask::lasso(10);
    const std::vector<double> grid = lambda_path_grid(W, y, GlmFamily::logistic(), mask, 10);
    const PenalizedFit at_max = fit_penalized(W, y, GlmFamily::logistic(), grid.front() * (1 + 1e-6), mask);
    EXPECT_TRUE(at_max.beta.isZero(0.0));
    EXPECT_LE(kkt_check(at_max, W, y, GlmFamily::logistic(), mask), 1e-10);
}

TEST(LambdaPath, NormShrinksWithLambdaAndKkt)
{
    for (const GlmFamily family : {GlmFamily::linear(), GlmFamily::logistic()}) {
        const LinearProblem prob = sparse_linear(80, 120, 21);
        Vector theta = Vector::Zero(121);
        theta.segment(1, 3) << 1.5, -1.0, 1.0;
        const Vector y = family.kind == Family::Logistic ? bernoulli_response(prob.W, theta, 22) : prob.y;
        const PenaltyMask mask = PenaltyMask::lasso(120);
        const std::vector<double> grid = lambda_path_grid(prob.W, y, family, mask, 40, 0.02);
        const LambdaPath path = fit_path(prob.W, y, family, mask, grid);
        ASSERT_EQ(path.fits.size(), grid.size());
        EXPECT_TRUE(path.fits.front().beta.isZero(0.0));
        for (std::size_t k = 0; k < path.fits.size(); ++k) {
            EXPECT_EQ(path.fits[k].lambda, grid[k]);
            if (path.fits[k].converged) EXPECT_LE(kkt_check(path.fits[k], prob.W, y, family, mask), 1e-5);
            if (k > 0) EXPECT_GE(path.fits[k].beta.lpNorm<1>() + 1e-8, path.fits[k - 1].beta.lpNorm<1>());
        }
    }
}

TEST(CrossValidate, LeaveOneOutPartition)
{
    const std::vector<Index> folds = assign_folds(10, 10, 42);
    std::multiset<Index> seen(folds.begin(), folds.end());
    for (Index f = 0; f < 10; ++f) EXPECT_EQ(seen.count(f), 1U);
}

TEST(CrossValidate, BalancedBlocks)
{
    for (const auto scheme : {FoldScheme::RandomPermutation, FoldScheme::ContiguousBlocks}) {
        const std::vector<Index> folds = assign_folds(103, 10, 1, scheme);
        std::vector<Index> counts(10, 0);
        for (const Index f : folds) ++counts[static_cast<std::size_t>(f)];
        const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
        EXPECT_LE(*hi - *lo, 1);
    }
    const std::vector<Index> blocks = assign_folds(10, 5, 0, FoldScheme::ContiguousBlocks);
    EXPECT_TRUE(std::is_sorted(blocks.begin(), blocks.end()));
}

TEST(CrossValidate, MirroredHalvesMatchTrainingLoss)
{
    const LinearProblem half = sparse_linear(40, 15, 51);
    DenseMatrix W(80, half.W.cols());
    W.topRows(40) = half.W;
    W.bottomRows(40) = half.W;
    Vector y(80);
    y << half.y, half.y;
    std::vector<Index> folds(80, 1);
    std::fill(folds.begin(), folds.begin() + 40, 0);
    const PenaltyMask mask = PenaltyMask::lasso(15);
    const std::vector<double> grid = lambda_path_grid(half.W, half.y, GlmFamily::linear(), mask, 15, 0.05);
    const CrossValidation cv = cross_validate_with_folds(W, y, GlmFamily::linear(), mask, grid, folds);
    const LambdaPath path = fit_path(half.W, half.y, GlmFamily::linear(), mask, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Vector theta = path.fits[k].coefficients();
        EXPECT_NEAR(cv.mean_scores[k], neg_loglik(GlmFamily::linear(), half.y, half.W * theta), 1e-9);
    }
}

TEST(CrossValidate, DeterministicAndTiesToLargerLambda)
{
    const LinearProblem prob = sparse_linear(60, 30, 61);
    const PenaltyMask mask = PenaltyMask::lasso(30);
    const std::vector<double> grid = lambda_path_grid(prob.W, prob.y, GlmFamily::linear(), mask, 30, 0.01);
    const CrossValidation a = cross_validate(prob.W, prob.y, GlmFamily::linear(), mask, grid, 5, 7);
    const CrossValidation b = cross_validate(prob.W, prob.y, GlmFamily::linear(), mask, grid, 5, 7);
    EXPECT_EQ(a.fold_of, b.fold_of);
    EXPECT_EQ(a.best_lambda, b.best_lambda);
    EXPECT_EQ(a.mean_scores, b.mean_scores);
    const auto first_min = std::min_element(a.mean_scores.begin(), a.mean_scores.end());
    EXPECT_EQ(a.best_index, first_min - a.mean_scores.begin());
    EXPECT_EQ(a.best_lambda, grid[static_cast<std::size_t>(a.best_index)]);
    EXPECT_LE(a.one_se_index, a.best_index);
    EXPECT_LE(a.mean_scores[static_cast<std::size_t>(a.one_se_index)],
              a.mean_scores[static_cast<std::size_t>(a.best_index)] +
                  a.standard_errors[static_cast<std::size_t>(a.best_index)]);

    // Every lambda above lambda_max gives the null fit, so the scores tie and the largest wins.
    const CrossValidation flat = cross_validate(prob.W, prob.y, GlmFamily::linear(), mask, {10.0, 9.0, 8.0}, 5, 7);
    EXPECT_EQ(flat.best_index, 0);
}

TEST(CrossValidate, Errors)
{
    const LinearProblem prob = sparse_linear(10, 4, 1);
    const PenaltyMask mask = PenaltyMask::lasso(4);
    EXPECT_THROW(cross_validate(prob.W, prob.y, GlmFamily::linear(), mask, {0.1}, 1, 0), Error);
    EXPECT_THROW(cross_validate(prob.W, prob.y, GlmFamily::linear(), mask, {0.1}, 11, 0), Error);
    try {
        cross_validate(prob.W, prob.y, GlmFamily::linear(), mask, {0.1}, 5, 0, {}, FoldScheme::RandomPermutation,
                       CvLoss::Misclassification);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BadLabel);
    }
}

TEST(KktCheck, ExactLeastSquares)
{
    const LinearProblem prob = sparse_linear(40, 5, 81);
    PenalizedFit fit;
    const Vector theta = solve_spd(prob.W.transpose() * prob.W, prob.W.transpose() * prob.y).col(0);
    fit.intercept = theta[0];
    fit.beta = theta.tail(5);
    fit.gamma = Vector(0);
    fit.lambda = 0.0;
    EXPECT_LE(kkt_check(fit, prob.W, prob.y, GlmFamily::linear(), PenaltyMask::lasso(5)), 1e-8);
}
