#include <farmselect/error.hpp>
#include <farmselect/factor.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace farmselect {
namespace {

constexpr Index kReportedEigenvalues = 20;

void check_shape(const DenseMatrix& X)
{
    if (X.rows() < 2 || X.cols() < 1) {
        fail(ErrorKind::BadDimension, "factor estimation needs n >= 2 rows and at least one covariate");
    }
    require_finite(X, "covariate matrix");
}

void check_k(const DenseMatrix& X, Index K)
{
    const Index bound = std::min(X.rows(), X.cols()) - 1;
    if (K < 0 || K > bound) {
        fail(ErrorKind::BadDimension,
             "number of factors " + std::to_string(K) + " outside [0, " + std::to_string(bound) + "]");
    }
}

bool all_columns_constant(const DenseMatrix& X)
{
    for (Index j = 0; j < X.cols(); ++j) {
        const auto col = X.col(j);
        if ((col.array() != col[0]).any()) return false;
    }
    return true;
}

struct Prepared
{
    DenseMatrix X;
    Vector means;
};

Prepared prepare(const DenseMatrix& X, bool center)
{
    Prepared out{X, Vector::Zero(X.cols())};
    if (center) {
        out.means = X.colwise().mean().transpose();
        out.X.rowwise() -= out.means.transpose();
    }
    return out;
}

EigenPairs gram_spectrum(const DenseMatrix& X)
{
    const DenseMatrix gram = X * X.transpose();
    return sym_eigen(gram);
}

FactorDecomposition assemble(Prepared prepared, const EigenPairs& spectrum, Index K, bool center)
{
    const Index n = prepared.X.rows();
    FactorDecomposition out;
    out.centered = center;
    out.column_means = std::move(prepared.means);
    out.num_factors = K;
    const Index keep = std::min<Index>(spectrum.values.size(), std::max(kReportedEigenvalues, K + 1));
    out.eigenvalues = spectrum.values.head(keep);

    if (K == 0) {
        out.factors.resize(n, 0);
        out.loadings.resize(prepared.X.cols(), 0);
        out.idiosyncratic = std::move(prepared.X);
        return out;
    }
    out.factors = std::sqrt(static_cast<double>(n)) * spectrum.vectors.leftCols(K);
    out.loadings = prepared.X.transpose() * out.factors / static_cast<double>(n);
    out.idiosyncratic = prepared.X - out.factors * out.loadings.transpose();
    return out;
}

} // namespace

Index default_k_max(Index n, Index num_covariates)
{
    return std::min({n, num_covariates, Index{20}}) / 2;
}

Index select_num_factors_from_spectrum(const Vector& eigenvalues, Index k_max)
{
    if (k_max < 1 || k_max + 1 > eigenvalues.size()) {
        fail(ErrorKind::BadDimension, "k_max " + std::to_string(k_max) + " needs " +
                                          std::to_string(k_max + 1) + " eigenvalues, have " +
                                          std::to_string(eigenvalues.size()));
    }
    const double top = eigenvalues[0];
    if (!(top > 0.0)) {
        fail(ErrorKind::DegenerateInput, "X X^T has no positive eigenvalue");
    }
    const double floor = 1e-12 * top;
    auto floored = [&](Index i) { return std::max(eigenvalues[i], floor); };

    Index best = 1;
    double best_ratio = floored(0) / floored(1);
    for (Index k = 2; k <= k_max; ++k) {
        const double ratio = floored(k - 1) / floored(k);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = k;
        }
    }
    return best;
}

Index select_num_factors(const DenseMatrix& X, Index k_max)
{
    check_shape(X);
    const Index bound = std::min(X.rows(), X.cols()) - 1;
    if (k_max < 1 || k_max > bound) {
        fail(ErrorKind::BadDimension,
             "k_max " + std::to_string(k_max) + " outside [1, " + std::to_string(bound) + "]");
    }
    return select_num_factors_from_spectrum(gram_spectrum(X).values, k_max);
}

FactorDecomposition estimate_factors(const DenseMatrix& X, Index K, bool center)
{
    check_shape(X);
    check_k(X, K);
    if (K > 0 && all_columns_constant(X)) {
        fail(ErrorKind::DegenerateInput, "every covariate column is constant");
    }
    Prepared prepared = prepare(X, center);
    const EigenPairs spectrum = gram_spectrum(prepared.X);
    return assemble(std::move(prepared), spectrum, K, center);
}

FactorDecomposition estimate_factors_auto(const DenseMatrix& X, Index k_max, bool center)
{
    check_shape(X);
    const Index bound = std::min(X.rows(), X.cols()) - 1;
    if (k_max < 0 || k_max > bound) {
        fail(ErrorKind::BadDimension,
             "k_max " + std::to_string(k_max) + " outside [0, " + std::to_string(bound) + "]");
    }
    Prepared prepared = prepare(X, center);
    const EigenPairs spectrum = gram_spectrum(prepared.X);
    Index K = 0;
    if (k_max >= 1) {
        if (all_columns_constant(X)) {
            fail(ErrorKind::DegenerateInput, "every covariate column is constant");
        }
        K = select_num_factors_from_spectrum(spectrum.values, k_max);
    }
    return assemble(std::move(prepared), spectrum, K, center);
}

DenseMatrix annihilator_apply(const DenseMatrix& factors, const DenseMatrix& M)
{
    if (factors.rows() != M.rows()) {
        fail(ErrorKind::BadDimension, "factor rows and matrix rows differ");
    }
    if (factors.cols() == 0) return M;

    const DenseMatrix gram = factors.transpose() * factors;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(gram), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e10) {
        fail(ErrorKind::RankDeficient, "factor Gram matrix is singular or condition number exceeds 1e10");
    }
    const DenseMatrix coef = solve_spd(gram, factors.transpose() * M);
    return M - factors * coef;
}

void project_new_rows(const FactorDecomposition& fit, const DenseMatrix& X_new, DenseMatrix& factors_out,
                      DenseMatrix& idiosyncratic_out)
{
    if (X_new.cols() != fit.column_means.size()) {
        fail(ErrorKind::BadDimension, "new rows have " + std::to_string(X_new.cols()) +
                                          " covariates, fit has " +
                                          std::to_string(fit.column_means.size()));
    }
    DenseMatrix centered = X_new;
    centered.rowwise() -= fit.column_means.transpose();
    if (fit.num_factors == 0) {
        factors_out.resize(X_new.rows(), 0);
        idiosyncratic_out = std::move(centered);
        return;
    }
    const DenseMatrix btb = fit.loadings.transpose() * fit.loadings;
    const DenseMatrix scores = solve_spd(btb, fit.loadings.transpose() * centered.transpose());
    factors_out = scores.transpose();
    idiosyncratic_out = centered - factors_out * fit.loadings.transpose();
}

} // namespace farmselect
