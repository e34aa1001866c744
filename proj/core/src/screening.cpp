#include <farmselect/error.hpp>
#include <farmselect/factor.hpp>
#include <farmselect/screening.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>

namespace farmselect {
namespace {

double marginal_loss(const GlmFamily& family, const Eigen::MatrixXd& Z, const Vector& y, const Vector& theta)
{
    const Vector z = Z * theta;
    double total = 0.0;
    for (Index t = 0; t < z.size(); ++t) total += -y[t] * z[t] + family.cumulant(z[t]);
    return total / static_cast<double>(z.size());
}

/// Newton's method with step halving; returns nullopt when it does not converge.
std::optional<Vector> newton_fit(const GlmFamily& family, const Eigen::MatrixXd& Z, const Vector& y,
                                 const ScreenOptions& options)
{
    const Index n = Z.rows();
    const Index m = Z.cols();
    Vector theta = Vector::Zero(m);
    double value = marginal_loss(family, Z, y, theta);
    Vector r(n), w(n);
    for (Index it = 0; it < options.max_newton; ++it) {
        const Vector z = Z * theta;
        for (Index t = 0; t < n; ++t) {
            r[t] = family.mean(z[t]) - y[t];
            w[t] = family.variance(z[t]);
        }
        const Vector grad = Z.transpose() * r / static_cast<double>(n);
        const Eigen::MatrixXd hess = Z.transpose() * w.asDiagonal() * Z / static_cast<double>(n);
        Eigen::LLT<Eigen::MatrixXd> llt(hess);
        if (llt.info() != Eigen::Success) return std::nullopt;
        if ((llt.matrixLLT().diagonal().array().square() <= 1e-12 * hess.trace() / static_cast<double>(m)).any()) {
            return std::nullopt;
        }
        const Vector step = llt.solve(grad);
        double t = 1.0;
        Vector trial = theta - step;
        double trial_value = marginal_loss(family, Z, y, trial);
        while (!(trial_value <= value) && t > 1e-10) {
            t *= 0.5;
            trial = theta - t * step;
            trial_value = marginal_loss(family, Z, y, trial);
        }
        if (!(trial_value <= value)) return std::nullopt;
        const double change = (t * step).cwiseAbs().maxCoeff();
        theta = trial;
        value = trial_value;
        if (!theta.allFinite()) return std::nullopt;
        if (change <= options.tol * (1.0 + theta.cwiseAbs().maxCoeff())) return theta;
    }
    return std::nullopt;
}

} // namespace

ScreenResult farm_screen(const DenseMatrix& X, const Vector& y, const GlmFamily& family, Index top_m,
                         const ScreenOptions& options)
{
    const Index p1 = X.cols();
    if (top_m < 1 || top_m > p1) {
        fail(ErrorKind::BadDimension, "top_m " + std::to_string(top_m) + " outside [1, " + std::to_string(p1) + "]");
    }
    if (y.size() != X.rows()) {
        fail(ErrorKind::BadDimension,
             "response length " + std::to_string(y.size()) + " != rows " + std::to_string(X.rows()));
    }
    require_finite(y, "response");
    validate_response(family, y);

    FactorDecomposition decomposition;
    if (options.num_factors) {
        decomposition = estimate_factors(X, *options.num_factors, options.center);
    } else {
        const Index k_max = options.k_max ? *options.k_max : default_k_max(X.rows(), p1);
        decomposition = estimate_factors_auto(X, k_max, options.center);
    }
    const Index n = X.rows();
    const Index K = decomposition.num_factors;
    const auto& U = decomposition.idiosyncratic;

    double scale = 0.0;
    for (Index j = 0; j < p1; ++j) scale = std::max(scale, U.col(j).norm());

    ScreenResult result;
    result.num_factors = K;
    std::vector<ScreenEntry> entries(static_cast<std::size_t>(p1));
    Eigen::MatrixXd Z(n, K + 2);
    Z.col(0).setOnes();
    if (K > 0) Z.middleCols(1, K) = decomposition.factors;
    for (Index j = 0; j < p1; ++j) {
        ScreenEntry& entry = entries[static_cast<std::size_t>(j)];
        entry.index = j;
        const auto u = U.col(j);
        const double centered_norm = (u.array() - u.mean()).matrix().norm();
        if (!(centered_norm > 1e-10 * scale)) continue;
        Z.col(K + 1) = u;
        if (const auto theta = newton_fit(family, Z, y, options)) {
            entry.score = std::abs((*theta)[K + 1]);
        } else {
            entry.converged = false;
            ++result.failed_fits;
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const ScreenEntry& a, const ScreenEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    entries.resize(static_cast<std::size_t>(top_m));
    result.ranked = std::move(entries);
    return result;
}

} // namespace farmselect
