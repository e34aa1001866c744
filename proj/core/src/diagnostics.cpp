#include <farmselect/diagnostics.hpp>
#include <farmselect/error.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace farmselect {
namespace {

std::vector<Index> complement(Index size, const IndexSet& S)
{
    std::vector<char> in(static_cast<std::size_t>(size), 0);
    for (const Index j : S) in[static_cast<std::size_t>(j)] = 1;
    std::vector<Index> out;
    for (Index j = 0; j < size; ++j) {
        if (!in[static_cast<std::size_t>(j)]) out.push_back(j);
    }
    return out;
}

void check_index_set(Index size, const IndexSet& S, bool proper)
{
    if (S.empty()) fail(ErrorKind::BadDimension, "support set is empty");
    std::vector<char> seen(static_cast<std::size_t>(size), 0);
    for (const Index j : S) {
        if (j < 0 || j >= size) {
            fail(ErrorKind::BadDimension, "support index " + std::to_string(j) + " outside [0, " +
                                              std::to_string(size) + ")");
        }
        if (seen[static_cast<std::size_t>(j)]++) {
            fail(ErrorKind::BadDimension, "support index " + std::to_string(j) + " repeated");
        }
    }
    if (proper && static_cast<Index>(S.size()) >= size) {
        fail(ErrorKind::BadDimension, "support must be a proper subset");
    }
}

Eigen::MatrixXd submatrix(const DenseMatrix& G, const std::vector<Index>& rows, const std::vector<Index>& cols)
{
    Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) {
            out(static_cast<Index>(a), static_cast<Index>(b)) = G(rows[a], cols[b]);
        }
    }
    return out;
}

/// Inverse of a symmetric block, with the spectrum used for the conditioning check.
Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& block, double* min_eigenvalue = nullptr)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
    if (eig.info() != Eigen::Success) fail(ErrorKind::RankDeficient, "eigendecomposition of the support block failed");
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e10) {
        fail(ErrorKind::RankDeficient, "support block is singular or has condition number above 1e10");
    }
    if (min_eigenvalue) *min_eigenvalue = lo;
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    return llt.solve(Eigen::MatrixXd::Identity(block.rows(), block.cols()));
}

double dense_inf_norm(const Eigen::MatrixXd& M)
{
    if (M.size() == 0) return 0.0;
    return M.cwiseAbs().rowwise().sum().maxCoeff();
}

} // namespace

double irrepresentable_stat(const DenseMatrix& G, const IndexSet& S)
{
    if (G.rows() != G.cols()) fail(ErrorKind::BadDimension, "cross-product matrix must be square");
    require_finite(G, "cross-product matrix");
    check_index_set(G.rows(), S, true);
    const std::vector<Index> rest = complement(G.rows(), S);
    const Eigen::MatrixXd inv = checked_inverse(submatrix(G, S, S));
    return dense_inf_norm(submatrix(G, rest, S) * inv);
}

double gamma_inf(const DenseMatrix& X1, const IndexSet& S)
{
    require_finite(X1, "design");
    check_index_set(X1.cols(), S, true);
    Eigen::MatrixXd XS(X1.rows(), static_cast<Index>(S.size()));
    for (std::size_t k = 0; k < S.size(); ++k) XS.col(static_cast<Index>(k)) = X1.col(S[k]);
    // Only the |S| columns of X1^T X1 that enter the statistic are formed.
    const DenseMatrix cross = X1.transpose() * XS;
    std::vector<Index> all(static_cast<std::size_t>(S.size()));
    for (std::size_t k = 0; k < S.size(); ++k) all[k] = static_cast<Index>(k);
    const Eigen::MatrixXd inv = checked_inverse(submatrix(cross, S, all));
    return dense_inf_norm(submatrix(cross, complement(X1.cols(), S), all) * inv);
}

SelectionDiagnostics theory_constants(const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                                      const Vector& theta_star, const IndexSet& S)
{
    if (theta_star.size() != W.cols() || y.size() != W.rows()) {
        fail(ErrorKind::BadDimension, "design, response and coefficient shapes disagree");
    }
    check_index_set(W.cols(), S, false);
    const Index n = W.rows();
    const Vector z = W * theta_star;
    const Vector weights = hessian_weights(family, z);
    const DenseMatrix H = W.transpose() * weights.asDiagonal() * W / static_cast<double>(n);
    const Vector g = W.transpose() * gradient_residuals(family, y, z) / static_cast<double>(n);

    SelectionDiagnostics out;
    out.support_size = static_cast<Index>(S.size());
    double lo = 0.0;
    const Eigen::MatrixXd inv = checked_inverse(submatrix(H, S, S), &lo);
    out.hinv_inf = dense_inf_norm(inv);
    out.hinv_2 = 1.0 / lo;
    out.kappa_inf = 1.0 / (2.0 * out.hinv_inf);
    out.kappa_2 = 1.0 / (2.0 * out.hinv_2);

    const std::vector<Index> rest = complement(W.cols(), S);
    out.irrepresentable = rest.empty() ? 0.0 : dense_inf_norm(submatrix(H, rest, S) * inv);
    out.tau = 1.0 - out.irrepresentable;
    out.gamma_inf = rest.empty() ? 0.0 : gamma_inf(W, S);

    out.epsilon = g.cwiseAbs().maxCoeff();
    for (const Index j : S) out.epsilon_support = std::max(out.epsilon_support, std::abs(g[j]));

    const double M0 = 2.0 * W.cwiseAbs().maxCoeff();
    out.smoothness_M = M0 * M0 * M0 * family.third_derivative_bound() *
                       std::pow(static_cast<double>(S.size()), 1.5);
    return out;
}

Theorem1Audit theorem1_audit(const PenalizedFit& fit, const Vector& theta_star, const IndexSet& S,
                             const SelectionDiagnostics& constants, double lower_constant)
{
    const Vector theta = fit.coefficients();
    if (theta.size() != theta_star.size()) fail(ErrorKind::BadDimension, "fit and truth lengths differ");
    check_index_set(theta.size(), S, false);

    Theorem1Audit audit;
    audit.lambda = fit.lambda;
    const double tau = constants.tau;
    const double root_s = std::sqrt(static_cast<double>(S.size()));
    if (tau > 0.0 && constants.kappa_inf > 0.0 && constants.kappa_2 > 0.0) {
        audit.window_lower = lower_constant / tau * constants.epsilon;
        audit.window_upper = constants.smoothness_M > 0.0
                                 ? constants.kappa_2 / (4.0 * root_s) * constants.kappa_inf * tau /
                                       (3.0 * constants.smoothness_M)
                                 : std::numeric_limits<double>::infinity();
        audit.window_ok = audit.window_lower < audit.lambda && audit.lambda < audit.window_upper;
    }

    std::vector<char> in_support(static_cast<std::size_t>(theta.size()), 0);
    for (const Index j : S) in_support[static_cast<std::size_t>(j)] = 1;
    audit.support_ok = true;
    for (Index j = 0; j < theta.size(); ++j) {
        if (theta[j] != 0.0 && !in_support[static_cast<std::size_t>(j)]) audit.support_ok = false;
    }

    audit.observed_linf_error = (theta - theta_star).cwiseAbs().maxCoeff();
    if (constants.kappa_inf > 0.0) {
        audit.linf_bound = 3.0 / (5.0 * constants.kappa_inf) * (constants.epsilon_support + audit.lambda);
        audit.linf_ok = audit.observed_linf_error <= audit.linf_bound;
    }

    audit.sign_ok = true;
    for (Index j = 0; j < fit.beta.size(); ++j) {
        const double truth = theta_star[1 + j];
        const double est = fit.beta[j];
        if ((truth > 0.0) != (est > 0.0) || (truth < 0.0) != (est < 0.0)) audit.sign_ok = false;
    }
    return audit;
}

Theorem1Audit theorem1_audit(const FarmSelectResult& result, const Vector& theta_star, const IndexSet& S,
                             const SelectionDiagnostics& constants, double lower_constant)
{
    return theorem1_audit(result.fit, theta_star, S, constants, lower_constant);
}

SelectionDiagnostics with_audit(SelectionDiagnostics constants, const Theorem1Audit& audit)
{
    constants.theorem1_support_ok = audit.support_ok;
    constants.theorem1_linf_bound = audit.linf_bound;
    constants.observed_linf_error = audit.observed_linf_error;
    return constants;
}

} // namespace farmselect
