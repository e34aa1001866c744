#pragma once

#include <farmselect/glm.hpp>
#include <farmselect/linalg.hpp>
#include <farmselect/pipeline.hpp>
#include <farmselect/solver.hpp>

namespace farmselect {

/**
 * ||G_{S^c S} G_SS^{-1}||_inf for a symmetric cross-product matrix G.
 * Throws BadDimension unless S is a nonempty proper subset of valid, distinct
 * indices, and RankDeficient when G_SS has condition number above 1e10.
 */
double irrepresentable_stat(const DenseMatrix& G, const IndexSet& S);

/// irrepresentable_stat(X1^T X1, S); S indexes the columns of X1, intercept column included.
double gamma_inf(const DenseMatrix& X1, const IndexSet& S);

/**
 * Restricted-curvature and score constants at the true coefficients.
 *
 * H = W^T diag(b''(W theta*)) W / n. hinv_inf and hinv_2 are the induced
 * infinity and spectral norms of H_SS^{-1}; kappa_inf = 1 / (2 hinv_inf) and
 * kappa_2 = 1 / (2 hinv_2) are the largest constants satisfying the
 * restricted strong convexity bounds. irrepresentable = ||H_{S2 S} H_SS^{-1}||_inf
 * over the complement S2 and tau = 1 - irrepresentable.
 */
struct SelectionDiagnostics
{
    double gamma_inf = 0.0;
    double irrepresentable = 0.0;
    double tau = 0.0;
    double hinv_inf = 0.0;
    double hinv_2 = 0.0;
    double kappa_inf = 0.0;
    double kappa_2 = 0.0;
    /// ||grad L_n(theta*)||_inf.
    double epsilon = 0.0;
    /// ||grad_S L_n(theta*)||_inf.
    double epsilon_support = 0.0;
    /// M0^3 M3 |S|^{3/2} with M0 = 2 ||W||_max and M3 the family's bound on |b'''|.
    double smoothness_M = 0.0;
    Index support_size = 0;

    bool theorem1_support_ok = false;
    double theorem1_linf_bound = 0.0;
    double observed_linf_error = 0.0;
};

/// S indexes the augmented coefficients and should contain the intercept and factor positions.
SelectionDiagnostics theory_constants(const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                                      const Vector& theta_star, const IndexSet& S);

struct Theorem1Audit
{
    double lambda = 0.0;
    double window_lower = 0.0;
    double window_upper = 0.0;
    bool window_ok = false;
    /// supp(theta_hat) is contained in S.
    bool support_ok = false;
    double linf_bound = 0.0;
    double observed_linf_error = 0.0;
    bool linf_ok = false;
    /// sign(beta_hat) == sign(beta*) over the covariate block.
    bool sign_ok = false;

    /// The error-bound claims hold whenever the window does.
    bool consistent() const noexcept { return !window_ok || (support_ok && linf_ok); }
};

/**
 * Evaluates the lambda window (lower_constant / tau) eps < lambda <
 * kappa_2 / (4 sqrt|S|) * kappa_inf tau / (3 M), with the smoothness radius
 * taken as infinite (the second term is dropped when M = 0), and the
 * conclusions supp(theta_hat) in S and
 * ||theta_hat - theta*||_inf <= 3 / (5 kappa_inf) (eps_S + lambda).
 */
Theorem1Audit theorem1_audit(const PenalizedFit& fit, const Vector& theta_star, const IndexSet& S,
                             const SelectionDiagnostics& constants, double lower_constant = 7.0);
Theorem1Audit theorem1_audit(const FarmSelectResult& result, const Vector& theta_star, const IndexSet& S,
                             const SelectionDiagnostics& constants, double lower_constant = 7.0);

/// Copies the audit outcome into the diagnostics record.
SelectionDiagnostics with_audit(SelectionDiagnostics constants, const Theorem1Audit& audit);

} // namespace farmselect
