#include <farmselect/error.hpp>
#include <farmselect/linalg.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace farmselect {

void require_finite(const DenseMatrix& M, std::string_view what)
{
    if (!M.allFinite()) {
        fail(ErrorKind::BadDimension, std::string(what) + " contains non-finite entries");
    }
}

void require_finite(const Vector& v, std::string_view what)
{
    if (!v.allFinite()) {
        fail(ErrorKind::BadDimension, std::string(what) + " contains non-finite entries");
    }
}

void apply_sign_convention(DenseMatrix& vectors)
{
    for (Index j = 0; j < vectors.cols(); ++j) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double a = std::abs(vectors(i, j));
            // near-ties within rounding go to the lower index
            if (a > best * (1.0 + 1e-12) + 1e-300) {
                best = a;
                arg = i;
            }
        }
        if (vectors.rows() > 0 && vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
    }
}

EigenPairs sym_eigen_topk(const DenseMatrix& S, Index k)
{
    const Index m = S.rows();
    if (S.cols() != m || m == 0) {
        fail(ErrorKind::BadDimension, "eigendecomposition needs a non-empty square matrix");
    }
    if (k < 1 || k > m) {
        fail(ErrorKind::BadDimension,
             "requested " + std::to_string(k) + " eigenpairs of a " + std::to_string(m) + "x" +
                 std::to_string(m) + " matrix");
    }
    require_finite(S, "symmetric matrix");

    const double scale = S.cwiseAbs().maxCoeff();
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        fail(ErrorKind::NonSymmetric,
             "max |S - S^T| = " + std::to_string(asym) + " exceeds tolerance");
    }

    const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        fail(ErrorKind::NoConvergence, "symmetric QR iteration did not converge");
    }

    // Eigen returns ascending order.
    EigenPairs out;
    out.values.resize(k);
    out.vectors.resize(m, k);
    for (Index j = 0; j < k; ++j) {
        out.values[j] = solver.eigenvalues()[m - 1 - j];
        out.vectors.col(j) = solver.eigenvectors().col(m - 1 - j);
    }
    apply_sign_convention(out.vectors);
    return out;
}

EigenPairs sym_eigen(const DenseMatrix& S)
{
    return sym_eigen_topk(S, S.rows());
}

DenseMatrix solve_spd(const DenseMatrix& A, const DenseMatrix& B)
{
    const Index dim = A.rows();
    if (A.cols() != dim || dim == 0) {
        fail(ErrorKind::BadDimension, "solve_spd needs a non-empty square matrix");
    }
    if (B.rows() != dim) {
        fail(ErrorKind::BadDimension,
             "right-hand side has " + std::to_string(B.rows()) + " rows, expected " +
                 std::to_string(dim));
    }

    const Eigen::MatrixXd a = A;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    const double floor = 1e-12 * a.trace() / static_cast<double>(dim);
    if (llt.info() != Eigen::Success || !(floor > 0.0)) {
        fail(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
    }
    for (Index i = 0; i < dim; ++i) {
        const double lii = llt.matrixLLT()(i, i);
        if (!(lii * lii > floor)) {
            fail(ErrorKind::NotPositiveDefinite,
                 "Cholesky pivot " + std::to_string(i) + " below 1e-12 * trace / dim");
        }
    }
    DenseMatrix x = llt.solve(Eigen::MatrixXd(B));
    return x;
}

DenseMatrix take_rows(const DenseMatrix& M, const std::vector<Index>& rows)
{
    DenseMatrix out(static_cast<Index>(rows.size()), M.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = M.row(rows[i]);
    return out;
}

Vector take_rows(const Vector& v, const std::vector<Index>& rows)
{
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
    return out;
}

double inf_norm(const DenseMatrix& M)
{
    if (M.size() == 0) return 0.0;
    return M.cwiseAbs().rowwise().sum().maxCoeff();
}

} // namespace farmselect
