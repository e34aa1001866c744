#include "oracles.hpp"

#include <farmselect/error.hpp>
#include <farmselect/factor.hpp>
#include <farmselect/simulate.hpp>

#include <gtest/gtest.h>

#include <Eigen/QR>

#include <cmath>

using namespace farmselect;

namespace {

DenseMatrix centered(DenseMatrix X)
{
    X.rowwise() -= X.colwise().mean();
    return X;
}

void expect_decomposition_identities(const DenseMatrix& X, const FactorDecomposition& d)
{
    const DenseMatrix Xc = d.centered ? centered(X) : X;
    const Index n = X.rows();
    const Index K = d.num_factors;
    DenseMatrix recon = d.idiosyncratic;
    if (K > 0) recon += d.factors * d.loadings.transpose();
    EXPECT_LE((recon - Xc).cwiseAbs().maxCoeff(), 1e-10);
    if (K == 0) return;
    const DenseMatrix FtF = d.factors.transpose() * d.factors / static_cast<double>(n);
    EXPECT_LE((FtF - DenseMatrix::Identity(K, K)).cwiseAbs().maxCoeff(), 1e-8);
    const double scale = Xc.cwiseAbs().maxCoeff();
    EXPECT_LE((d.factors.transpose() * d.idiosyncratic).cwiseAbs().maxCoeff(), 1e-8 * scale);
    const DenseMatrix BtB = d.loadings.transpose() * d.loadings;
    const double off = (BtB - DenseMatrix(BtB.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    EXPECT_LE(off, 1e-6 * BtB.diagonal().cwiseAbs().maxCoeff());
}

} // namespace

TEST(EstimateFactors, ZeroFactorsLeavesCenteredData)
{
    const DenseMatrix X = oracle::gaussian_matrix(15, 6, 3);
    const FactorDecomposition raw = estimate_factors(X, 0, false);
    EXPECT_EQ(raw.num_factors, 0);
    EXPECT_EQ(raw.factors.cols(), 0);
    EXPECT_EQ(raw.loadings.cols(), 0);
    EXPECT_EQ(raw.idiosyncratic, X);
    const FactorDecomposition c = estimate_factors(X, 0, true);
    EXPECT_LE((c.idiosyncratic - centered(X)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EstimateFactors, RankOneRecovery)
{
    const Index n = 50, p = 10;
    Vector f = oracle::gaussian_matrix(n, 1, 5).col(0);
    f *= std::sqrt(static_cast<double>(n)) / f.norm();
    const Vector b = oracle::gaussian_matrix(p, 1, 6).col(0);
    const DenseMatrix X = f * b.transpose();
    const FactorDecomposition d = estimate_factors(X, 1, false);
    EXPECT_LE(d.idiosyncratic.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((d.factors * d.loadings.transpose() - X).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EstimateFactors, IdentitiesAcrossShapes)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 15; ++trial) {
        const Index n = 5 + static_cast<Index>(rng() % 40);
        const Index p = 3 + static_cast<Index>(rng() % 40);
        const Index K = static_cast<Index>(rng() % static_cast<std::uint64_t>(std::min(n, p) - 1 + 1));
        const DenseMatrix X = oracle::gaussian_matrix(n, p, rng());
        const bool center = trial % 2 == 0;
        if (K > std::min(n, p) - 1) continue;
        expect_decomposition_identities(X, estimate_factors(X, K, center));
    }
}

TEST(EstimateFactors, SubspaceAngleShrinksWithDimension)
{
    double previous = 90.0;
    for (const auto& [n, p] : {std::pair<Index, Index>{100, 50}, {200, 100}, {400, 300}}) {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const SimulatedData data = gen_calibrated_linear(n, p, CalibratedParams::sp500(), 10, 500 + seed);
            const FactorDecomposition d = estimate_factors(data.X, 3, true);
            worst = std::max(worst, oracle::max_principal_angle_deg(d.factors, centered(data.factors)));
        }
        if (n == 200) EXPECT_LT(worst, 15.0);
        EXPECT_LT(worst, previous + 1.0);
        previous = worst;
    }
}

TEST(EstimateFactors, Errors)
{
    const DenseMatrix X = oracle::gaussian_matrix(5, 4, 1);
    try {
        estimate_factors(X, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BadDimension);
    }
    try {
        estimate_factors(DenseMatrix::Constant(5, 4, 2.0), 1, false);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
    }
}

TEST(SelectNumFactors, ForcedSpectrum)
{
    // Rows of a diagonal X give X X^T = diag(squares).
    const Vector spectrum = (Vector(5) << 100, 50, 2, 1.9, 1.8).finished();
    DenseMatrix X = DenseMatrix::Zero(5, 5);
    for (Index i = 0; i < 5; ++i) X(i, i) = std::sqrt(spectrum[i]);
    EXPECT_EQ(select_num_factors(X, 4), 2);
    EXPECT_EQ(select_num_factors_from_spectrum(spectrum, 4), 2);
}

TEST(SelectNumFactors, FlatSpectrumTiesToOne)
{
    EXPECT_EQ(select_num_factors(DenseMatrix::Identity(8, 8), 5), 1);
}

TEST(SelectNumFactors, FloorsZeroEigenvalues)
{
    const Vector spectrum = (Vector(4) << 10, 5, 0, 0).finished();
    EXPECT_EQ(select_num_factors_from_spectrum(spectrum, 3), 2);
}

TEST(SelectNumFactors, CalibratedDesignRecoversThree)
{
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const SimulatedData data = gen_calibrated_linear(200, 100, CalibratedParams::sp500(), 10, 9000 + seed);
        DenseMatrix Xc = centered(data.X);
        if (select_num_factors(Xc, 8) == 3) ++hits;
    }
    EXPECT_GE(hits, 90);
}

TEST(SelectNumFactors, Errors)
{
    EXPECT_THROW(select_num_factors(DenseMatrix::Identity(4, 4), 0), Error);
    EXPECT_THROW(select_num_factors(DenseMatrix::Identity(4, 4), 4), Error);
}

TEST(Annihilator, EmptyFactorsIsIdentity)
{
    const DenseMatrix M = oracle::gaussian_matrix(7, 3, 2);
    EXPECT_EQ(annihilator_apply(DenseMatrix(7, 0), M), M);
}

TEST(Annihilator, KillsOwnSpan)
{
    const DenseMatrix F = oracle::gaussian_matrix(30, 2, 8);
    EXPECT_LE(annihilator_apply(F, F).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Annihilator, MatchesExplicitProjector)
{
    const DenseMatrix F = oracle::gaussian_matrix(30, 2, 9);
    const DenseMatrix M = oracle::gaussian_matrix(30, 3, 10);
    const DenseMatrix P = F * oracle::gauss_jordan_inverse(F.transpose() * F) * F.transpose();
    const DenseMatrix expected = (DenseMatrix::Identity(30, 30) - P) * M;
    const DenseMatrix R = annihilator_apply(F, M);
    EXPECT_LE((R - expected).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((F.transpose() * R).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((annihilator_apply(F, R) - R).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Annihilator, RotationInvariant)
{
    const DenseMatrix F = oracle::gaussian_matrix(25, 3, 12);
    const DenseMatrix M = oracle::gaussian_matrix(25, 4, 13);
    const DenseMatrix Q = Eigen::HouseholderQR<DenseMatrix>(oracle::gaussian_matrix(3, 3, 14)).householderQ();
    EXPECT_LE((annihilator_apply(F * Q, M) - annihilator_apply(F, M)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Annihilator, RankDeficientFactors)
{
    DenseMatrix F(10, 2);
    F.col(0) = oracle::gaussian_matrix(10, 1, 1).col(0);
    F.col(1) = 2.0 * F.col(0);
    try {
        annihilator_apply(F, DenseMatrix::Ones(10, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
    }
}

TEST(ProjectNewRows, ReproducesTrainingFactors)
{
    const SimulatedData data = gen_calibrated_linear(80, 60, CalibratedParams::sp500(), 5, 3);
    const FactorDecomposition d = estimate_factors(data.X, 3, true);
    DenseMatrix F, U;
    project_new_rows(d, data.X, F, U);
    EXPECT_LE((F - d.factors).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((U - d.idiosyncratic).cwiseAbs().maxCoeff(), 1e-8);
}
