#include <farmselect/error.hpp>
#include <farmselect/linalg.hpp>
#include <farmselect/simulate.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace farmselect;

namespace {

double mean_abs_offdiag_correlation(const DenseMatrix& X, bool absolute)
{
    DenseMatrix Xc = X;
    Xc.rowwise() -= X.colwise().mean();
    const Vector sd = (Xc.colwise().squaredNorm()).cwiseSqrt().transpose();
    const DenseMatrix C = (Xc.transpose() * Xc).array() / (sd * sd.transpose()).array();
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < C.rows(); ++i)
        for (Index j = i + 1; j < C.cols(); ++j) {
            sum += absolute ? std::abs(C(i, j)) : C(i, j);
            ++count;
        }
    return sum / static_cast<double>(count);
}

} // namespace

TEST(CalibratedParams, Sp500Values)
{
    const CalibratedParams t = CalibratedParams::sp500();
    EXPECT_EQ(t.sigma_B(0, 0), 0.5237);
    EXPECT_EQ(t.sigma_B(1, 1), 0.2884);
    EXPECT_EQ(t.sigma_B(2, 2), 0.2372);
    EXPECT_EQ(t.sigma_B(0, 1), 0.0);
    Eigen::Matrix3d Phi;
    Phi << 0.1897, -0.0375, -0.0223, 0.0630, 0.1553, 0.0206, -0.0432, 0.0102, 0.4343;
    EXPECT_EQ(t.Phi, Phi);
    Eigen::Matrix3d eta;
    eta << 0.9621, -0.0056, 0.0182, -0.0056, 0.9715, -0.0078, 0.0182, -0.0078, 0.8094;
    EXPECT_EQ(t.sigma_eta, eta);
    EXPECT_EQ(t.sigma_u2, 0.0146);
    EXPECT_NO_THROW(t.validate());
    EXPECT_LT(spectral_radius(t.Phi), 1.0);
}

TEST(CalibratedParams, RejectsExplosiveVar)
{
    CalibratedParams t = CalibratedParams::sp500();
    t.Phi(0, 0) = 1.2;
    try {
        t.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonStationary);
    }
    EXPECT_THROW(gen_calibrated_linear(10, 10, t, 2, 1), Error);
}

TEST(GenEquicorrelated, IndependentColumns)
{
    const SimulatedData d = gen_equicorrelated(200, 40, 0.0, 5, 3);
    EXPECT_LE(mean_abs_offdiag_correlation(d.X, true), 3.0 / std::sqrt(200.0));
}

TEST(GenEquicorrelated, PairwiseCorrelationNearRho)
{
    for (const double rho : {0.3, 0.6, 0.9}) {
        const Index n = 400;
        const SimulatedData d = gen_equicorrelated(n, 30, rho, 5, 11);
        const double se = (1.0 - rho * rho) / std::sqrt(static_cast<double>(n));
        EXPECT_NEAR(mean_abs_offdiag_correlation(d.X, false), rho, 5.0 * se) << rho;
    }
}

TEST(GenEquicorrelated, TruthAndDeterminism)
{
    const SimulatedData a = gen_equicorrelated(50, 30, 0.5, 10, 42);
    const SimulatedData b = gen_equicorrelated(50, 30, 0.5, 10, 42);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.beta_star, b.beta_star);
    for (Index j = 0; j < 10; ++j) {
        EXPECT_GE(a.beta_star[j], 2.0);
        EXPECT_LE(a.beta_star[j], 5.0);
    }
    EXPECT_TRUE(a.beta_star.tail(20).isZero(0.0));
    EXPECT_EQ(a.support.size(), 10U);
    const SimulatedData c = gen_equicorrelated(50, 30, 0.5, 10, 43);
    EXPECT_NE(a.X, c.X);
    EXPECT_THROW(gen_equicorrelated(50, 30, 1.0, 10, 1), Error);
    EXPECT_THROW(gen_equicorrelated(50, 30, 0.5, 31, 1), Error);
}

TEST(GenCalibrated, StationaryFactorVariance)
{
    const CalibratedParams t = CalibratedParams::sp500();
    // Stationary covariance by fixed-point iteration of S = Phi S Phi^T + Sigma_eta.
    Eigen::Matrix3d S = t.sigma_eta;
    for (int i = 0; i < 200; ++i) S = t.Phi * S * t.Phi.transpose() + t.sigma_eta;
    const SimulatedData d = gen_calibrated_linear(5000, 5, t, 2, 17);
    for (Index k = 0; k < 3; ++k) {
        const auto f = d.factors.col(k);
        const double var = (f.array() - f.mean()).square().sum() / 4999.0;
        EXPECT_GE(var, 0.85);
        EXPECT_LE(var, 1.15);
        EXPECT_NEAR(var, S(k, k), 0.1);
    }
}

TEST(GenCalibrated, FirstFactorIsFirstInnovation)
{
    const SimulatedData d = gen_calibrated_linear(30, 20, CalibratedParams::sp500(), 3, 5);
    EXPECT_EQ(d.factors.row(0), d.innovations.row(0));
    const Eigen::RowVector3d next = (CalibratedParams::sp500().Phi * d.factors.row(0).transpose()).transpose();
    EXPECT_LE((d.factors.row(1) - next - d.innovations.row(1)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((d.X - d.factors * d.loadings.transpose() - d.idiosyncratic).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GenCalibrated, Reproducible)
{
    const SimulatedData a = gen_calibrated_linear(40, 30, CalibratedParams::sp500(), 5, 77);
    const SimulatedData b = gen_calibrated_linear(40, 30, CalibratedParams::sp500(), 5, 77);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y, b.y);
}

TEST(GenCalibrated, FactorsArePervasive)
{
    const SimulatedData d = gen_calibrated_linear(10, 200, CalibratedParams::sp500(), 5, 8);
    const DenseMatrix cov = d.loadings * d.loadings.transpose() +
                            CalibratedParams::sp500().sigma_u2 * DenseMatrix::Identity(200, 200);
    const EigenPairs e = sym_eigen_topk(cov, 4);
    EXPECT_GE(e.values[2] / e.values[3], 50.0);
}

TEST(GenLogistic, IndependentDesignCorrelations)
{
    const SimulatedData d = gen_logistic_design(LogisticDesign::Independent, 200, 40, 3);
    EXPECT_LE(mean_abs_offdiag_correlation(d.X, true), 3.0 / std::sqrt(200.0));
}

TEST(GenLogistic, LabelBalanceAndTruth)
{
    for (const auto kind : {LogisticDesign::Factor3, LogisticDesign::EqualCorr08, LogisticDesign::Independent}) {
        const SimulatedData d = gen_logistic_design(kind, 2000, 10, 19);
        EXPECT_GE(d.y.mean(), 0.35);
        EXPECT_LE(d.y.mean(), 0.65);
        for (Index t = 0; t < d.y.size(); ++t) EXPECT_TRUE(d.y[t] == 0.0 || d.y[t] == 1.0);
        EXPECT_EQ(d.beta_star.head(3), (Vector(3) << 6, 5, 4).finished());
        EXPECT_EQ(d.support, (IndexSet{0, 1, 2}));
    }
}

TEST(GenLogistic, FactorDesignVarCoefficients)
{
    const SimulatedData d = gen_logistic_design(LogisticDesign::Factor3, 20, 10, 4);
    Eigen::Matrix3d Phi;
    Phi << 0.5, 0.3, 0.09, 0.3, 0.5, 0.3, 0.09, 0.3, 0.5;
    EXPECT_EQ(d.factors.row(0), d.innovations.row(0));
    for (Index t = 1; t < 20; ++t) {
        const Eigen::RowVector3d f = (Phi * d.factors.row(t - 1).transpose()).transpose() + d.innovations.row(t);
        EXPECT_LE((d.factors.row(t) - f).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(GenLogistic, Reproducible)
{
    const SimulatedData a = gen_logistic_design(LogisticDesign::EqualCorr08, 50, 20, 5);
    const SimulatedData b = gen_logistic_design(LogisticDesign::EqualCorr08, 50, 20, 5);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y, b.y);
}

TEST(ScoreSelection, Cases)
{
    const Vector truth = (Vector(5) << 1, 2, 0, 0, 0).finished();
    const Vector est = (Vector(5) << 1, 2, 0, 0, 0).finished();
    SelectionScore s = score_selection({0, 1}, est, truth);
    EXPECT_TRUE(s.exact);
    EXPECT_TRUE(s.contains);
    EXPECT_EQ(s.size, 2);
    EXPECT_EQ(s.l2_error, 0.0);

    s = score_selection({0, 1, 3}, (Vector(5) << 1, 2, 0, 4, 0).finished(), truth);
    EXPECT_FALSE(s.exact);
    EXPECT_TRUE(s.contains);
    EXPECT_EQ(s.size, 3);
    EXPECT_DOUBLE_EQ(s.l2_error, 4.0);

    s = score_selection({1, 2}, est, truth);
    EXPECT_FALSE(s.exact);
    EXPECT_FALSE(s.contains);
}

TEST(Designs, NamesRoundTrip)
{
    for (const auto kind : {DesignKind::Equicorrelated, DesignKind::CalibratedLinear, DesignKind::LogisticFactor,
                            DesignKind::LogisticEqualCorr, DesignKind::LogisticIndependent}) {
        EXPECT_EQ(parse_design(to_string(kind)), kind);
    }
    EXPECT_EQ(parse_method("lasso"), MethodKind::Lasso);
    EXPECT_EQ(parse_method("farmselect"), MethodKind::FarmSelect);
    EXPECT_THROW(parse_design("nope"), Error);
}

TEST(RunReplications, SingleRepMatchesRecord)
{
    DesignSpec design;
    design.n = 60;
    design.p = 40;
    design.s = 3;
    MethodSpec method;
    method.kind = MethodKind::Lasso;
    method.options.n_lambdas = 20;
    const SimulationReport r = run_replications(design, method, 1, 5, 1);
    ASSERT_EQ(r.records.size(), 1U);
    const ReplicationRecord& rec = r.records[0];
    ASSERT_TRUE(rec.ok);
    EXPECT_EQ(rec.seed, 5U);
    EXPECT_EQ(r.selection_consistency_rate, rec.score.exact ? 1.0 : 0.0);
    EXPECT_EQ(r.sure_screening_rate, rec.score.contains ? 1.0 : 0.0);
    EXPECT_EQ(r.avg_model_size, static_cast<double>(rec.score.size));
    EXPECT_EQ(r.mean_l2_error, rec.score.l2_error);
}

TEST(RunReplications, IndependentOfThreadCount)
{
    DesignSpec design;
    design.kind = DesignKind::CalibratedLinear;
    design.n = 60;
    design.p = 50;
    design.s = 3;
    MethodSpec method;
    method.options.n_lambdas = 15;
    const SimulationReport a = run_replications(design, method, 6, 100, 1, true);
    const SimulationReport b = run_replications(design, method, 6, 100, 4, true);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].selected, b.records[i].selected);
        EXPECT_EQ(a.records[i].lambda, b.records[i].lambda);
        EXPECT_EQ(a.records[i].score.l2_error, b.records[i].score.l2_error);
        EXPECT_EQ(a.records[i].gamma_inf, b.records[i].gamma_inf);
    }
    EXPECT_EQ(a.avg_model_size, b.avg_model_size);
    EXPECT_EQ(a.mean_l2_error, b.mean_l2_error);
    EXPECT_LE(a.selection_consistency_rate, a.sure_screening_rate);
    EXPECT_GE(a.avg_model_size + 1e-12, 3.0 * a.selection_consistency_rate);
}

TEST(RunReplications, FailuresAreCounted)
{
    DesignSpec design;
    design.n = 20;
    design.p = 10;
    design.s = 3;
    MethodSpec method;
    method.options.num_factors = 15;
    const SimulationReport r = run_replications(design, method, 2, 0, 1);
    EXPECT_EQ(r.failures, 2);
    EXPECT_FALSE(r.records[0].ok);
    EXPECT_FALSE(r.records[0].error.empty());
}
