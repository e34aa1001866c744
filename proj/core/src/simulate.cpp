#include <farmselect/diagnostics.hpp>
#include <farmselect/error.hpp>
#include <farmselect/parallel.hpp>
#include <farmselect/simulate.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace farmselect {
namespace {

constexpr double kNoiseVariance = 0.3;

class Draws
{
public:
    explicit Draws(std::uint64_t seed) : rng_(seed) {}

    double normal() { return normal_(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    DenseMatrix normal_matrix(Index rows, Index cols)
    {
        DenseMatrix M(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) M(i, j) = normal();
        }
        return M;
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

Eigen::Matrix3d cholesky_factor(const Eigen::Matrix3d& S, const char* what)
{
    Eigen::LLT<Eigen::Matrix3d> llt(S);
    if (llt.info() != Eigen::Success || (llt.matrixLLT().diagonal().array() <= 0.0).any()) {
        fail(ErrorKind::NotPositiveDefinite, std::string(what) + " is not positive definite");
    }
    return llt.matrixL();
}

Vector leading_uniform_beta(Draws& draws, Index p, Index s)
{
    Vector beta = Vector::Zero(p);
    for (Index j = 0; j < s; ++j) beta[j] = draws.uniform(2.0, 5.0);
    return beta;
}

IndexSet nonzero_pattern(const Vector& beta)
{
    IndexSet out;
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0) out.push_back(j);
    }
    return out;
}

/// sqrt(rho) z 1^T + sqrt(1 - rho) E.
DenseMatrix equicorrelated_rows(Draws& draws, Index n, Index p, double rho)
{
    Vector z(n);
    for (Index t = 0; t < n; ++t) z[t] = draws.normal();
    DenseMatrix X = std::sqrt(1.0 - rho) * draws.normal_matrix(n, p);
    X.colwise() += std::sqrt(rho) * z;
    return X;
}

/// f_t = Phi f_{t-1} + L eta_t from f_0 = 0; burn_in steps are generated and discarded.
void var1_factors(Draws& draws, const Eigen::Matrix3d& Phi, const Eigen::Matrix3d& L, Index n, Index burn_in,
                  DenseMatrix& factors, DenseMatrix& innovations)
{
    factors.resize(n, 3);
    innovations.resize(n, 3);
    Eigen::Vector3d f = Eigen::Vector3d::Zero();
    for (Index t = 0; t < burn_in + n; ++t) {
        const Eigen::Vector3d e(draws.normal(), draws.normal(), draws.normal());
        const Eigen::Vector3d eta = L * e;
        f = Phi * f + eta;
        if (t >= burn_in) {
            factors.row(t - burn_in) = f.transpose();
            innovations.row(t - burn_in) = eta.transpose();
        }
    }
}

void check_sizes(Index n, Index p, Index s)
{
    if (n < 2 || p < 1) fail(ErrorKind::BadDimension, "need n >= 2 and p >= 1");
    if (s < 1 || s > p) {
        fail(ErrorKind::BadDimension, "support size " + std::to_string(s) + " outside [1, " + std::to_string(p) + "]");
    }
}

double logistic_mean(double z)
{
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

} // namespace

CalibratedParams CalibratedParams::sp500()
{
    CalibratedParams out;
    out.sigma_B = Eigen::Vector3d(0.5237, 0.2884, 0.2372).asDiagonal();
    out.Phi << 0.1897, -0.0375, -0.0223,
               0.0630, 0.1553, 0.0206,
               -0.0432, 0.0102, 0.4343;
    out.sigma_eta << 0.9621, -0.0056, 0.0182,
                     -0.0056, 0.9715, -0.0078,
                     0.0182, -0.0078, 0.8094;
    out.sigma_u2 = 0.0146;
    return out;
}

void CalibratedParams::validate() const
{
    if (!sigma_B.allFinite() || !Phi.allFinite() || !sigma_eta.allFinite() || !std::isfinite(sigma_u2)) {
        fail(ErrorKind::BadDimension, "calibrated parameters must be finite");
    }
    cholesky_factor(sigma_B, "sigma_B");
    cholesky_factor(sigma_eta, "sigma_eta");
    if (!(sigma_u2 >= 0.0)) fail(ErrorKind::BadDimension, "sigma_u2 must be non-negative");
    const double radius = spectral_radius(Phi);
    if (!(radius < 1.0)) {
        fail(ErrorKind::NonStationary, "VAR(1) coefficient has spectral radius " + std::to_string(radius));
    }
}

double spectral_radius(const Eigen::MatrixXd& M)
{
    if (M.rows() != M.cols()) fail(ErrorKind::BadDimension, "spectral radius needs a square matrix");
    Eigen::EigenSolver<Eigen::MatrixXd> eig(M, false);
    if (eig.info() != Eigen::Success) fail(ErrorKind::NoConvergence, "eigenvalue iteration failed");
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

SimulatedData gen_equicorrelated(Index n, Index p, double rho, Index s, std::uint64_t seed)
{
    check_sizes(n, p, s);
    if (!(rho >= 0.0 && rho < 1.0)) fail(ErrorKind::BadDimension, "rho must lie in [0, 1)");
    Draws draws(seed);
    SimulatedData out;
    out.beta_star = leading_uniform_beta(draws, p, s);
    out.support = nonzero_pattern(out.beta_star);
    out.X = equicorrelated_rows(draws, n, p, rho);
    out.y = out.X * out.beta_star;
    const double sd = std::sqrt(kNoiseVariance);
    for (Index t = 0; t < n; ++t) out.y[t] += sd * draws.normal();
    return out;
}

SimulatedData gen_calibrated_linear(Index n, Index p, const CalibratedParams& params, Index s, std::uint64_t seed,
                                    Index burn_in)
{
    check_sizes(n, p, s);
    if (burn_in < 0) fail(ErrorKind::BadDimension, "burn-in must be non-negative");
    params.validate();
    const Eigen::Matrix3d LB = cholesky_factor(params.sigma_B, "sigma_B");
    const Eigen::Matrix3d Leta = cholesky_factor(params.sigma_eta, "sigma_eta");

    Draws draws(seed);
    SimulatedData out;
    out.beta_star = leading_uniform_beta(draws, p, s);
    out.support = nonzero_pattern(out.beta_star);

    out.loadings = draws.normal_matrix(p, 3) * LB.transpose();
    var1_factors(draws, params.Phi, Leta, n, burn_in, out.factors, out.innovations);
    out.idiosyncratic = std::sqrt(params.sigma_u2) * draws.normal_matrix(n, p);
    out.X = out.factors * out.loadings.transpose() + out.idiosyncratic;

    out.y = out.X * out.beta_star;
    const double sd = std::sqrt(kNoiseVariance);
    double eps = 0.0;
    for (Index t = 0; t < n; ++t) {
        eps = 0.5 * eps + sd * draws.normal();
        out.y[t] += eps;
    }
    return out;
}

SimulatedData gen_logistic_design(LogisticDesign kind, Index n, Index p, std::uint64_t seed)
{
    check_sizes(n, p, 3);
    Draws draws(seed);
    SimulatedData out;
    out.beta_star = Vector::Zero(p);
    out.beta_star.head(3) << 6.0, 5.0, 4.0;
    out.support = {0, 1, 2};

    switch (kind) {
    case LogisticDesign::Factor3: {
        Eigen::Matrix3d Phi;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) Phi(i, j) = i == j ? 0.5 : std::pow(0.3, std::abs(i - j));
        }
        out.loadings = draws.normal_matrix(p, 3);
        var1_factors(draws, Phi, Eigen::Matrix3d::Identity(), n, 0, out.factors, out.innovations);
        out.idiosyncratic = draws.normal_matrix(n, p);
        out.X = out.factors * out.loadings.transpose() + out.idiosyncratic;
        break;
    }
    case LogisticDesign::EqualCorr08:
        out.X = equicorrelated_rows(draws, n, p, 0.8);
        break;
    case LogisticDesign::Independent:
        out.X = draws.normal_matrix(n, p);
        break;
    }

    const Vector z = out.X * out.beta_star;
    out.y.resize(n);
    for (Index t = 0; t < n; ++t) out.y[t] = draws.uniform(0.0, 1.0) < logistic_mean(z[t]) ? 1.0 : 0.0;
    return out;
}

SelectionScore score_selection(const IndexSet& selected, const Vector& beta_hat, const Vector& beta_star)
{
    SelectionScore out;
    const IndexSet truth = nonzero_pattern(beta_star);
    IndexSet chosen = selected;
    std::sort(chosen.begin(), chosen.end());
    out.size = static_cast<Index>(chosen.size());
    out.contains = std::includes(chosen.begin(), chosen.end(), truth.begin(), truth.end());
    out.exact = out.contains && chosen.size() == truth.size();
    out.l2_error = beta_hat.size() == beta_star.size() ? (beta_hat - beta_star).norm()
                                                        : std::numeric_limits<double>::quiet_NaN();
    return out;
}

std::string_view to_string(DesignKind kind) noexcept
{
    switch (kind) {
    case DesignKind::Equicorrelated: return "equicorr";
    case DesignKind::CalibratedLinear: return "calibrated-linear";
    case DesignKind::LogisticFactor: return "logistic-factor";
    case DesignKind::LogisticEqualCorr: return "logistic-equal";
    case DesignKind::LogisticIndependent: return "logistic-indep";
    }
    return "unknown";
}

DesignKind parse_design(std::string_view name)
{
    for (const DesignKind kind : {DesignKind::Equicorrelated, DesignKind::CalibratedLinear, DesignKind::LogisticFactor,
                                  DesignKind::LogisticEqualCorr, DesignKind::LogisticIndependent}) {
        if (name == to_string(kind)) return kind;
    }
    fail(ErrorKind::DataError, "unknown design '" + std::string(name) + "'");
}

std::string_view to_string(MethodKind kind) noexcept
{
    return kind == MethodKind::FarmSelect ? "farmselect" : "lasso";
}

MethodKind parse_method(std::string_view name)
{
    if (name == "farmselect") return MethodKind::FarmSelect;
    if (name == "lasso") return MethodKind::Lasso;
    fail(ErrorKind::DataError, "unknown method '" + std::string(name) + "'");
}

bool is_logistic(DesignKind kind) noexcept
{
    return kind == DesignKind::LogisticFactor || kind == DesignKind::LogisticEqualCorr ||
           kind == DesignKind::LogisticIndependent;
}

SimulatedData generate(const DesignSpec& design, std::uint64_t seed)
{
    switch (design.kind) {
    case DesignKind::Equicorrelated: return gen_equicorrelated(design.n, design.p, design.rho, design.s, seed);
    case DesignKind::CalibratedLinear:
        return gen_calibrated_linear(design.n, design.p, design.params, design.s, seed, design.burn_in);
    case DesignKind::LogisticFactor: return gen_logistic_design(LogisticDesign::Factor3, design.n, design.p, seed);
    case DesignKind::LogisticEqualCorr:
        return gen_logistic_design(LogisticDesign::EqualCorr08, design.n, design.p, seed);
    case DesignKind::LogisticIndependent:
        return gen_logistic_design(LogisticDesign::Independent, design.n, design.p, seed);
    }
    fail(ErrorKind::BadDimension, "unknown design");
}

ReplicationRecord run_replication(const DesignSpec& design, const MethodSpec& method, Index rep, std::uint64_t seed,
                                  bool record_gamma_inf)
{
    ReplicationRecord record;
    record.rep = rep;
    record.seed = seed;
    try {
        const SimulatedData data = generate(design, seed);
        FarmSelectOptions options = method.options;
        options.seed = seed;
        if (method.kind == MethodKind::Lasso) options.num_factors = 0;
        const GlmFamily family = is_logistic(design.kind) ? GlmFamily::logistic() : GlmFamily::linear();
        const FarmSelectResult result = farm_select(data.X, data.y, family, options);

        record.selected = result.selected;
        record.score = score_selection(result.selected, result.fit.beta, data.beta_star);
        record.num_factors = result.K_used;
        record.lambda = result.lambda_chosen;
        for (const auto& fit : result.path.fits) {
            const bool false_hit = std::any_of(fit.active_set.begin(), fit.active_set.end(),
                                               [&](Index j) { return data.beta_star[j] == 0.0; });
            if (false_hit) {
                record.first_false_discovery = static_cast<Index>(fit.active_set.size());
                break;
            }
        }
        if (record_gamma_inf) {
            DenseMatrix X1(data.X.rows(), data.X.cols() + 1);
            X1.col(0).setOnes();
            X1.rightCols(data.X.cols()) = data.X;
            IndexSet S{0};
            for (const Index j : data.support) S.push_back(j + 1);
            record.gamma_inf = gamma_inf(X1, S);
        }
        record.ok = true;
    } catch (const std::exception& e) {
        record.ok = false;
        record.error = e.what();
    }
    return record;
}

SimulationReport summarize(const DesignSpec& design, const MethodSpec& method, std::uint64_t base_seed,
                           std::vector<ReplicationRecord> records)
{
    SimulationReport report;
    report.design = design;
    report.method = method;
    report.base_seed = base_seed;
    report.n_reps = static_cast<Index>(records.size());

    double exact = 0.0, contains = 0.0, size = 0.0, l2 = 0.0, ffd = 0.0;
    Index ok = 0, ffd_count = 0;
    for (const auto& r : records) {
        if (!r.ok) {
            ++report.failures;
            continue;
        }
        ++ok;
        exact += r.score.exact ? 1.0 : 0.0;
        contains += r.score.contains ? 1.0 : 0.0;
        size += static_cast<double>(r.score.size);
        l2 += r.score.l2_error;
        if (r.first_false_discovery >= 0) {
            ffd += static_cast<double>(r.first_false_discovery);
            ++ffd_count;
        }
    }
    if (ok > 0) {
        const double m = static_cast<double>(ok);
        report.selection_consistency_rate = exact / m;
        report.sure_screening_rate = contains / m;
        report.avg_model_size = size / m;
        report.mean_l2_error = l2 / m;
    }
    report.mean_first_false_discovery =
        ffd_count > 0 ? ffd / static_cast<double>(ffd_count) : std::numeric_limits<double>::quiet_NaN();
    report.records = std::move(records);
    return report;
}

SimulationReport run_replications(const DesignSpec& design, const MethodSpec& method, Index n_reps,
                                  std::uint64_t base_seed, Index threads, bool record_gamma_inf)
{
    if (n_reps < 1) fail(ErrorKind::BadDimension, "need at least one replication");
    std::vector<ReplicationRecord> records(static_cast<std::size_t>(n_reps));
    parallel_for(n_reps, threads, [&](Index r) {
        records[static_cast<std::size_t>(r)] =
            run_replication(design, method, r, base_seed + static_cast<std::uint64_t>(r), record_gamma_inf);
    });
    return summarize(design, method, base_seed, std::move(records));
}

} // namespace farmselect
