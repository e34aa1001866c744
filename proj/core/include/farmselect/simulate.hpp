#pragma once

#include <farmselect/linalg.hpp>
#include <farmselect/pipeline.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace farmselect {

/// Factor-model parameters for the calibrated linear design; defaults are the S&P 500 calibration.
struct CalibratedParams
{
    Eigen::Matrix3d sigma_B;
    Eigen::Matrix3d Phi;
    Eigen::Matrix3d sigma_eta;
    double sigma_u2 = 0.0;

    static CalibratedParams sp500();

    /// Throws NotPositiveDefinite for sigma_eta or sigma_B, NonStationary when rho(Phi) >= 1.
    void validate() const;
};

/// Spectral radius of a square matrix.
double spectral_radius(const Eigen::MatrixXd& M);

/// A generated data set together with the quantities used to generate it.
struct SimulatedData
{
    DenseMatrix X;
    Vector y;
    Vector beta_star;
    IndexSet support;
    /// Empty for designs without a factor structure.
    DenseMatrix factors;
    DenseMatrix loadings;
    DenseMatrix idiosyncratic;
    /// VAR(1) innovations, row t is eta_{t+1}.
    DenseMatrix innovations;
};

/**
 * Rows i.i.d. N(0, Sigma_rho) built as sqrt(rho) z 1^T + sqrt(1 - rho) E;
 * beta* has s leading Uniform(2, 5) entries; y = X beta* + N(0, 0.3) noise.
 * Throws BadDimension unless 1 <= s <= p and 0 <= rho < 1.
 */
SimulatedData gen_equicorrelated(Index n, Index p, double rho, Index s, std::uint64_t seed);

/**
 * Calibrated factor design: loadings rows N(0, sigma_B), factors from the VAR(1)
 * f_t = Phi f_{t-1} + eta_t with f_0 = 0 (plus optional discarded burn-in steps),
 * idiosyncratic entries N(0, sigma_u2), y = X beta* + eps with
 * eps_t = 0.5 eps_{t-1} + N(0, 0.3) and eps_0 = 0.
 */
SimulatedData gen_calibrated_linear(Index n, Index p, const CalibratedParams& params, Index s, std::uint64_t seed,
                                    Index burn_in = 0);

enum class LogisticDesign { Factor3, EqualCorr08, Independent };

/// beta* = (6, 5, 4, 0, ...), P(y = 1 | x) = 1 / (1 + exp(-x^T beta*)), no intercept in the truth.
SimulatedData gen_logistic_design(LogisticDesign kind, Index n, Index p, std::uint64_t seed);

struct SelectionScore
{
    bool exact = false;
    bool contains = false;
    Index size = 0;
    double l2_error = 0.0;
};

/// Compares a selected set with the nonzero pattern of beta_star.
SelectionScore score_selection(const IndexSet& selected, const Vector& beta_hat, const Vector& beta_star);

enum class DesignKind { Equicorrelated, CalibratedLinear, LogisticFactor, LogisticEqualCorr, LogisticIndependent };

std::string_view to_string(DesignKind kind) noexcept;
/// Accepts equicorr, calibrated-linear, logistic-factor, logistic-equal, logistic-indep.
DesignKind parse_design(std::string_view name);

struct DesignSpec
{
    DesignKind kind = DesignKind::Equicorrelated;
    Index n = 100;
    Index p = 200;
    double rho = 0.0;
    /// Number of nonzero coefficients (linear designs; logistic designs always use 3).
    Index s = 10;
    CalibratedParams params = CalibratedParams::sp500();
    Index burn_in = 0;
};

bool is_logistic(DesignKind kind) noexcept;

SimulatedData generate(const DesignSpec& design, std::uint64_t seed);

enum class MethodKind { FarmSelect, Lasso };

std::string_view to_string(MethodKind kind) noexcept;
MethodKind parse_method(std::string_view name);

struct MethodSpec
{
    MethodKind kind = MethodKind::FarmSelect;
    /// num_factors is forced to 0 for Lasso; seed is replaced by the replication seed.
    FarmSelectOptions options;
};

struct ReplicationRecord
{
    Index rep = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    IndexSet selected;
    SelectionScore score;
    Index num_factors = 0;
    double lambda = 0.0;
    /// Gamma_inf of (1, X) on the intercept plus the true support, when requested.
    double gamma_inf = 0.0;
    /// Size of the first model on the path that contains a false variable; -1 when none does.
    Index first_false_discovery = -1;
};

struct SimulationReport
{
    DesignSpec design;
    MethodSpec method;
    Index n_reps = 0;
    std::uint64_t base_seed = 0;
    Index failures = 0;
    double selection_consistency_rate = 0.0;
    double sure_screening_rate = 0.0;
    double avg_model_size = 0.0;
    double mean_l2_error = 0.0;
    /// Mean over replications where a false discovery entered the path; NaN when none did.
    double mean_first_false_discovery = 0.0;
    std::vector<ReplicationRecord> records;
};

/// One replication with the given seed; errors are captured in the record.
ReplicationRecord run_replication(const DesignSpec& design, const MethodSpec& method, Index rep,
                                  std::uint64_t seed, bool record_gamma_inf = false);

/**
 * Replication r uses seed base_seed + r for data and cross-validation.
 * Aggregates are summed in replication order, so the report does not depend on
 * `threads` (0 means the FARMSELECT_THREADS default).
 */
SimulationReport run_replications(const DesignSpec& design, const MethodSpec& method, Index n_reps,
                                  std::uint64_t base_seed, Index threads = 0, bool record_gamma_inf = false);

/// Aggregates already computed records (used by run_replications).
SimulationReport summarize(const DesignSpec& design, const MethodSpec& method, std::uint64_t base_seed,
                           std::vector<ReplicationRecord> records);

} // namespace farmselect
