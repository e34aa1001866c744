#pragma once

#include <farmselect/glm.hpp>
#include <farmselect/linalg.hpp>

#include <optional>
#include <vector>

namespace farmselect {

struct ScreenEntry
{
    Index index = 0;
    double score = 0.0;
    /// False when the marginal Newton fit failed; the score is then 0.
    bool converged = true;
};

struct ScreenResult
{
    /// top_m entries, score descending, ties by index.
    std::vector<ScreenEntry> ranked;
    Index num_factors = 0;
    Index failed_fits = 0;
};

struct ScreenOptions
{
    /// Empty selects the number of factors by the eigenvalue-ratio rule.
    std::optional<Index> num_factors;
    std::optional<Index> k_max;
    bool center = true;
    Index max_newton = 100;
    double tol = 1e-10;
};

/**
 * Factor-adjusted marginal screening. For every covariate j an unpenalized GLM
 * of y on (1, F, u_j) is fitted by Newton's method and scored by the absolute
 * coefficient on u_j. Columns with (numerically) zero idiosyncratic variance
 * score 0.
 *
 * Throws BadDimension unless 1 <= top_m <= p - 1.
 */
ScreenResult farm_screen(const DenseMatrix& X, const Vector& y, const GlmFamily& family, Index top_m,
                         const ScreenOptions& options = {});

} // namespace farmselect
