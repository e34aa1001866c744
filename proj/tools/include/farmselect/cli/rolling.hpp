#pragma once

#include <farmselect/pipeline.hpp>
#include <farmselect/simulate.hpp>

#include <vector>

namespace farmselect::cli {

struct RollingPoint
{
    /// 0-based row of the forecast target.
    Index t = 0;
    double y = 0.0;
    double prediction = 0.0;
    /// Mean of the response over the training window (the naive forecast).
    double benchmark = 0.0;
    Index model_size = 0;

    bool operator==(const RollingPoint&) const = default;
};

struct RollingForecastReport
{
    Index window = 0;
    Index horizon = 1;
    std::vector<RollingPoint> predictions;
    double r2_oos = 0.0;

    bool operator==(const RollingForecastReport&) const = default;
};

struct RollingOptions
{
    Index window = 120;
    MethodKind method = MethodKind::FarmSelect;
    /// Passed to farm_select for every window; num_factors is forced to 0 for Lasso.
    FarmSelectOptions options;
    /// 0 uses default_thread_count().
    Index threads = 0;
};

/// 1 - sum (y - prediction)^2 / sum (y - benchmark)^2 over the points.
double out_of_sample_r2(const std::vector<RollingPoint>& points);

/**
 * One-step-ahead rolling forecasts: for every row t >= window the linear
 * FarmSelect (or LASSO) model is fitted on rows t - window .. t - 1, with its
 * own cross-validation unless a fixed lambda is set, and used to predict y_t.
 * Every window uses the same CV seed. Results do not depend on `threads`.
 *
 * Throws DataError when there are fewer than window + 1 rows, BadDimension
 * when window < 2.
 */
RollingForecastReport rolling_forecast(const DenseMatrix& X, const Vector& y, const RollingOptions& options);

} // namespace farmselect::cli
