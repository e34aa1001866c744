#include <farmselect/cli/rolling.hpp>
#include <farmselect/error.hpp>
#include <farmselect/parallel.hpp>

#include <limits>
#include <string>

namespace farmselect::cli {

double out_of_sample_r2(const std::vector<RollingPoint>& points)
{
    double residual = 0.0;
    double naive = 0.0;
    for (const auto& p : points) {
        residual += (p.y - p.prediction) * (p.y - p.prediction);
        naive += (p.y - p.benchmark) * (p.y - p.benchmark);
    }
    if (naive == 0.0) return residual == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - residual / naive;
}

RollingForecastReport rolling_forecast(const DenseMatrix& X, const Vector& y, const RollingOptions& options)
{
    const Index n = X.rows();
    const Index w = options.window;
    if (y.size() != n) fail(ErrorKind::LengthMismatch, "response and covariates have different lengths");
    if (w < 2) fail(ErrorKind::BadDimension, "window must be at least 2");
    if (n < w + 1) {
        fail(ErrorKind::DataError, "series has " + std::to_string(n) + " rows; window " + std::to_string(w) +
                                       " needs at least " + std::to_string(w + 1));
    }

    FarmSelectOptions fit_options = options.options;
    if (options.method == MethodKind::Lasso) fit_options.num_factors = 0;
    const GlmFamily family = GlmFamily::linear();

    RollingForecastReport report;
    report.window = w;
    report.predictions.resize(static_cast<std::size_t>(n - w));
    parallel_for(n - w, options.threads, [&](Index k) {
        const Index t = w + k;
        const DenseMatrix X_train = X.middleRows(t - w, w);
        const Vector y_train = y.segment(t - w, w);
        const FarmSelectResult fit = farm_select(X_train, y_train, family, fit_options);
        RollingPoint& point = report.predictions[static_cast<std::size_t>(k)];
        point.t = t;
        point.y = y[t];
        point.prediction = predict_linear(fit, X.middleRows(t, 1))[0];
        point.benchmark = y_train.mean();
        point.model_size = static_cast<Index>(fit.selected.size());
    });
    report.r2_oos = out_of_sample_r2(report.predictions);
    return report;
}

} // namespace farmselect::cli
