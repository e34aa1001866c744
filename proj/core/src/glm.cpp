#include <farmselect/error.hpp>
#include <farmselect/glm.hpp>

#include <cmath>
#include <string>

namespace farmselect {

double GlmFamily::cumulant(double z) const noexcept
{
    if (kind == Family::Linear) return 0.5 * z * z;
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double GlmFamily::mean(double z) const noexcept
{
    if (kind == Family::Linear) return z;
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double GlmFamily::variance(double z) const noexcept
{
    if (kind == Family::Linear) return 1.0;
    // e^{-|z|} / (1 + e^{-|z|})^2 stays positive far past the point where mu rounds to 1.
    const double e = std::exp(-std::abs(z));
    const double d = 1.0 + e;
    return e / (d * d);
}

double GlmFamily::third_derivative_bound() const noexcept
{
    if (kind == Family::Linear) return 0.0;
    return 1.0 / (6.0 * std::sqrt(3.0));
}

double GlmFamily::variance_bound() const noexcept
{
    return kind == Family::Linear ? 1.0 : 0.25;
}

std::string_view GlmFamily::name() const noexcept
{
    return kind == Family::Linear ? "linear" : "logistic";
}

bool operator==(const GlmFamily& a, const GlmFamily& b) noexcept
{
    return a.kind == b.kind;
}

GlmFamily parse_family(std::string_view name)
{
    if (name == "linear") return GlmFamily::linear();
    if (name == "logistic") return GlmFamily::logistic();
    fail(ErrorKind::DataError, "unknown family '" + std::string(name) + "'");
}

void validate_response(const GlmFamily& family, const Vector& y)
{
    if (family.kind != Family::Logistic) return;
    for (Index t = 0; t < y.size(); ++t) {
        if (y[t] != 0.0 && y[t] != 1.0) {
            fail(ErrorKind::BadLabel,
                 "logistic response at row " + std::to_string(t) + " is " + std::to_string(y[t]));
        }
    }
}

namespace {

void check_lengths(const Vector& y, const Vector& z)
{
    if (y.size() != z.size()) {
        fail(ErrorKind::LengthMismatch, "response has length " + std::to_string(y.size()) +
                                            ", linear predictor " + std::to_string(z.size()));
    }
    if (y.size() == 0) fail(ErrorKind::LengthMismatch, "empty response");
}

} // namespace

double neg_loglik(const GlmFamily& family, const Vector& y, const Vector& z)
{
    check_lengths(y, z);
    validate_response(family, y);
    double total = 0.0;
    for (Index t = 0; t < y.size(); ++t) total += -y[t] * z[t] + family.cumulant(z[t]);
    return total / static_cast<double>(y.size());
}

Vector gradient_residuals(const GlmFamily& family, const Vector& y, const Vector& z)
{
    check_lengths(y, z);
    validate_response(family, y);
    Vector r(y.size());
    for (Index t = 0; t < y.size(); ++t) r[t] = family.mean(z[t]) - y[t];
    return r;
}

Vector hessian_weights(const GlmFamily& family, const Vector& z)
{
    Vector w(z.size());
    for (Index t = 0; t < z.size(); ++t) w[t] = family.variance(z[t]);
    return w;
}

} // namespace farmselect
