#pragma once

#include <farmselect/linalg.hpp>

#include <string_view>

namespace farmselect {

enum class Family { Linear, Logistic };

/**
 * Exponential-family cumulant b with its first two derivatives, for a
 * canonical link and unit dispersion:
 *   Linear:   b(z) = z^2 / 2
 *   Logistic: b(z) = log(1 + e^z), evaluated without overflow for large |z|.
 */
struct GlmFamily
{
    Family kind = Family::Linear;

    static constexpr GlmFamily linear() { return GlmFamily{Family::Linear}; }
    static constexpr GlmFamily logistic() { return GlmFamily{Family::Logistic}; }

    double cumulant(double z) const noexcept;
    double mean(double z) const noexcept;
    double variance(double z) const noexcept;
    /// Upper bound on |b'''|: 0 for linear, 1/(6 sqrt 3) for logistic.
    double third_derivative_bound() const noexcept;
    /// Upper bound on b'': 1 for linear, 1/4 for logistic.
    double variance_bound() const noexcept;

    std::string_view name() const noexcept;
};

bool operator==(const GlmFamily& a, const GlmFamily& b) noexcept;

/// Parses "linear" / "logistic"; throws DataError otherwise.
GlmFamily parse_family(std::string_view name);

/// Throws BadLabel when a logistic response has entries outside {0, 1}.
void validate_response(const GlmFamily& family, const Vector& y);

/**
 * (1/n) sum_t [-y_t z_t + b(z_t)].
 * Throws LengthMismatch or BadLabel.
 */
double neg_loglik(const GlmFamily& family, const Vector& y, const Vector& z);

/**
 * r_t = b'(z_t) - y_t, so that the gradient of neg_loglik(y, W theta) is W^T r / n.
 * Throws LengthMismatch or BadLabel.
 */
Vector gradient_residuals(const GlmFamily& family, const Vector& y, const Vector& z);

/// b''(z_t) for every entry.
Vector hessian_weights(const GlmFamily& family, const Vector& z);

} // namespace farmselect
