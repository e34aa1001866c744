#include <farmselect/error.hpp>

namespace farmselect {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
        case ErrorKind::NonSymmetric: return "NonSymmetric";
        case ErrorKind::BadDimension: return "BadDimension";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::BadLabel: return "BadLabel";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::NonFiniteObjective: return "NonFiniteObjective";
        case ErrorKind::NonStationary: return "NonStationary";
        case ErrorKind::DataError: return "DataError";
    }
    return "Unknown";
}

} // namespace farmselect
