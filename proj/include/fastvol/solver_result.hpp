#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

namespace fastvol {

/// Outcome of an implied-volatility solve. The integral values are stable
/// and form part of the columnar batch interface.
enum class SolverStatus : std::uint8_t {
    Converged = 0,
    FellBackToBisection = 1,
    BelowIntrinsic = 2,
    AboveUpperBound = 3,
    MaxIterations = 4,
};

inline std::string_view to_string(SolverStatus status) {
    switch (status) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::FellBackToBisection: return "bisection";
    case SolverStatus::BelowIntrinsic: return "below_intrinsic";
    case SolverStatus::AboveUpperBound: return "above_upper_bound";
    case SolverStatus::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

/// Inverse of to_string; empty for an unknown name.
inline std::optional<SolverStatus> parse_status(std::string_view name) {
    for (auto status : {SolverStatus::Converged, SolverStatus::FellBackToBisection, SolverStatus::BelowIntrinsic,
                        SolverStatus::AboveUpperBound, SolverStatus::MaxIterations}) {
        if (to_string(status) == name) return status;
    }
    return std::nullopt;
}

/// True for the two statuses that carry a usable volatility.
constexpr bool succeeded(SolverStatus status) noexcept {
    return status == SolverStatus::Converged || status == SolverStatus::FellBackToBisection;
}

struct SolverResult {
    double sigma = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    SolverStatus status = SolverStatus::MaxIterations;
    double residual = std::numeric_limits<double>::quiet_NaN();

    bool ok() const noexcept { return succeeded(status); }

    static SolverResult rejected(SolverStatus status) {
        SolverResult result;
        result.status = status;
        return result;
    }
};

} // namespace fastvol
