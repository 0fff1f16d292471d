#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace fastvol {

/// Input outside the mathematical domain of an operation
/// (non-positive price level, negative time or volatility, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A sensitivity was requested at zero total volatility, where the payoff
/// kink makes the derivative undefined.
class StepFunctionEdge : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class BatchErrorKind {
    ShapeMismatch,
    BadFlag,
    NonFiniteInput,
    OutOfDomain,
    MissingColumn,
};

inline const char* to_string(BatchErrorKind kind) {
    switch (kind) {
    case BatchErrorKind::ShapeMismatch: return "ShapeMismatch";
    case BatchErrorKind::BadFlag: return "BadFlag";
    case BatchErrorKind::NonFiniteInput: return "NonFiniteInput";
    case BatchErrorKind::OutOfDomain: return "OutOfDomain";
    case BatchErrorKind::MissingColumn: return "MissingColumn";
    }
    return "Unknown";
}

/// Raised by the batch front end before any numeric kernel runs.
class BatchError : public std::runtime_error {
public:
    BatchError(BatchErrorKind kind, std::size_t index, std::string detail)
        : std::runtime_error(std::string(to_string(kind)) + " at row " + std::to_string(index) +
                             ": " + detail),
          kind_(kind), index_(index), detail_(std::move(detail)) {}

    BatchErrorKind kind() const noexcept { return kind_; }
    std::size_t index() const noexcept { return index_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    BatchErrorKind kind_;
    std::size_t index_;
    std::string detail_;
};

} // namespace fastvol
