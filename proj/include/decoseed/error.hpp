// error.hpp - Error kinds raised by the decoseed library

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace decoseed {

enum class ErrorKind {
    non_hermitian_input,
    degenerate_clustering,
    dimension_mismatch,
    invalid_state,
    assumption_violated,
    unnormalized_measure,
    nyquist_violation,
    weight_sum_invalid,
    overlapping_windows,
    precondition,
    ir_divergent_without_override,
    grid_mismatch,
    non_monotone_cutoffs,
    negative_frequency,
    truncation_too_small,
    non_unitary_input,
    dimension_cap,
    parse_error,
    validation_error,
    io_error,
};

constexpr std::string_view to_string(ErrorKind k) noexcept {
    switch (k) {
        case ErrorKind::non_hermitian_input: return "NonHermitianInput";
        case ErrorKind::degenerate_clustering: return "DegenerateClustering";
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::invalid_state: return "InvalidState";
        case ErrorKind::assumption_violated: return "AssumptionViolated";
        case ErrorKind::unnormalized_measure: return "UnnormalizedMeasure";
        case ErrorKind::nyquist_violation: return "NyquistViolation";
        case ErrorKind::weight_sum_invalid: return "WeightSumInvalid";
        case ErrorKind::overlapping_windows: return "OverlappingWindows";
        case ErrorKind::precondition: return "PreconditionFailed";
        case ErrorKind::ir_divergent_without_override: return "IRDivergentWithoutOverride";
        case ErrorKind::grid_mismatch: return "GridMismatch";
        case ErrorKind::non_monotone_cutoffs: return "NonMonotoneCutoffs";
        case ErrorKind::negative_frequency: return "NegativeFrequency";
        case ErrorKind::truncation_too_small: return "TruncationTooSmall";
        case ErrorKind::non_unitary_input: return "NonUnitaryInput";
        case ErrorKind::dimension_cap: return "DimensionCap";
        case ErrorKind::parse_error: return "ParseError";
        case ErrorKind::validation_error: return "ValidationError";
        case ErrorKind::io_error: return "IOError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": " + message),
          line_(line), message_(message) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::string message_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> errors)
        : Error(ErrorKind::validation_error, join(errors)), errors_(std::move(errors)) {}

    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    static std::string join(const std::vector<std::string>& errors) {
        std::string out;
        for (const auto& e : errors) {
            if (!out.empty()) out += "; ";
            out += e;
        }
        return out;
    }

    std::vector<std::string> errors_;
};

} // namespace decoseed
