#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sipt {

enum class ErrorKind {
    InvalidDimension,
    DegenerateMixture,
    AllIsolated,
    Saturation,
    DimensionMismatch,
    TrivialGraph,
    MultiLabel,
    ResolutionTooSmall,
    InfeasibleColoring,
    InsufficientDensity,
    Spacing,
    DisconnectedGraph,
    DegenerateK,
    InsufficientSamples,
    SequenceTooLong,
    UnknownToken,
    NonFiniteLoss,
    EmptyMask,
    MissingPair,
    NoAdmissibleAnchor,
    Divergence,
    EmptyTrain,
    SingleClass,
    NoEdges,
    InvalidArgument,
    Io,
    Format,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidDimension: return "invalid-dimension";
        case ErrorKind::DegenerateMixture: return "degenerate-mixture";
        case ErrorKind::AllIsolated: return "all-isolated";
        case ErrorKind::Saturation: return "saturation";
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::TrivialGraph: return "trivial-graph";
        case ErrorKind::MultiLabel: return "multi-label";
        case ErrorKind::ResolutionTooSmall: return "resolution-too-small";
        case ErrorKind::InfeasibleColoring: return "infeasible-coloring";
        case ErrorKind::InsufficientDensity: return "insufficient-density";
        case ErrorKind::Spacing: return "spacing";
        case ErrorKind::DisconnectedGraph: return "disconnected-graph";
        case ErrorKind::DegenerateK: return "degenerate-k";
        case ErrorKind::InsufficientSamples: return "insufficient-samples";
        case ErrorKind::SequenceTooLong: return "sequence-too-long";
        case ErrorKind::UnknownToken: return "unknown-token";
        case ErrorKind::NonFiniteLoss: return "non-finite-loss";
        case ErrorKind::EmptyMask: return "empty-mask";
        case ErrorKind::MissingPair: return "missing-pair";
        case ErrorKind::NoAdmissibleAnchor: return "no-admissible-anchor";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::EmptyTrain: return "empty-train";
        case ErrorKind::SingleClass: return "single-class";
        case ErrorKind::NoEdges: return "no-edges";
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::Io: return "io";
        case ErrorKind::Format: return "format";
    }
    return "unknown";
}

/// Every library failure is raised as this exception; `kind()` identifies the error class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        fail(kind, message);
    }
}

}  // namespace sipt
