#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace m2vscope {

enum class ErrorKind {
    EndOfStream,
    MalformedHeader,
    MalformedStream,
    UnsupportedStream,
    InvalidCode,
    EscapeLevelZero,
    CoefficientOverflow,
    MissingReference,
    GeometryMismatch,
    BrokenGop,
    EmptyStream,
    NoCandidates,
    SpecError,
    Io,
};

inline constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EndOfStream: return "EndOfStream";
        case ErrorKind::MalformedHeader: return "MalformedHeader";
        case ErrorKind::MalformedStream: return "MalformedStream";
        case ErrorKind::UnsupportedStream: return "UnsupportedStream";
        case ErrorKind::InvalidCode: return "InvalidCode";
        case ErrorKind::EscapeLevelZero: return "EscapeLevelZero";
        case ErrorKind::CoefficientOverflow: return "CoefficientOverflow";
        case ErrorKind::MissingReference: return "MissingReference";
        case ErrorKind::GeometryMismatch: return "GeometryMismatch";
        case ErrorKind::BrokenGop: return "BrokenGop";
        case ErrorKind::EmptyStream: return "EmptyStream";
        case ErrorKind::NoCandidates: return "NoCandidates";
        case ErrorKind::SpecError: return "SpecError";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a kind so callers can map it
/// to an exit status or decide whether a slice-level recovery is possible.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Errors confined to slice data; tolerant decoding conceals them and
    /// resumes at the next slice start code.
    bool slice_recoverable() const noexcept {
        switch (kind_) {
            case ErrorKind::EndOfStream:
            case ErrorKind::InvalidCode:
            case ErrorKind::EscapeLevelZero:
            case ErrorKind::CoefficientOverflow:
            case ErrorKind::MissingReference:
            case ErrorKind::MalformedStream:
                return true;
            default:
                return false;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace m2vscope
