#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smalltime {

enum class ErrorKind {
    InvalidParameter,
    DomainError,
    NonIntegrable,
    NotFiniteVariation,
    AsymmetricOneStable,
    UnsupportedStrike,
    PriceOutOfRange,
    UnsupportedExact,
    StepCountTooSmall,
    HeavyTailNeedsRobust,
    DegenerateFit,
    ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::NotFiniteVariation: return "NotFiniteVariation";
    case ErrorKind::AsymmetricOneStable: return "AsymmetricOneStable";
    case ErrorKind::UnsupportedStrike: return "UnsupportedStrike";
    case ErrorKind::PriceOutOfRange: return "PriceOutOfRange";
    case ErrorKind::UnsupportedExact: return "UnsupportedExact";
    case ErrorKind::StepCountTooSmall: return "StepCountTooSmall";
    case ErrorKind::HeavyTailNeedsRobust: return "HeavyTailNeedsRobust";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok) fail(kind, what);
}

}  // namespace detail
}  // namespace smalltime
