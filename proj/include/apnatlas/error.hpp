#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace apn {

enum class ErrorCode {
    RejectedModulus,
    DivisionByZero,
    InvalidSubfield,
    ZeroElement,
    ZeroPolynomial,
    InvalidArgument,
    ExponentOutOfRange,
    SingularMap,
    NotQuadratic,
    NotApn,
    DegenerateImageSet,
    DimensionCapExceeded,
    ConditionViolated,
    StrategyInfeasible,
    NotApnInput,
    PreconditionViolated,
    MismatchedDimension,
    CacheCorrupt,
    UnsupportedFormat,
    ParseError,
};

inline constexpr std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::RejectedModulus: return "RejectedModulus";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::InvalidSubfield: return "InvalidSubfield";
    case ErrorCode::ZeroElement: return "ZeroElement";
    case ErrorCode::ZeroPolynomial: return "ZeroPolynomial";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ExponentOutOfRange: return "ExponentOutOfRange";
    case ErrorCode::SingularMap: return "SingularMap";
    case ErrorCode::NotQuadratic: return "NotQuadratic";
    case ErrorCode::NotApn: return "NotApn";
    case ErrorCode::DegenerateImageSet: return "DegenerateImageSet";
    case ErrorCode::DimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorCode::ConditionViolated: return "ConditionViolated";
    case ErrorCode::StrategyInfeasible: return "StrategyInfeasible";
    case ErrorCode::NotApnInput: return "NotApnInput";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::MismatchedDimension: return "MismatchedDimension";
    case ErrorCode::CacheCorrupt: return "CacheCorrupt";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Domain error carrying a stable code; what() is "<Name>: <detail>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_name(code)) + (detail.empty() ? "" : ": " + detail)),
          code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] std::string_view name() const noexcept { return error_name(code_); }

private:
    ErrorCode code_;
};

} // namespace apn
