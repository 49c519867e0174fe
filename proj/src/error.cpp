#include "surveyps/error.hpp"

namespace surveyps {

std::string_view code_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Config: return "E_CONFIG";
    case ErrorCode::Separation: return "E_SEPARATION";
    case ErrorCode::NonConvergence: return "E_NONCONVERGENCE";
    case ErrorCode::DegenerateDesign: return "E_DEGENERATE";
    case ErrorCode::EmptyArm: return "E_EMPTY_ARM";
    case ErrorCode::SingularA: return "E_SINGULAR_A";
    case ErrorCode::ZeroVariance: return "E_ZERO_VARIANCE";
    case ErrorCode::MissingSampleLevelFit: return "E_MISSING_FIT";
    case ErrorCode::InvalidInput: return "E_INVALID";
    }
    return "E_UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message, std::string context)
    : std::runtime_error(message), code_(code), context_(std::move(context)) {}

Error Error::with_context(std::string_view outer) const {
    std::string ctx(outer);
    if (!context_.empty()) {
        ctx += '/';
        ctx += context_;
    }
    return Error(code_, what(), std::move(ctx));
}

} // namespace surveyps
