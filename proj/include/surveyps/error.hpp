#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace surveyps {

// Stable codes; the string forms are part of the CLI contract.
enum class ErrorCode {
    Parse,
    Config,
    Separation,
    NonConvergence,
    DegenerateDesign,
    EmptyArm,
    SingularA,
    ZeroVariance,
    MissingSampleLevelFit,
    InvalidInput,
};

std::string_view code_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string context = {});

    ErrorCode code() const noexcept { return code_; }
    // Where the failure happened, e.g. "propensity.sp" or "outcome.treated".
    const std::string& context() const noexcept { return context_; }

    // Same error with an outer context prepended ("a" + "b" -> "a/b").
    Error with_context(std::string_view outer) const;

private:
    ErrorCode code_;
    std::string context_;
};

} // namespace surveyps
