#pragma once

#include <stdexcept>
#include <string>

namespace r0fde {

/// Failure categories raised by the library. The CLI maps these onto exit codes.
enum class ErrorCode {
    NonConvergence,
    NotMetzler,
    Singular,
    InvalidArgument,
    DelayExceedsHistory,
    Overflow,
    NotCooperative,
    BracketFailure,
    BlowUp,
    NoConvergence,
    NotStable,
    AssumptionViolated,
    ZeroR0,
    HorizonExceeded,
    Schema,
};

inline const char* to_string(ErrorCode c)
{
    switch (c) {
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NotMetzler: return "NotMetzler";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DelayExceedsHistory: return "DelayExceedsHistory";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::NotCooperative: return "NotCooperative";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotStable: return "NotStable";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::ZeroR0: return "ZeroR0";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::Schema: return "Schema";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Which next-generation assumption a model failed.
enum class Assumption { A1_Positive, A2_Cooperative, A2_Stable };

inline const char* to_string(Assumption a)
{
    switch (a) {
    case Assumption::A1_Positive: return "A1";
    case Assumption::A2_Cooperative: return "A2-cooperative";
    case Assumption::A2_Stable: return "A2-stability";
    }
    return "?";
}

class AssumptionViolated : public Error {
public:
    AssumptionViolated(Assumption which, const std::string& detail)
        : Error(ErrorCode::AssumptionViolated, std::string("(") + to_string(which) + ") " + detail),
          which_(which)
    {
    }

    Assumption which() const noexcept { return which_; }

private:
    Assumption which_;
};

} // namespace r0fde
