#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlsel {

/// Machine-parsable failure classes. The CLI maps each to an exit status.
enum class ErrorCode {
    InvalidArgument,
    IoNotFound,
    IoFormat,
    DataInvalid,
    Config,
    DegenerateSupport,
    EmptyCell,
    NonFinite,
    NotConverged,
    Separation,
    GradientCheck,
    RankDeficient,
    StudyFailed,
};

[[nodiscard]] constexpr std::string_view code_name(ErrorCode c) noexcept
{
    switch (c) {
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::IoNotFound: return "E_IO_NOT_FOUND";
    case ErrorCode::IoFormat: return "E_IO_FORMAT";
    case ErrorCode::DataInvalid: return "E_DATA_INVALID";
    case ErrorCode::Config: return "E_CONFIG";
    case ErrorCode::DegenerateSupport: return "E_DEGENERATE_SUPPORT";
    case ErrorCode::EmptyCell: return "E_EMPTY_CELL";
    case ErrorCode::NonFinite: return "E_NON_FINITE";
    case ErrorCode::NotConverged: return "E_NOT_CONVERGED";
    case ErrorCode::Separation: return "E_SEPARATION";
    case ErrorCode::GradientCheck: return "E_GRADIENT_CHECK";
    case ErrorCode::RankDeficient: return "E_RANK_DEFICIENT";
    case ErrorCode::StudyFailed: return "E_STUDY_FAILED";
    }
    return "E_UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mlsel
