#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace strudel {

enum class ErrorCode {
    MalformedRecord,
    DuplicateId,
    InvalidSpeaker,
    MissingEntry,
    EmptyInput,
    GoldIndexOutOfRange,
    QuestionPresenceMismatch,
    EmptyQuery,
    EmptyText,
    FrozenRequired,
    DimMismatch,
    DialogueMismatch,
    ZeroVector,
    IndexOutOfRange,
    EmptyBatch,
    ConfigInvalid,
    ConfigMismatch,
    Io,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace strudel
