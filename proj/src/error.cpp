#include "strudel/error.hpp"

namespace strudel {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::InvalidSpeaker: return "InvalidSpeaker";
        case ErrorCode::MissingEntry: return "MissingEntry";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::GoldIndexOutOfRange: return "GoldIndexOutOfRange";
        case ErrorCode::QuestionPresenceMismatch: return "QuestionPresenceMismatch";
        case ErrorCode::EmptyQuery: return "EmptyQuery";
        case ErrorCode::EmptyText: return "EmptyText";
        case ErrorCode::FrozenRequired: return "FrozenRequired";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::DialogueMismatch: return "DialogueMismatch";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::ConfigMismatch: return "ConfigMismatch";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace strudel
