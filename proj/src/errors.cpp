#include "wkforge/errors.hpp"

namespace wkforge {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnsupportedModality: return "UnsupportedModality";
        case ErrorCode::DisconnectedTerminals: return "DisconnectedTerminals";
        case ErrorCode::InvalidAnalyzerOutput: return "InvalidAnalyzerOutput";
        case ErrorCode::CannotConnect: return "CannotConnect";
        case ErrorCode::NoPath: return "NoPath";
        case ErrorCode::InvalidPath: return "InvalidPath";
        case ErrorCode::EmptyRouting: return "EmptyRouting";
    }
    return "Unknown";
}

} // namespace wkforge
