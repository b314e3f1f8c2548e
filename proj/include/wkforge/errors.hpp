#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace wkforge {

enum class ErrorCode {
    InvalidInput,
    ProviderUnavailable,
    MalformedResponse,
    UnknownNode,
    ParseError,
    UnsupportedModality,
    DisconnectedTerminals,
    InvalidAnalyzerOutput,
    CannotConnect,
    NoPath,
    InvalidPath,
    EmptyRouting,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

protected:
    struct Verbatim {};
    Error(Verbatim, ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

private:
    ErrorCode code_;
};

// Raised by the generation pipeline; wraps the underlying error with the
// name of the stage that failed.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& inner)
        : Error(Verbatim{}, inner.code(), "stage '" + stage + "': " + inner.what()),
          stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace wkforge
