#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace storyecho {

enum class Errc {
    ParseError,
    SchemaViolation,
    InvariantViolation,
    RangeError,
    PreconditionFailed,
    GenerationFailed,
    ProviderError,
    FoodMismatch,
    IllegalTransition,
    ChildNotFound,
    NotFound,
    SessionAlreadyActive,
    UnknownEventKey,
    DuplicateChoice,
    ReferentialViolation,
    StorageError,
    ConfigError,
    BindError,
    Unauthorized,
};

std::string_view to_string(Errc code);

// Every failure surfaced by the library carries one of the codes above; the
// API layer maps them onto HTTP statuses and the CLI onto exit codes.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail);

    Errc code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

[[noreturn]] void fail(Errc code, const std::string& detail);

} // namespace storyecho
