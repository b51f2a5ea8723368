#include "storyecho/errors.hpp"

namespace storyecho {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::ParseError: return "ParseError";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::RangeError: return "RangeError";
    case Errc::PreconditionFailed: return "PreconditionFailed";
    case Errc::GenerationFailed: return "GenerationFailed";
    case Errc::ProviderError: return "ProviderError";
    case Errc::FoodMismatch: return "FoodMismatch";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::ChildNotFound: return "ChildNotFound";
    case Errc::NotFound: return "NotFound";
    case Errc::SessionAlreadyActive: return "SessionAlreadyActive";
    case Errc::UnknownEventKey: return "UnknownEventKey";
    case Errc::DuplicateChoice: return "DuplicateChoice";
    case Errc::ReferentialViolation: return "ReferentialViolation";
    case Errc::StorageError: return "StorageError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::BindError: return "BindError";
    case Errc::Unauthorized: return "Unauthorized";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail)
{
}

void fail(Errc code, const std::string& detail)
{
    throw Error(code, detail);
}

} // namespace storyecho
