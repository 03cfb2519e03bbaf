#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfb {

enum class ErrorCode {
    EmptyAttribute,
    IndexOutOfRange,
    MalformedPersona,
    EmptySelection,
    ProviderError,
    PersonaNotFound,
    DuplicateCard,
    CardNotFound,
    MalformedHistory,
    NonMonotonicTimestamp,
    UnresolvablePersona,
    EmptyText,
    MalformedRequest,
    StaleSelection,
    DocumentNotFound,
    Unauthorized,
    MalformedConfig,
    Io,
};

// Stable wire name, e.g. EMPTY_SELECTION.
std::string_view to_wire(ErrorCode code);
int http_status(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace pfb
