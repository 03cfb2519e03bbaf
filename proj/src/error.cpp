#include "pfb/error.hpp"

namespace pfb {

std::string_view to_wire(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyAttribute: return "EMPTY_ATTRIBUTE";
    case ErrorCode::IndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::MalformedPersona: return "MALFORMED_PERSONA";
    case ErrorCode::EmptySelection: return "EMPTY_SELECTION";
    case ErrorCode::ProviderError: return "PROVIDER_ERROR";
    case ErrorCode::PersonaNotFound: return "PERSONA_NOT_FOUND";
    case ErrorCode::DuplicateCard: return "DUPLICATE_CARD";
    case ErrorCode::CardNotFound: return "CARD_NOT_FOUND";
    case ErrorCode::MalformedHistory: return "MALFORMED_HISTORY";
    case ErrorCode::NonMonotonicTimestamp: return "NON_MONOTONIC_TIMESTAMP";
    case ErrorCode::UnresolvablePersona: return "UNRESOLVABLE_PERSONA";
    case ErrorCode::EmptyText: return "EMPTY_TEXT";
    case ErrorCode::MalformedRequest: return "MALFORMED_REQUEST";
    case ErrorCode::StaleSelection: return "STALE_SELECTION";
    case ErrorCode::DocumentNotFound: return "DOCUMENT_NOT_FOUND";
    case ErrorCode::Unauthorized: return "UNAUTHORIZED";
    case ErrorCode::MalformedConfig: return "MALFORMED_CONFIG";
    case ErrorCode::Io: return "INTERNAL";
    }
    return "INTERNAL";
}

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::PersonaNotFound:
    case ErrorCode::CardNotFound:
    case ErrorCode::DocumentNotFound:
        return 404;
    case ErrorCode::ProviderError: return 502;
    case ErrorCode::StaleSelection:
    case ErrorCode::DuplicateCard:
    case ErrorCode::NonMonotonicTimestamp:
        return 409;
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::Io: return 500;
    default: return 400;
    }
}

} // namespace pfb
