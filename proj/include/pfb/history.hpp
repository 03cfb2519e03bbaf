#pragma once

#include "pfb/clock.hpp"
#include "pfb/persona.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pfb {

inline constexpr std::size_t kWordLimit = 200;
inline constexpr std::size_t kDefaultPreviewSentences = 3;

struct FeedbackResult {
    std::string text;
    std::size_t word_count = 0;
    bool over_limit = false;
    Millis latency{0};
    bool condensed = false;

    friend bool operator==(const FeedbackResult&, const FeedbackResult&) = default;
};

// Derives word_count and over_limit from the text.
FeedbackResult make_result(std::string text, Millis latency, bool condensed);

// Offsets are code point indices into the document's canonical text;
// selected_text is a copy taken at request time.
struct SelectionContext {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string selected_text;

    friend bool operator==(const SelectionContext&, const SelectionContext&) = default;
};

struct FeedbackCard {
    std::string id;
    std::string document_id;
    std::string persona_name;
    PersonaSnapshot persona;
    SelectionContext context;
    FeedbackResult feedback;
    Timestamp created_at;

    friend bool operator==(const FeedbackCard&, const FeedbackCard&) = default;
};

// True when `a` sorts before `b` in a history: newer first, then id descending.
bool shown_before(const FeedbackCard& a, const FeedbackCard& b);

class History {
public:
    History() = default;
    explicit History(std::string document_id) : document_id_(std::move(document_id)) {}

    const std::string& document_id() const { return document_id_; }
    const std::vector<FeedbackCard>& cards() const { return cards_; }
    std::size_t size() const { return cards_.size(); }
    bool empty() const { return cards_.empty(); }

    // Throws Error(DuplicateCard).
    void append(FeedbackCard card);
    // Throws Error(CardNotFound).
    void remove(std::string_view card_id);
    const FeedbackCard* find(std::string_view card_id) const;

    friend bool operator==(const History&, const History&) = default;

private:
    std::string document_id_;
    std::vector<FeedbackCard> cards_;
};

// First `limit` sentences of the feedback text, or all of it.
std::string preview(std::string_view feedback_text, std::size_t limit = kDefaultPreviewSentences);
inline std::string preview(const FeedbackCard& card, std::size_t limit = kDefaultPreviewSentences) {
    return preview(card.feedback.text, limit);
}

// Context goes stale once the document text at the stored offsets no longer
// equals the stored copy.
bool context_is_stale(const SelectionContext& ctx, std::string_view document_text);

nlohmann::json card_to_json(const FeedbackCard& card);
// Throws Error(MalformedHistory).
FeedbackCard card_from_json(const nlohmann::json& j);

std::string save_history(const History& h);
// Throws Error(MalformedHistory).
History load_history(std::string_view text);

} // namespace pfb
