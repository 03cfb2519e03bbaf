#include "pfb/history.hpp"

#include "pfb/error.hpp"
#include "pfb/text.hpp"

#include <algorithm>

namespace pfb {

using nlohmann::json;

FeedbackResult make_result(std::string text, Millis latency, bool condensed) {
    FeedbackResult r;
    r.word_count = text::count_words(text);
    r.over_limit = r.word_count > kWordLimit;
    r.text = std::move(text);
    r.latency = latency;
    r.condensed = condensed;
    return r;
}

bool shown_before(const FeedbackCard& a, const FeedbackCard& b) {
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.id > b.id;
}

void History::append(FeedbackCard card) {
    if (find(card.id))
        throw Error(ErrorCode::DuplicateCard, "card " + card.id + " already in history");
    auto pos = std::upper_bound(cards_.begin(), cards_.end(), card, shown_before);
    cards_.insert(pos, std::move(card));
}

void History::remove(std::string_view card_id) {
    auto it = std::find_if(cards_.begin(), cards_.end(),
                           [&](const FeedbackCard& c) { return c.id == card_id; });
    if (it == cards_.end())
        throw Error(ErrorCode::CardNotFound, "card " + std::string(card_id) + " not found");
    cards_.erase(it);
}

const FeedbackCard* History::find(std::string_view card_id) const {
    for (const auto& c : cards_)
        if (c.id == card_id) return &c;
    return nullptr;
}

std::string preview(std::string_view feedback_text, std::size_t limit) {
    const auto sentences = text::split_sentences(feedback_text);
    if (limit == 0 || sentences.empty()) return {};
    if (sentences.size() <= limit) return std::string(text::trim(feedback_text));
    return std::string(feedback_text.substr(sentences.front().begin,
                                            sentences[limit - 1].end - sentences.front().begin));
}

bool context_is_stale(const SelectionContext& ctx, std::string_view document_text) {
    const auto current = text::codepoint_substr(document_text, ctx.start, ctx.end);
    return !current || *current != ctx.selected_text;
}

json card_to_json(const FeedbackCard& card) {
    return {{"id", card.id},
            {"document_id", card.document_id},
            {"persona_name", card.persona_name},
            {"persona", snapshot_to_json(card.persona)},
            {"context",
             {{"start", card.context.start},
              {"end", card.context.end},
              {"selected_text", card.context.selected_text}}},
            {"feedback",
             {{"text", card.feedback.text},
              {"word_count", card.feedback.word_count},
              {"over_limit", card.feedback.over_limit},
              {"latency_ms", card.feedback.latency.count()},
              {"condensed", card.feedback.condensed}}},
            {"created_at", format_rfc3339(card.created_at)}};
}

FeedbackCard card_from_json(const json& j) {
    try {
        const json& ctx = j.at("context");
        const json& fb = j.at("feedback");
        FeedbackCard card{j.at("id").get<std::string>(),
                          j.value("document_id", std::string{}),
                          j.at("persona_name").get<std::string>(),
                          snapshot_from_json(j.at("persona")),
                          {ctx.at("start").get<std::size_t>(), ctx.at("end").get<std::size_t>(),
                           ctx.at("selected_text").get<std::string>()},
                          {fb.at("text").get<std::string>(), fb.at("word_count").get<std::size_t>(),
                           fb.at("over_limit").get<bool>(), Millis{fb.at("latency_ms").get<std::int64_t>()},
                           fb.at("condensed").get<bool>()},
                          parse_rfc3339(j.at("created_at").get<std::string>())};
        if (card.id.empty()) throw Error(ErrorCode::MalformedHistory, "card with empty id");
        if (card.context.start >= card.context.end)
            throw Error(ErrorCode::MalformedHistory, "card " + card.id + " has an empty selection");
        if (card.feedback.word_count != text::count_words(card.feedback.text) ||
            card.feedback.over_limit != (card.feedback.word_count > kWordLimit))
            throw Error(ErrorCode::MalformedHistory, "card " + card.id + " has inconsistent word counts");
        return card;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedHistory) throw;
        throw Error(ErrorCode::MalformedHistory, std::string("malformed card: ") + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::MalformedHistory, std::string("malformed card: ") + e.what());
    }
}

std::string save_history(const History& h) {
    json cards = json::array();
    for (const auto& c : h.cards()) cards.push_back(card_to_json(c));
    return json{{"document_id", h.document_id()}, {"cards", std::move(cards)}}.dump(2);
}

History load_history(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedHistory,
                    "malformed history at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("cards") || !j["cards"].is_array() ||
        !j.contains("document_id") || !j["document_id"].is_string())
        throw Error(ErrorCode::MalformedHistory, "history must be {document_id, cards: [...]}");
    History h(j["document_id"].get<std::string>());
    for (const auto& c : j["cards"]) {
        try {
            h.append(card_from_json(c));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DuplicateCard) throw Error(ErrorCode::MalformedHistory, e.what());
            throw;
        }
    }
    return h;
}

} // namespace pfb
