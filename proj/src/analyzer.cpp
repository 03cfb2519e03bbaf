#include "pfb/analyzer.hpp"

#include "pfb/error.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace pfb {

using nlohmann::json;
using text::Span;

std::string_view label_name(MainLabel l) {
    switch (l) {
    case MainLabel::MoreExamples: return "more_examples";
    case MainLabel::TopicContent: return "topic_content";
    case MainLabel::Clarification: return "clarification";
    case MainLabel::MoreDetails: return "more_details";
    case MainLabel::StyleImprovement: return "style_improvement";
    case MainLabel::ConcreteSuggestion: return "concrete_suggestion";
    case MainLabel::PositiveRemark: return "positive_remark";
    }
    return "more_examples";
}

std::optional<MainLabel> label_from_name(std::string_view name) {
    for (MainLabel l : kAllLabels)
        if (label_name(l) == name) return l;
    return std::nullopt;
}

namespace {

// `prefix` followed by a non-letter (or the end).
bool starts_with_word(std::string_view s, std::string_view prefix) {
    if (!text::starts_with_icase(s, prefix)) return false;
    return s.size() == prefix.size() || !std::isalpha(static_cast<unsigned char>(s[prefix.size()]));
}

bool is_opening(std::string_view sentence) {
    return starts_with_word(sentence, "As a") || starts_with_word(sentence, "As an");
}

bool is_summary_start(std::string_view sentence) {
    return starts_with_word(sentence, "Overall") || starts_with_word(sentence, "In summary") ||
           starts_with_word(sentence, "In conclusion");
}

bool is_add_word(std::string_view w) {
    return w == "add" || w == "adds" || w == "added" || w == "adding";
}

bool is_include_word(std::string_view w) {
    return w == "include" || w == "includes" || w == "included" || w == "including";
}

bool any_of_phrases(std::string_view lower, std::initializer_list<std::string_view> phrases) {
    return std::any_of(phrases.begin(), phrases.end(),
                       [&](std::string_view p) { return lower.find(p) != std::string_view::npos; });
}

void label_sentence(std::string_view sentence, MainPartLabels& out) {
    const std::string lower = text::to_lower(sentence);
    const auto words = text::normalized_words(sentence);

    if (any_of_phrases(lower, {"for example, instead of", "could write"}))
        out.insert(MainLabel::ConcreteSuggestion);
    if (lower.find("clarif") != std::string::npos) out.insert(MainLabel::Clarification);
    if (any_of_phrases(lower, {"shorter sentences", "simpler", "easier language", "terminology",
                               "writing style"}))
        out.insert(MainLabel::StyleImprovement);
    if (any_of_phrases(lower, {"i value", "well written", "clear and", "good job", "strong"}))
        out.insert(MainLabel::PositiveRemark);

    bool seen_request = false;  // add/more/include seen earlier in the sentence
    bool seen_add = false;
    bool any_more_or_add = false;
    for (const auto& w : words) {
        if ((w == "example" || w == "examples") && seen_request) out.insert(MainLabel::MoreExamples);
        if ((w == "about" || w == "on") && seen_add) out.insert(MainLabel::TopicContent);
        if (is_add_word(w) || w == "more" || is_include_word(w)) seen_request = true;
        if (is_add_word(w)) seen_add = true;
        if (is_add_word(w) || w == "more") any_more_or_add = true;
    }
    if (lower.find("detail") != std::string::npos && any_more_or_add) out.insert(MainLabel::MoreDetails);
}

} // namespace

FeedbackBlocks segment(std::string_view t) {
    const auto sentences = text::split_sentences(t);
    if (sentences.empty()) throw Error(ErrorCode::EmptyText, "feedback text is empty");
    const std::size_t n = sentences.size();

    FeedbackBlocks blocks;
    std::size_t main_first = 0;
    if (is_opening(sentences[0].of(t))) {
        blocks.opening = sentences[0];
        main_first = 1;
    }

    std::size_t summary_first = n;
    for (std::size_t i = n; i-- > main_first;) {
        if (is_summary_start(sentences[i].of(t))) {
            summary_first = i;
            break;
        }
    }
    if (summary_first < n) blocks.summary = Span{sentences[summary_first].begin, sentences.back().end};

    if (main_first < summary_first) {
        blocks.main = Span{sentences[main_first].begin, sentences[summary_first - 1].end};
    } else {
        const std::size_t at = summary_first < n ? sentences[summary_first].begin : sentences.back().end;
        blocks.main = Span{at, at};
    }
    return blocks;
}

MainPartLabels label_main(std::string_view main_text) {
    MainPartLabels out;
    for (const auto& s : text::split_sentences(main_text)) label_sentence(s.of(main_text), out);
    return out;
}

CardAnalysis analyze_text(std::string card_id, std::string_view feedback_text) {
    CardAnalysis a;
    a.card_id = std::move(card_id);
    a.blocks = segment(feedback_text);
    a.labels = label_main(a.blocks.main.of(feedback_text));
    a.word_count = text::count_words(feedback_text);
    a.over_limit = a.word_count > kWordLimit;
    return a;
}

double CorpusReport::opening_share() const {
    return cards.empty() ? 0.0 : static_cast<double>(with_opening) / static_cast<double>(cards.size());
}

double CorpusReport::summary_share() const {
    return cards.empty() ? 0.0 : static_cast<double>(with_summary) / static_cast<double>(cards.size());
}

double CorpusReport::over_limit_rate() const {
    return cards.empty() ? 0.0 : static_cast<double>(over_limit) / static_cast<double>(cards.size());
}

CorpusReport analyze_corpus(const std::vector<FeedbackCard>& cards) {
    CorpusReport r;
    for (MainLabel l : kAllLabels) r.label_counts[l] = 0;
    std::vector<std::size_t> words;
    for (const auto& card : cards) {
        CardAnalysis a = analyze_text(card.id, card.feedback.text);
        for (MainLabel l : a.labels) ++r.label_counts[l];
        if (a.blocks.opening) ++r.with_opening;
        if (a.blocks.summary) ++r.with_summary;
        if (a.over_limit) ++r.over_limit;
        words.push_back(a.word_count);
        r.cards.push_back(std::move(a));
    }
    if (!words.empty()) {
        std::sort(words.begin(), words.end());
        r.min_words = words.front();
        r.max_words = words.back();
        r.mean_words = static_cast<double>(std::accumulate(words.begin(), words.end(), std::size_t{0})) /
                       static_cast<double>(words.size());
        const std::size_t mid = words.size() / 2;
        r.median_words = words.size() % 2 ? static_cast<double>(words[mid])
                                          : (static_cast<double>(words[mid - 1]) + static_cast<double>(words[mid])) / 2.0;
    }
    return r;
}

namespace {

json span_json(const std::optional<Span>& s) {
    if (!s) return nullptr;
    return {{"begin", s->begin}, {"end", s->end}};
}

} // namespace

json report_to_json(const CorpusReport& r, bool include_cards) {
    json counts = json::object();
    for (const auto& [label, count] : r.label_counts) counts[std::string(label_name(label))] = count;
    json out{{"cards_analyzed", r.cards.size()},
             {"label_counts", std::move(counts)},
             {"with_opening", r.with_opening},
             {"with_summary", r.with_summary},
             {"opening_share", r.opening_share()},
             {"summary_share", r.summary_share()},
             {"over_limit", r.over_limit},
             {"over_limit_rate", r.over_limit_rate()},
             {"word_count", {{"min", r.min_words}, {"max", r.max_words}, {"mean", r.mean_words},
                             {"median", r.median_words}}}};
    if (include_cards) {
        json per_card = json::array();
        for (const auto& a : r.cards) {
            json labels = json::array();
            for (MainLabel l : a.labels) labels.push_back(label_name(l));
            per_card.push_back({{"card_id", a.card_id},
                                {"opening", span_json(a.blocks.opening)},
                                {"main", span_json(a.blocks.main)},
                                {"summary", span_json(a.blocks.summary)},
                                {"labels", std::move(labels)},
                                {"word_count", a.word_count},
                                {"over_limit", a.over_limit}});
        }
        out["cards"] = std::move(per_card);
    }
    return out;
}

} // namespace pfb
