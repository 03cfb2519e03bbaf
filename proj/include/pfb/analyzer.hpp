#pragma once

#include "pfb/history.hpp"
#include "pfb/text.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pfb {

// Lexical approximation of the opening / main / summary structure of persona
// feedback. Spans are byte ranges into the analyzed text.
struct FeedbackBlocks {
    std::optional<text::Span> opening;
    text::Span main;
    std::optional<text::Span> summary;

    friend bool operator==(const FeedbackBlocks&, const FeedbackBlocks&) = default;
};

enum class MainLabel {
    MoreExamples,
    TopicContent,
    Clarification,
    MoreDetails,
    StyleImprovement,
    ConcreteSuggestion,
    PositiveRemark,
};

inline constexpr std::array<MainLabel, 7> kAllLabels{
    MainLabel::MoreExamples,     MainLabel::TopicContent,       MainLabel::Clarification,
    MainLabel::MoreDetails,      MainLabel::StyleImprovement,   MainLabel::ConcreteSuggestion,
    MainLabel::PositiveRemark};

using MainPartLabels = std::set<MainLabel>;

std::string_view label_name(MainLabel l);
std::optional<MainLabel> label_from_name(std::string_view name);

// Opening: the first sentence when the text starts with "As a"/"As an".
// Summary: from the last sentence that starts with "Overall", "In summary" or
// "In conclusion" to the end. Main: what lies between.
// Throws Error(EmptyText) for blank input.
FeedbackBlocks segment(std::string_view text);

MainPartLabels label_main(std::string_view main_text);

struct CardAnalysis {
    std::string card_id;
    FeedbackBlocks blocks;
    MainPartLabels labels;
    std::size_t word_count = 0;
    bool over_limit = false;
};

struct CorpusReport {
    std::vector<CardAnalysis> cards;
    std::map<MainLabel, std::size_t> label_counts;
    std::size_t with_opening = 0;
    std::size_t with_summary = 0;
    std::size_t over_limit = 0;
    std::size_t min_words = 0;
    std::size_t max_words = 0;
    double mean_words = 0.0;
    double median_words = 0.0;

    double opening_share() const;
    double summary_share() const;
    double over_limit_rate() const;
};

CardAnalysis analyze_text(std::string card_id, std::string_view feedback_text);
CorpusReport analyze_corpus(const std::vector<FeedbackCard>& cards);
nlohmann::json report_to_json(const CorpusReport& r, bool include_cards = true);

} // namespace pfb
