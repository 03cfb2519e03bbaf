#include "pfb/analytics.hpp"

#include "pfb/error.hpp"
#include "pfb/text.hpp"

#include <array>
#include <cstdio>
#include <sstream>

namespace pfb {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kKindNames{{
    {EventKind::EditorFocus, "editor_focus"},
    {EventKind::SidebarFocus, "sidebar_focus"},
    {EventKind::PersonaCreated, "persona_created"},
    {EventKind::PersonaEdited, "persona_edited"},
    {EventKind::PersonaTabOpened, "persona_tab_opened"},
    {EventKind::FeedbackRequested, "feedback_requested"},
    {EventKind::FeedbackFailed, "feedback_failed"},
    {EventKind::FeedbackDeleted, "feedback_deleted"},
}};

std::string payload_string(const SessionEvent& e, const char* key) {
    auto it = e.payload.find(key);
    if (it == e.payload.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

} // namespace

std::string_view event_kind_name(EventKind k) {
    for (const auto& [kind, name] : kKindNames)
        if (kind == k) return name;
    return "editor_focus";
}

std::optional<EventKind> event_kind_from_name(std::string_view name) {
    for (const auto& [kind, n] : kKindNames)
        if (n == name) return kind;
    return std::nullopt;
}

void validate_event(const SessionEvent& e) {
    if (!e.payload.is_object())
        throw Error(ErrorCode::MalformedRequest, "event payload must be an object");
    auto require = [&](const char* key) {
        auto it = e.payload.find(key);
        if (it == e.payload.end() || !it->is_string() || it->get<std::string>().empty())
            throw Error(ErrorCode::MalformedRequest, std::string(event_kind_name(e.kind)) +
                                                         " event needs payload." + key);
    };
    switch (e.kind) {
    case EventKind::EditorFocus:
    case EventKind::SidebarFocus: break;
    case EventKind::PersonaCreated:
    case EventKind::PersonaEdited:
    case EventKind::PersonaTabOpened:
    case EventKind::FeedbackFailed: require("persona_id"); break;
    case EventKind::FeedbackRequested:
        require("persona_id");
        require("card_id");
        break;
    case EventKind::FeedbackDeleted: require("card_id"); break;
    }
}

json event_to_json(const SessionEvent& e) {
    return {{"timestamp", format_rfc3339(e.timestamp)},
            {"kind", event_kind_name(e.kind)},
            {"payload", e.payload}};
}

SessionEvent event_from_json(const json& j) {
    if (!j.is_object() || !j.contains("timestamp") || !j.contains("kind") ||
        !j["timestamp"].is_string() || !j["kind"].is_string())
        throw Error(ErrorCode::MalformedRequest, "event needs string fields timestamp and kind");
    const auto kind = event_kind_from_name(j["kind"].get<std::string>());
    if (!kind) throw Error(ErrorCode::MalformedRequest, "unknown event kind " + j["kind"].get<std::string>());
    SessionEvent e{Timestamp{}, *kind, j.value("payload", json::object())};
    try {
        e.timestamp = parse_rfc3339(j["timestamp"].get<std::string>());
    } catch (const std::invalid_argument& ex) {
        throw Error(ErrorCode::MalformedRequest, std::string("bad event timestamp: ") + ex.what());
    }
    validate_event(e);
    return e;
}

void SessionLog::record(SessionEvent e) {
    validate_event(e);
    if (!events_.empty() && e.timestamp < events_.back().timestamp)
        throw Error(ErrorCode::NonMonotonicTimestamp,
                    "event at " + format_rfc3339(e.timestamp) + " precedes last event at " +
                        format_rfc3339(events_.back().timestamp));
    events_.push_back(std::move(e));
}

std::optional<Timestamp> SessionLog::last_timestamp() const {
    if (events_.empty()) return std::nullopt;
    return events_.back().timestamp;
}

std::string SessionLog::to_jsonl() const {
    std::string out;
    for (const auto& e : events_) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

SessionLog SessionLog::from_jsonl(std::string_view text) {
    SessionLog log;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        const std::string_view line = text::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line.empty()) continue;
        try {
            log.record(event_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::MalformedRequest,
                        "event log line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), "event log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return log;
}

void StatsAccumulator::add(const SessionEvent& e) {
    switch (e.kind) {
    case EventKind::PersonaCreated:
        ++personas_created_;
        created_.insert(payload_string(e, "persona_id"));
        break;
    case EventKind::PersonaTabOpened:
        if (created_.count(payload_string(e, "persona_id"))) ++revisits_;
        break;
    case EventKind::FeedbackRequested:
        ++feedbacks_;
        if (!first_feedback_) first_feedback_ = e.timestamp;
        last_feedback_ = e.timestamp;
        break;
    default: break;
    }
}

SessionStats StatsAccumulator::stats(std::optional<std::string_view> final_text) const {
    SessionStats s;
    s.personas_created = personas_created_;
    s.feedbacks_requested = feedbacks_;
    s.persona_revisits = revisits_;
    // The consecutive gaps telescope, so their mean is the total span over n-1.
    if (feedbacks_ >= 2)
        s.mean_inter_feedback_interval =
            MillisF(*last_feedback_ - *first_feedback_) / static_cast<double>(feedbacks_ - 1);
    if (final_text) s.final_word_count = text::count_words(*final_text);
    return s;
}

SessionStats compute_stats(const SessionLog& log, std::optional<std::string_view> final_text) {
    StatsAccumulator acc;
    for (const auto& e : log.events()) acc.add(e);
    return acc.stats(final_text);
}

json stats_to_json(const SessionStats& s) {
    json j{{"personas_created", s.personas_created},
           {"feedbacks_requested", s.feedbacks_requested},
           {"persona_revisits", s.persona_revisits},
           {"final_word_count", s.final_word_count}};
    j["mean_inter_feedback_interval_ms"] =
        s.mean_inter_feedback_interval ? json(s.mean_inter_feedback_interval->count()) : json(nullptr);
    return j;
}

std::string_view focus_name(Focus f) { return f == Focus::Editor ? "editor" : "sidebar"; }

FocusTimeline focus_timeline(const SessionLog& log, std::optional<Timestamp> session_end) {
    FocusTimeline t;
    std::optional<std::pair<Timestamp, Focus>> open;
    for (const auto& e : log.events()) {
        if (e.kind == EventKind::PersonaCreated) {
            t.persona_marks.push_back(e.timestamp);
            continue;
        }
        if (e.kind != EventKind::EditorFocus && e.kind != EventKind::SidebarFocus) continue;
        const Focus f = e.kind == EventKind::EditorFocus ? Focus::Editor : Focus::Sidebar;
        if (open && open->second == f) continue;
        if (open && e.timestamp > open->first) t.segments.push_back({open->first, e.timestamp, open->second});
        open = {e.timestamp, f};
    }
    if (open) {
        const Timestamp end = session_end.value_or(*log.last_timestamp());
        if (end > open->first) t.segments.push_back({open->first, end, open->second});
    }
    return t;
}

json timeline_to_json(const FocusTimeline& t) {
    json segments = json::array();
    for (const auto& s : t.segments)
        segments.push_back({{"start", format_rfc3339(s.start)},
                            {"end", format_rfc3339(s.end)},
                            {"start_ms", to_unix_ms(s.start)},
                            {"end_ms", to_unix_ms(s.end)},
                            {"focus", focus_name(s.focus)}});
    json marks = json::array();
    for (const auto& m : t.persona_marks) marks.push_back({{"at", format_rfc3339(m)}, {"at_ms", to_unix_ms(m)}});
    return {{"segments", std::move(segments)}, {"persona_marks", std::move(marks)}};
}

std::string timeline_to_csv(const FocusTimeline& t) {
    std::optional<Timestamp> origin;
    if (!t.segments.empty()) origin = t.segments.front().start;
    if (!t.persona_marks.empty() && (!origin || t.persona_marks.front() < *origin))
        origin = t.persona_marks.front();
    auto offset = [&](Timestamp ts) {
        std::array<char, 32> buf{};
        std::snprintf(buf.data(), buf.size(), "%.3f",
                      std::chrono::duration<double>(ts - *origin).count());
        return std::string(buf.data());
    };
    std::ostringstream out;
    out << "row,start,end,start_offset_s,end_offset_s,focus\n";
    for (const auto& s : t.segments)
        out << "segment," << format_rfc3339(s.start) << ',' << format_rfc3339(s.end) << ','
            << offset(s.start) << ',' << offset(s.end) << ',' << focus_name(s.focus) << '\n';
    for (const auto& m : t.persona_marks)
        out << "persona_mark," << format_rfc3339(m) << ',' << format_rfc3339(m) << ',' << offset(m)
            << ',' << offset(m) << ",\n";
    return out.str();
}

void PersonaIndex::add_history(const History& h) {
    for (const auto& c : h.cards()) by_card.insert_or_assign(c.id, c.persona);
}

void PersonaIndex::add_persona(const Persona& p) {
    by_persona.insert_or_assign(p.id, snapshot(p, p.updated_at));
}

const std::set<std::string, std::less<>>& stopwords() {
    static const std::set<std::string, std::less<>> words{
        "a",       "about",  "above",   "after",  "again", "against", "all",     "am",
        "an",      "and",    "any",     "are",    "as",    "at",      "be",      "because",
        "been",    "before", "being",   "below",  "between", "both",  "but",     "by",
        "can",     "could",  "did",     "do",     "does",  "doing",   "down",    "during",
        "each",    "few",    "for",     "from",   "further", "had",   "has",     "have",
        "having",  "he",     "her",     "here",   "hers",  "herself", "him",     "himself",
        "his",     "how",    "i",       "if",     "in",    "into",    "is",      "it",
        "its",     "itself", "just",    "me",     "more",  "most",    "my",      "myself",
        "no",      "nor",    "not",     "now",    "of",    "off",     "on",      "once",
        "only",    "or",     "other",   "our",    "ours",  "ourselves", "out",   "over",
        "own",     "same",   "she",     "should", "so",    "some",    "such",    "than",
        "that",    "the",    "their",   "theirs", "them",  "themselves", "then", "there",
        "these",   "they",   "this",    "those",  "through", "to",    "too",     "under",
        "until",   "up",     "very",    "was",    "we",    "were",    "what",    "when",
        "where",   "which",  "while",   "who",    "whom",  "why",     "will",    "with",
        "would",   "you",    "your",    "yours",  "yourself", "yourselves", "e.g", "etc",
    };
    return words;
}

namespace {

void count_words_into(std::map<std::string, std::size_t>& counts, std::string_view s) {
    const auto& stop = stopwords();
    for (auto& w : text::normalized_words(s))
        if (!stop.count(w)) ++counts[std::move(w)];
}

} // namespace

AttributeContribution attribute_contribution(const SessionLog& log, const PersonaIndex& personas) {
    AttributeContribution out;
    for (const auto& e : log.events()) {
        if (e.kind != EventKind::FeedbackRequested) continue;
        const PersonaSnapshot* snap = nullptr;
        if (auto it = personas.by_card.find(payload_string(e, "card_id")); it != personas.by_card.end())
            snap = &it->second;
        else if (auto jt = personas.by_persona.find(payload_string(e, "persona_id"));
                 jt != personas.by_persona.end())
            snap = &jt->second;
        if (!snap)
            throw Error(ErrorCode::UnresolvablePersona,
                        "no persona snapshot for feedback request at " + format_rfc3339(e.timestamp));
        for (SectionKind k : kAllSections) {
            for (const auto& pair : snap->sections()[k]) {
                if (pair.description.empty()) continue;
                count_words_into(out.attributes, pair.attribute);
                count_words_into(out.descriptions, pair.description);
            }
        }
    }
    return out;
}

json contribution_to_json(const AttributeContribution& c) {
    return {{"attributes", c.attributes}, {"descriptions", c.descriptions}};
}

} // namespace pfb
