#pragma once

#include "pfb/clock.hpp"
#include "pfb/history.hpp"
#include "pfb/persona.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pfb {

enum class EventKind {
    EditorFocus,
    SidebarFocus,
    PersonaCreated,
    PersonaEdited,
    PersonaTabOpened,
    FeedbackRequested,
    FeedbackFailed,
    FeedbackDeleted,
};

std::string_view event_kind_name(EventKind k);
std::optional<EventKind> event_kind_from_name(std::string_view name);

// Payload fields per kind (all strings):
//   editor_focus, sidebar_focus: none
//   persona_created, persona_tab_opened: persona_id
//   persona_edited: persona_id [, section]
//   feedback_requested: persona_id, card_id
//   feedback_failed: persona_id [, code]
//   feedback_deleted: card_id
struct SessionEvent {
    Timestamp timestamp;
    EventKind kind;
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

// Throws Error(MalformedRequest) when the payload lacks a required field.
void validate_event(const SessionEvent& e);

nlohmann::json event_to_json(const SessionEvent& e);
SessionEvent event_from_json(const nlohmann::json& j);

// Append-only, timestamps non-decreasing.
class SessionLog {
public:
    // Throws Error(NonMonotonicTimestamp) or Error(MalformedRequest).
    void record(SessionEvent e);

    const std::vector<SessionEvent>& events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    std::optional<Timestamp> last_timestamp() const;

    // One JSON object per line.
    std::string to_jsonl() const;
    static SessionLog from_jsonl(std::string_view text);

private:
    std::vector<SessionEvent> events_;
};

using MillisF = std::chrono::duration<double, std::milli>;

struct SessionStats {
    std::size_t personas_created = 0;
    std::size_t feedbacks_requested = 0;
    std::size_t persona_revisits = 0;
    // Present only with at least two feedback requests.
    std::optional<MillisF> mean_inter_feedback_interval;
    std::size_t final_word_count = 0;

    friend bool operator==(const SessionStats&, const SessionStats&) = default;
};

// Incremental fold; stats() after any prefix equals compute_stats on that prefix.
class StatsAccumulator {
public:
    void add(const SessionEvent& e);
    SessionStats stats(std::optional<std::string_view> final_text = std::nullopt) const;

private:
    std::set<std::string> created_;
    std::size_t personas_created_ = 0;
    std::size_t feedbacks_ = 0;
    std::size_t revisits_ = 0;
    std::optional<Timestamp> first_feedback_;
    std::optional<Timestamp> last_feedback_;
};

// A revisit is a persona_tab_opened for a persona whose persona_created event
// appears earlier in the log. final_word_count comes from `final_text`.
SessionStats compute_stats(const SessionLog& log, std::optional<std::string_view> final_text = std::nullopt);
nlohmann::json stats_to_json(const SessionStats& s);

enum class Focus { Editor, Sidebar };
std::string_view focus_name(Focus f);

struct FocusSegment {
    Timestamp start;
    Timestamp end;
    Focus focus;

    friend bool operator==(const FocusSegment&, const FocusSegment&) = default;
};

struct FocusTimeline {
    std::vector<FocusSegment> segments;
    std::vector<Timestamp> persona_marks;

    friend bool operator==(const FocusTimeline&, const FocusTimeline&) = default;
};

// Each focus event opens a segment closed by the next focus change; repeated
// focus events on the same pane are merged. The last segment ends at
// `session_end`, defaulting to the log's last timestamp. Zero-length segments
// are dropped.
FocusTimeline focus_timeline(const SessionLog& log, std::optional<Timestamp> session_end = std::nullopt);
nlohmann::json timeline_to_json(const FocusTimeline& t);
// Columns: row,start,end,start_offset_s,end_offset_s,focus
std::string timeline_to_csv(const FocusTimeline& t);

struct AttributeContribution {
    std::map<std::string, std::size_t> attributes;
    std::map<std::string, std::size_t> descriptions;

    friend bool operator==(const AttributeContribution&, const AttributeContribution&) = default;
};

// Snapshots used to resolve feedback_requested events: by card id first, then
// by persona id.
struct PersonaIndex {
    std::map<std::string, PersonaSnapshot> by_card;
    std::map<std::string, PersonaSnapshot> by_persona;

    void add_history(const History& h);
    void add_persona(const Persona& p);
};

const std::set<std::string, std::less<>>& stopwords();

// Throws Error(UnresolvablePersona).
AttributeContribution attribute_contribution(const SessionLog& log, const PersonaIndex& personas);
nlohmann::json contribution_to_json(const AttributeContribution& c);

} // namespace pfb
