#pragma once

#include "pfb/clock.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pfb {

struct AttributePair {
    std::string attribute;
    std::string description;

    friend bool operator==(const AttributePair&, const AttributePair&) = default;
};

// Order drives prompt rendering.
enum class SectionKind : std::size_t {
    RoleTask = 0,
    Background = 1,
    StylePreferences = 2,
    ContentPreferences = 3,
};

inline constexpr std::array<SectionKind, 4> kAllSections{
    SectionKind::RoleTask, SectionKind::Background, SectionKind::StylePreferences,
    SectionKind::ContentPreferences};

// File/wire key: role_task, background, style_preferences, content_preferences.
std::string_view section_key(SectionKind kind);
std::optional<SectionKind> section_from_key(std::string_view key);

// All four sections are always present; any of them may be empty.
class Sections {
public:
    std::vector<AttributePair>& operator[](SectionKind k) { return lists_[index(k)]; }
    const std::vector<AttributePair>& operator[](SectionKind k) const { return lists_[index(k)]; }

    friend bool operator==(const Sections&, const Sections&) = default;

private:
    static std::size_t index(SectionKind k) { return static_cast<std::size_t>(k); }
    std::array<std::vector<AttributePair>, 4> lists_{};
};

struct Persona {
    std::string id;
    std::string name;
    Sections sections;
    Timestamp created_at{};
    Timestamp updated_at{};

    friend bool operator==(const Persona&, const Persona&) = default;
};

// Frozen copy of a persona at request time. Members are const so a snapshot
// cannot be altered after construction; copies share nothing with the source.
class PersonaSnapshot {
public:
    PersonaSnapshot(std::string persona_id, std::string name, Sections sections, Timestamp snapshot_at)
        : persona_id_(std::move(persona_id)), name_(std::move(name)),
          sections_(std::move(sections)), snapshot_at_(snapshot_at) {}

    const std::string& persona_id() const { return persona_id_; }
    const std::string& name() const { return name_; }
    const Sections& sections() const { return sections_; }
    Timestamp snapshot_at() const { return snapshot_at_; }

    // Same name and sections, ignoring snapshot time.
    bool same_contents(const PersonaSnapshot& other) const {
        return persona_id_ == other.persona_id_ && name_ == other.name_ && sections_ == other.sections_;
    }

    friend bool operator==(const PersonaSnapshot&, const PersonaSnapshot&) = default;

private:
    std::string persona_id_;
    std::string name_;
    Sections sections_;
    Timestamp snapshot_at_;
};

struct SectionGuidance {
    SectionKind section;
    std::string title;
    std::string description;
    std::vector<AttributePair> example_pairs;
};

Persona create_persona(std::string name, IdGenerator& ids, Timestamp now = now_utc());
Persona add_pair(Persona p, SectionKind s, AttributePair pair, Timestamp now = now_utc());
Persona remove_pair(Persona p, SectionKind s, std::size_t index, Timestamp now = now_utc());
Persona edit_pair(Persona p, SectionKind s, std::size_t index, AttributePair pair,
                  Timestamp now = now_utc());
// Replaces name and every section at once (used by the form-save route).
Persona replace_contents(Persona p, std::string name, Sections sections, Timestamp now = now_utc());
PersonaSnapshot snapshot(const Persona& p, Timestamp now = now_utc());

// One entry per SectionKind, in section order.
const std::vector<SectionGuidance>& section_guidance();

std::string serialize_persona(const Persona& p);
// Throws Error(MalformedPersona) with a byte position or JSON path.
Persona parse_persona(std::string_view text);

nlohmann::json sections_to_json(const Sections& s);
Sections sections_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json persona_to_json(const Persona& p);
Persona persona_from_json(const nlohmann::json& j);
nlohmann::json snapshot_to_json(const PersonaSnapshot& s);
// Throws Error(MalformedPersona) on schema violations.
PersonaSnapshot snapshot_from_json(const nlohmann::json& j);

} // namespace pfb
