#include "pfb/persona.hpp"

#include "pfb/error.hpp"
#include "pfb/text.hpp"

#include <algorithm>

namespace pfb {

using nlohmann::json;

std::string_view section_key(SectionKind kind) {
    switch (kind) {
    case SectionKind::RoleTask: return "role_task";
    case SectionKind::Background: return "background";
    case SectionKind::StylePreferences: return "style_preferences";
    case SectionKind::ContentPreferences: return "content_preferences";
    }
    return "role_task";
}

std::optional<SectionKind> section_from_key(std::string_view key) {
    for (SectionKind k : kAllSections)
        if (section_key(k) == key) return k;
    return std::nullopt;
}

namespace {

void require_attribute(const AttributePair& pair) {
    if (text::trim(pair.attribute).empty())
        throw Error(ErrorCode::EmptyAttribute, "attribute must not be empty");
}

void require_index(const std::vector<AttributePair>& list, std::size_t index, SectionKind s) {
    if (index >= list.size())
        throw Error(ErrorCode::IndexOutOfRange,
                    "index " + std::to_string(index) + " out of range for section " +
                        std::string(section_key(s)) + " of size " + std::to_string(list.size()));
}

void touch(Persona& p, Timestamp now) { p.updated_at = std::max(now, p.created_at); }

} // namespace

Persona create_persona(std::string name, IdGenerator& ids, Timestamp now) {
    Persona p;
    p.id = ids.next();
    p.name = std::move(name);
    p.created_at = now;
    p.updated_at = now;
    return p;
}

Persona add_pair(Persona p, SectionKind s, AttributePair pair, Timestamp now) {
    require_attribute(pair);
    p.sections[s].push_back(std::move(pair));
    touch(p, now);
    return p;
}

Persona remove_pair(Persona p, SectionKind s, std::size_t index, Timestamp now) {
    auto& list = p.sections[s];
    require_index(list, index, s);
    list.erase(list.begin() + static_cast<std::ptrdiff_t>(index));
    touch(p, now);
    return p;
}

Persona edit_pair(Persona p, SectionKind s, std::size_t index, AttributePair pair, Timestamp now) {
    auto& list = p.sections[s];
    require_index(list, index, s);
    require_attribute(pair);
    list[index] = std::move(pair);
    touch(p, now);
    return p;
}

Persona replace_contents(Persona p, std::string name, Sections sections, Timestamp now) {
    for (SectionKind k : kAllSections)
        for (const auto& pair : sections[k]) require_attribute(pair);
    p.name = std::move(name);
    p.sections = std::move(sections);
    touch(p, now);
    return p;
}

PersonaSnapshot snapshot(const Persona& p, Timestamp now) {
    return PersonaSnapshot{p.id, p.name, p.sections, now};
}

const std::vector<SectionGuidance>& section_guidance() {
    static const std::vector<SectionGuidance> guidance{
        {SectionKind::RoleTask,
         "Role/Task of Persona",
         "This section includes attributes that describe the role of this persona and the task "
         "it should carry out when giving feedback.",
         {{"Role", "reviewer"}, {"Task", "check the argumentation"}, {"Focus", "clarity of the main claim"}}},
        {SectionKind::Background,
         "Persona Background",
         "This section includes attributes that describe the background of this persona, such as "
         "occupation, expertise, or prior knowledge.",
         {{"Occupation", "CS professor"}, {"Expertise", "machine learning"}, {"Age", "45"}}},
        {SectionKind::StylePreferences,
         "Style Preferences",
         "This section includes attributes that describe style preferences of this persona.",
         {{"Writing Style", "formal"}, {"Word choice", "technical"},
          {"Sentence structure", "complex, nested sentences"}}},
        {SectionKind::ContentPreferences,
         "Content Preferences",
         "This section includes attributes that describe what content this persona wants to read "
         "about.",
         {{"Examples", "real-world analogies"}, {"Depth", "detailed methods"}, {"Citations", "recent studies"}}},
    };
    return guidance;
}

json sections_to_json(const Sections& s) {
    json out = json::object();
    for (SectionKind k : kAllSections) {
        json list = json::array();
        for (const auto& pair : s[k])
            list.push_back({{"attribute", pair.attribute}, {"description", pair.description}});
        out[std::string(section_key(k))] = std::move(list);
    }
    return out;
}

namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::MalformedPersona, "malformed persona at " + path + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) malformed(path, "expected object");
    auto it = j.find(key);
    if (it == j.end()) malformed(path, std::string("missing field '") + key + "'");
    return *it;
}

std::string string_member(const json& j, const char* key, const std::string& path) {
    const json& v = member(j, key, path);
    if (!v.is_string()) malformed(path + "/" + key, "expected string");
    return v.get<std::string>();
}

Timestamp time_member(const json& j, const char* key, const std::string& path) {
    const std::string raw = string_member(j, key, path);
    try {
        return parse_rfc3339(raw);
    } catch (const std::invalid_argument& e) {
        malformed(path + "/" + key, e.what());
    }
}

} // namespace

Sections sections_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) malformed(path, "expected object");
    Sections out;
    for (SectionKind k : kAllSections) {
        const std::string key(section_key(k));
        const std::string sub = path + "/" + key;
        const json& list = member(j, key.c_str(), path);
        if (!list.is_array()) malformed(sub, "expected array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string item = sub + "/" + std::to_string(i);
            AttributePair pair{string_member(list[i], "attribute", item),
                               string_member(list[i], "description", item)};
            if (text::trim(pair.attribute).empty()) malformed(item + "/attribute", "empty attribute");
            out[k].push_back(std::move(pair));
        }
    }
    for (const auto& [key, _] : j.items())
        if (!section_from_key(key)) malformed(path + "/" + key, "unknown section");
    return out;
}

json persona_to_json(const Persona& p) {
    return {{"id", p.id},
            {"name", p.name},
            {"created_at", format_rfc3339(p.created_at)},
            {"updated_at", format_rfc3339(p.updated_at)},
            {"sections", sections_to_json(p.sections)}};
}

Persona persona_from_json(const json& j) {
    Persona p;
    p.id = string_member(j, "id", "");
    if (p.id.empty()) malformed("/id", "empty id");
    p.name = string_member(j, "name", "");
    p.created_at = time_member(j, "created_at", "");
    p.updated_at = time_member(j, "updated_at", "");
    if (p.updated_at < p.created_at) malformed("/updated_at", "earlier than created_at");
    p.sections = sections_from_json(member(j, "sections", ""), "/sections");
    return p;
}

json snapshot_to_json(const PersonaSnapshot& s) {
    return {{"id", s.persona_id()},
            {"name", s.name()},
            {"snapshot_at", format_rfc3339(s.snapshot_at())},
            {"sections", sections_to_json(s.sections())}};
}

PersonaSnapshot snapshot_from_json(const json& j) {
    return PersonaSnapshot{string_member(j, "id", ""), string_member(j, "name", ""),
                           sections_from_json(member(j, "sections", ""), "/sections"),
                           time_member(j, "snapshot_at", "")};
}

std::string serialize_persona(const Persona& p) { return persona_to_json(p).dump(2); }

Persona parse_persona(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedPersona,
                    "malformed persona at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return persona_from_json(j);
}

} // namespace pfb
