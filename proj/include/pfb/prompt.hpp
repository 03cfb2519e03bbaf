#pragma once

#include "pfb/persona.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pfb {

enum class Role { System, User, Assistant };

std::string_view role_name(Role r);

struct Message {
    Role role;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct FewShotExample {
    PersonaSnapshot persona;
    std::string selected_text;
    std::string feedback_text;
};

struct PromptBundle {
    std::vector<Message> messages;

    friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

// The fixed system message sent with every feedback request.
const std::string& feedback_system_prompt();

// Renders a brace block such as {"role": "reviewer", "task": "x"}. Pairs with an
// empty description are skipped; '"' and '\' are backslash-escaped.
std::string render_pairs(const std::vector<AttributePair>& pairs);

// Four lines "- Role: {...}", "- Background: {...}", "- Style: {...}",
// "- Content: {...}" joined by '\n' with no trailing newline.
std::string render_persona_block(const PersonaSnapshot& s);

// "Input:\nText: \"<selected>\"\nPersona:\n<persona block>". The selected text
// is embedded verbatim. Throws Error(EmptySelection) for blank selections.
std::string render_user_message(std::string_view selected_text, const PersonaSnapshot& s);

PromptBundle assemble(std::string_view selected_text, const PersonaSnapshot& s,
                      const std::vector<FewShotExample>& examples);

// True iff roles follow system (user assistant)* user.
bool has_feedback_role_pattern(const PromptBundle& bundle);

// Inverse of render_pairs; throws std::invalid_argument on malformed input.
std::vector<AttributePair> parse_pairs(std::string_view block);

// Parsed view of a rendered user message.
struct RenderedInput {
    std::string selected_text;
    std::array<std::vector<AttributePair>, 4> sections;
};
// Throws std::invalid_argument when `content` does not have the user-message layout.
RenderedInput parse_user_message(std::string_view content);

nlohmann::json bundle_to_json(const PromptBundle& bundle);
std::string bundle_bytes(const PromptBundle& bundle);

// Few-shot file: array of {persona, selected_text, feedback_text}; persona uses
// the persona file schema (id/name/sections; timestamps optional).
std::vector<FewShotExample> parse_few_shot(std::string_view text);
std::vector<FewShotExample> load_few_shot_file(const std::string& path);

} // namespace pfb
