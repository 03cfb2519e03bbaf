#include "pfb/prompt.hpp"

#include "pfb/error.hpp"
#include "pfb/text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pfb {

using nlohmann::json;

std::string_view role_name(Role r) {
    switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

const std::string& feedback_system_prompt() {
    static const std::string prompt =
        "Personas are defined using four fixed attributes: role, background, style, and content. "
        "Each attribute consists of user-defined key-value pairs. The possible key-value pairs are "
        "not predefined and can vary. Generate persona-specific feedback for the text snippet "
        "highlighted by the user, considering the persona's unique attributes and any additional "
        "key-value pairs that might be defined by the user. You will take the role of the persona "
        "and write from their viewpoint. Every key-value attribute that is included in the personas "
        "definition describes the persona and therefore you. The feedback should align with the "
        "persona's characteristics and viewpoint, providing insights, suggestions, or comments that "
        "are relevant to the persona's role, background, style preferences, and content preferences.\n"
        "\n"
        "Input:\n"
        "Text: \"Selected text snippet from the user's editor.\"\n"
        "Persona:\n"
        "- Role: {\"key\": \"value\"}\n"
        "- Background: {\"key\": \"value\"}\n"
        "- Style: {\"key\": \"value\"}\n"
        "- Content: {\"key\": \"value\"}\n"
        "\n"
        "Output: Generate persona-specific feedback for the provided text snippet based on the given "
        "persona attributes. Write the feedback as if you would be this persona. Consider the role, "
        "background, style, and content preferences of the persona. Provide insights, suggestions, or "
        "comments that align with the persona's characteristics and viewpoint. Feel free to "
        "incorporate any additional key-value pairs defined by the user in the persona definition to "
        "enhance the relevance of the feedback. Write one continuous feedback that is not longer than "
        "200 words.";
    return prompt;
}

namespace {

void append_quoted(std::string& out, std::string_view s) {
    out.push_back('"');
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
}

constexpr std::array<std::string_view, 4> kLineLabels{"Role", "Background", "Style", "Content"};

} // namespace

std::string render_pairs(const std::vector<AttributePair>& pairs) {
    std::string out = "{";
    bool first = true;
    for (const auto& pair : pairs) {
        if (pair.description.empty()) continue;
        if (!first) out += ", ";
        first = false;
        append_quoted(out, pair.attribute);
        out += ": ";
        append_quoted(out, pair.description);
    }
    out += "}";
    return out;
}

std::string render_persona_block(const PersonaSnapshot& s) {
    std::string out;
    for (std::size_t i = 0; i < kAllSections.size(); ++i) {
        if (i > 0) out += "\n";
        out += "- ";
        out += kLineLabels[i];
        out += ": ";
        out += render_pairs(s.sections()[kAllSections[i]]);
    }
    return out;
}

std::string render_user_message(std::string_view selected_text, const PersonaSnapshot& s) {
    if (text::trim(selected_text).empty())
        throw Error(ErrorCode::EmptySelection, "selected text is empty");
    std::string out = "Input:\nText: \"";
    out += selected_text;
    out += "\"\nPersona:\n";
    out += render_persona_block(s);
    return out;
}

PromptBundle assemble(std::string_view selected_text, const PersonaSnapshot& s,
                      const std::vector<FewShotExample>& examples) {
    PromptBundle bundle;
    bundle.messages.reserve(2 * examples.size() + 2);
    std::string final_message = render_user_message(selected_text, s);
    bundle.messages.push_back({Role::System, feedback_system_prompt()});
    for (const auto& ex : examples) {
        bundle.messages.push_back({Role::User, render_user_message(ex.selected_text, ex.persona)});
        bundle.messages.push_back({Role::Assistant, ex.feedback_text});
    }
    bundle.messages.push_back({Role::User, std::move(final_message)});
    return bundle;
}

bool has_feedback_role_pattern(const PromptBundle& bundle) {
    const auto& m = bundle.messages;
    if (m.size() < 2 || m.size() % 2 != 0) return false;
    if (m.front().role != Role::System || m.back().role != Role::User) return false;
    for (std::size_t i = 1; i + 1 < m.size(); ++i) {
        const Role expected = (i % 2 == 1) ? Role::User : Role::Assistant;
        if (m[i].role != expected) return false;
    }
    for (const auto& msg : m)
        if (msg.content.empty()) return false;
    return true;
}

namespace {

std::string read_quoted(std::string_view s, std::size_t& pos) {
    if (pos >= s.size() || s[pos] != '"') throw std::invalid_argument("expected '\"'");
    ++pos;
    std::string out;
    while (pos < s.size()) {
        const char c = s[pos++];
        if (c == '"') return out;
        if (c == '\\') {
            if (pos >= s.size()) break;
            out.push_back(s[pos++]);
        } else {
            out.push_back(c);
        }
    }
    throw std::invalid_argument("unterminated string");
}

void expect_literal(std::string_view s, std::size_t& pos, std::string_view lit) {
    if (s.substr(pos, lit.size()) != lit)
        throw std::invalid_argument("expected '" + std::string(lit) + "'");
    pos += lit.size();
}

} // namespace

std::vector<AttributePair> parse_pairs(std::string_view block) {
    std::size_t pos = 0;
    expect_literal(block, pos, "{");
    std::vector<AttributePair> out;
    if (pos < block.size() && block[pos] == '}') {
        ++pos;
    } else {
        for (;;) {
            AttributePair pair;
            pair.attribute = read_quoted(block, pos);
            expect_literal(block, pos, ": ");
            pair.description = read_quoted(block, pos);
            out.push_back(std::move(pair));
            if (pos < block.size() && block[pos] == '}') {
                ++pos;
                break;
            }
            expect_literal(block, pos, ", ");
        }
    }
    if (pos != block.size()) throw std::invalid_argument("trailing characters after '}'");
    return out;
}

RenderedInput parse_user_message(std::string_view content) {
    constexpr std::string_view head = "Input:\nText: \"";
    if (content.substr(0, head.size()) != head) throw std::invalid_argument("missing input header");
    const std::size_t marker = content.rfind("\"\nPersona:\n");
    if (marker == std::string_view::npos || marker < head.size())
        throw std::invalid_argument("missing persona header");
    RenderedInput out;
    out.selected_text = std::string(content.substr(head.size(), marker - head.size()));
    std::string_view rest = content.substr(marker + std::string_view("\"\nPersona:\n").size());
    for (std::size_t i = 0; i < kLineLabels.size(); ++i) {
        const std::size_t nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        std::size_t pos = 0;
        expect_literal(line, pos, "- ");
        expect_literal(line, pos, kLineLabels[i]);
        expect_literal(line, pos, ": ");
        out.sections[i] = parse_pairs(line.substr(pos));
    }
    return out;
}

json bundle_to_json(const PromptBundle& bundle) {
    json messages = json::array();
    for (const auto& m : bundle.messages)
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    return messages;
}

std::string bundle_bytes(const PromptBundle& bundle) { return bundle_to_json(bundle).dump(); }

namespace {

PersonaSnapshot example_persona(const json& j, const std::string& path) {
    auto fail = [&](const std::string& what) -> PersonaSnapshot {
        throw Error(ErrorCode::MalformedConfig, "few-shot " + path + ": " + what);
    };
    if (!j.is_object()) return fail("persona must be an object");
    try {
        Timestamp at{};
        if (auto it = j.find("updated_at"); it != j.end() && it->is_string())
            at = parse_rfc3339(it->get<std::string>());
        return PersonaSnapshot{j.value("id", std::string{}), j.value("name", std::string{}),
                               sections_from_json(j.at("sections"), path + "/persona/sections"), at};
    } catch (const Error& e) {
        return fail(e.what());
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

} // namespace

std::vector<FewShotExample> parse_few_shot(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedConfig, std::string("few-shot file: ") + e.what());
    }
    if (!j.is_array()) throw Error(ErrorCode::MalformedConfig, "few-shot file must be an array");
    std::vector<FewShotExample> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "/" + std::to_string(i);
        const json& item = j[i];
        if (!item.is_object() || !item.contains("persona") || !item.contains("selected_text") ||
            !item.contains("feedback_text") || !item["selected_text"].is_string() ||
            !item["feedback_text"].is_string())
            throw Error(ErrorCode::MalformedConfig,
                        "few-shot " + path + ": expected {persona, selected_text, feedback_text}");
        FewShotExample ex{example_persona(item["persona"], path), item["selected_text"].get<std::string>(),
                          item["feedback_text"].get<std::string>()};
        if (text::trim(ex.selected_text).empty() || text::trim(ex.feedback_text).empty())
            throw Error(ErrorCode::MalformedConfig, "few-shot " + path + ": empty text");
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<FewShotExample> load_few_shot_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open few-shot file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_few_shot(ss.str());
}

} // namespace pfb
