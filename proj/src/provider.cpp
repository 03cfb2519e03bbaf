#include "pfb/provider.hpp"

#include "pfb/text.hpp"

#include <array>
#include <fstream>
#include <thread>

#include <httplib.h>

namespace pfb {

using nlohmann::json;

void GenerationParams::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw Error(ErrorCode::MalformedRequest, "temperature must lie in [0, 2]");
    if (max_output_tokens < 1)
        throw Error(ErrorCode::MalformedRequest, "max_output_tokens must be at least 1");
    if (request_timeout <= Millis{0})
        throw Error(ErrorCode::MalformedRequest, "request_timeout must be positive");
}

std::string_view failure_name(ProviderFailure f) {
    switch (f) {
    case ProviderFailure::Timeout: return "timeout";
    case ProviderFailure::Auth: return "auth";
    case ProviderFailure::RateLimit: return "rate_limit";
    case ProviderFailure::Transport: return "transport";
    case ProviderFailure::BadResponse: return "bad_response";
    }
    return "transport";
}

const std::string& default_condense_prompt() {
    static const std::string prompt =
        "You receive feedback that a persona wrote about a text snippet. Make the given feedback "
        "more concise. Keep the persona's viewpoint, the main suggestions, and any concrete example, "
        "but remove repetition and filler. Answer with the shortened feedback only.";
    return prompt;
}

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string join_descriptions(const std::vector<AttributePair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        if (p.description.empty()) continue;
        if (!out.empty()) out += ", ";
        out += p.description;
    }
    return out;
}

std::string first_words(std::string_view s, std::size_t n) {
    std::string out;
    const auto words = text::split_words(s);
    for (std::size_t i = 0; i < words.size() && i < n; ++i) {
        if (i > 0) out += ' ';
        out += words[i];
    }
    return out;
}

constexpr std::array<std::string_view, 3> kRemarks{
    "The text snippet presents its main idea clearly.",
    "I value the clear structure of this passage.",
    "The passage reads well and stays on topic.",
};

constexpr std::array<std::string_view, 3> kClosings{
    "is a good starting point that would benefit from these revisions.",
    "is promising and could become more convincing with these changes.",
    "works well and needs only a few targeted edits.",
};

std::string mock_feedback(const PromptBundle& bundle) {
    RenderedInput input;
    try {
        input = parse_user_message(bundle.messages.back().content);
    } catch (const std::invalid_argument& e) {
        throw ProviderError(ProviderFailure::BadResponse,
                            std::string("mock provider cannot read the request: ") + e.what());
    }
    const std::uint64_t h = fnv1a(bundle_bytes(bundle));

    const std::string roles = join_descriptions(input.sections[0]);
    const std::string background = join_descriptions(input.sections[1]);
    std::string out = "As a " + (roles.empty() ? std::string("reader") : roles);
    if (!background.empty()) out += ", with a background in " + background;
    out += ", my task is to give feedback on the selected text. ";
    out += kRemarks[h % kRemarks.size()];
    out += ' ';

    const auto& style = input.sections[2];
    if (!style.empty()) {
        out += "Considering my preference for " + style.front().attribute + " \"" +
               style.front().description +
               "\", you could revise the wording to match it more closely. ";
    } else {
        out += "You could add more examples to support the main claim. ";
    }
    out += "For example, instead of \"" + first_words(input.selected_text, 5) +
           "\", the author could write a more specific opening. ";
    out += "Overall, the text snippet ";
    out += kClosings[(h >> 8) % kClosings.size()];
    return out;
}

} // namespace

MockProvider::MockProvider() : MockProvider(Options{}) {}

MockProvider::MockProvider(Options options) : options_(std::move(options)) {}

std::size_t MockProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::string MockProvider::complete(const PromptBundle& bundle, const GenerationParams& params) {
    {
        std::lock_guard lock(mutex_);
        ++calls_;
    }
    if (options_.latency > Millis{0}) {
        if (options_.latency > params.request_timeout) {
            std::this_thread::sleep_for(params.request_timeout);
            throw ProviderError(ProviderFailure::Timeout, "mock provider timed out");
        }
        std::this_thread::sleep_for(options_.latency);
    }
    if (bundle.messages.size() == 2 && bundle.messages[0].role == Role::System &&
        bundle.messages[0].content == options_.condense_prompt) {
        const std::string& source = bundle.messages[1].content;
        return first_words(source, text::count_words(source) / 2);
    }
    if (bundle.messages.empty() || bundle.messages.back().role != Role::User)
        throw ProviderError(ProviderFailure::BadResponse, "mock provider expects a final user message");
    return mock_feedback(bundle);
}

RemoteProvider::RemoteProvider(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

json RemoteProvider::request_body(const PromptBundle& bundle, const GenerationParams& params) {
    return {{"model", params.model_id},
            {"messages", bundle_to_json(bundle)},
            {"temperature", params.temperature},
            {"max_tokens", params.max_output_tokens}};
}

std::string RemoteProvider::parse_response(std::string_view body) {
    try {
        const json j = json::parse(body.begin(), body.end());
        std::string content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (text::trim(content).empty())
            throw ProviderError(ProviderFailure::BadResponse, "provider returned empty content");
        return content;
    } catch (const ProviderError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProviderError(ProviderFailure::BadResponse,
                            std::string("unexpected provider response: ") + e.what());
    }
}

namespace {

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

std::string RemoteProvider::complete(const PromptBundle& bundle, const GenerationParams& params) {
    const auto [origin, prefix] = split_url(base_url_);
    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(params.request_timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(params.request_timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto res = client.Post(prefix + "/chat/completions", headers,
                                 request_body(bundle, params).dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::Write ||
            err == httplib::Error::ConnectionTimeout)
            throw ProviderError(ProviderFailure::Timeout,
                                "provider request timed out (" + httplib::to_string(err) + ")");
        throw ProviderError(ProviderFailure::Transport,
                            "provider request failed (" + httplib::to_string(err) + ")");
    }
    if (res->status == 401 || res->status == 403)
        throw ProviderError(ProviderFailure::Auth, "provider rejected credentials");
    if (res->status == 429) throw ProviderError(ProviderFailure::RateLimit, "provider rate limit hit");
    if (res->status == 408 || res->status == 504)
        throw ProviderError(ProviderFailure::Timeout, "provider timed out");
    if (res->status < 200 || res->status >= 300)
        throw ProviderError(ProviderFailure::Transport,
                            "provider returned HTTP " + std::to_string(res->status));
    return parse_response(res->body);
}

std::string redact(std::string text, std::string_view secret) {
    if (secret.empty()) return text;
    static constexpr std::string_view mask = "[REDACTED]";
    std::size_t pos = 0;
    while ((pos = text.find(secret, pos)) != std::string::npos) {
        text.replace(pos, secret.size(), mask);
        pos += mask.size();
    }
    return text;
}

AuditingProvider::AuditingProvider(std::shared_ptr<CompletionProvider> inner, std::string path,
                                   std::string secret, Clock clock)
    : inner_(std::move(inner)), path_(std::move(path)), secret_(std::move(secret)),
      clock_(std::move(clock)) {}

void AuditingProvider::write(const json& record) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << redact(record.dump(), secret_) << '\n';
}

std::string AuditingProvider::complete(const PromptBundle& bundle, const GenerationParams& params) {
    json record{{"timestamp", format_rfc3339(clock_())},
                {"model", params.model_id},
                {"messages", bundle_to_json(bundle)}};
    try {
        std::string out = inner_->complete(bundle, params);
        record["response"] = out;
        write(record);
        return out;
    } catch (const ProviderError& e) {
        record["error"] = {{"kind", failure_name(e.kind())}, {"message", e.what()}};
        write(record);
        throw;
    }
}

} // namespace pfb
