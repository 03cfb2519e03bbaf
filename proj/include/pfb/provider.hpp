#pragma once

#include "pfb/clock.hpp"
#include "pfb/error.hpp"
#include "pfb/prompt.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

namespace pfb {

struct GenerationParams {
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 0.7;
    int max_output_tokens = 512;
    Millis request_timeout = std::chrono::seconds{60};

    // Throws Error(MalformedRequest) when out of range.
    void validate() const;
};

enum class ProviderFailure { Timeout, Auth, RateLimit, Transport, BadResponse };

std::string_view failure_name(ProviderFailure f);

class ProviderError : public Error {
public:
    ProviderError(ProviderFailure kind, const std::string& message)
        : Error(ErrorCode::ProviderError, message), kind_(kind) {}
    ProviderFailure kind() const noexcept { return kind_; }

private:
    ProviderFailure kind_;
};

// Implementations must not modify the bundle and must give up once
// params.request_timeout has elapsed (throwing ProviderError{Timeout}).
class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string complete(const PromptBundle& bundle, const GenerationParams& params) = 0;
};

// Instruction for the second, condensing pass.
const std::string& default_condense_prompt();

// Offline provider with a documented, deterministic output.
//
// Feedback requests (system + k examples + final user message) are answered by
// parsing the final user message and emitting:
//   "As a {RoleTask descriptions}[, with a background in {Background descriptions}],
//    my task is to give feedback on the selected text." + a positive remark picked
//   by hash + one suggestion naming the first StylePreferences pair (or asking
//   for more examples) + a concrete "For example, instead of ..." hint +
//   "Overall, the text snippet ..." summary.
// The hash is FNV-1a over the bundle's JSON bytes.
//
// Condense requests (exactly two messages whose system content equals the
// configured condense prompt) return the first floor(n/2) words of the user text.
class MockProvider : public CompletionProvider {
public:
    struct Options {
        std::string condense_prompt = default_condense_prompt();
        Millis latency{0};
    };

    MockProvider();
    explicit MockProvider(Options options);

    std::string complete(const PromptBundle& bundle, const GenerationParams& params) override;

    std::size_t calls() const;

private:
    Options options_;
    mutable std::mutex mutex_;
    std::size_t calls_ = 0;
};

// Adapts a callable; handy for tests and one-off provider behaviors.
class FunctionProvider : public CompletionProvider {
public:
    using Fn = std::function<std::string(const PromptBundle&, const GenerationParams&)>;
    explicit FunctionProvider(Fn fn) : fn_(std::move(fn)) {}
    std::string complete(const PromptBundle& bundle, const GenerationParams& params) override {
        return fn_(bundle, params);
    }

private:
    Fn fn_;
};

// OpenAI-compatible chat completion client: POST {base_url}/chat/completions.
class RemoteProvider : public CompletionProvider {
public:
    RemoteProvider(std::string base_url, std::string api_key);

    std::string complete(const PromptBundle& bundle, const GenerationParams& params) override;

    // Request body for the wire protocol; exposed for tests.
    static nlohmann::json request_body(const PromptBundle& bundle, const GenerationParams& params);
    // Extracts choices[0].message.content; throws ProviderError{BadResponse}.
    static std::string parse_response(std::string_view body);

private:
    std::string base_url_;
    std::string api_key_;
};

// Decorator appending one JSON line per provider call to an audit file.
// Every occurrence of `secret` in logged text is replaced with "[REDACTED]".
class AuditingProvider : public CompletionProvider {
public:
    AuditingProvider(std::shared_ptr<CompletionProvider> inner, std::string path, std::string secret,
                     Clock clock = now_utc);

    std::string complete(const PromptBundle& bundle, const GenerationParams& params) override;

private:
    void write(const nlohmann::json& record);

    std::shared_ptr<CompletionProvider> inner_;
    std::string path_;
    std::string secret_;
    Clock clock_;
    std::mutex mutex_;
};

std::string redact(std::string text, std::string_view secret);

} // namespace pfb
