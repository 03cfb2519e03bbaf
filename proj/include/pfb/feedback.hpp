#pragma once

#include "pfb/history.hpp"
#include "pfb/prompt.hpp"
#include "pfb/provider.hpp"

#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace pfb {

struct FeedbackRequest {
    std::string document_id;
    std::string persona_id;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string selected_text;
};

struct CondenseOutcome {
    std::string text;
    bool condensed = false;
};

// Builds the prompt, calls the provider, optionally condenses, and produces
// cards. The 200-word limit is measured (over_limit), never enforced by cutting.
class FeedbackEngine {
public:
    struct Options {
        std::string condense_prompt = default_condense_prompt();
    };

    FeedbackEngine(std::shared_ptr<CompletionProvider> provider, std::vector<FewShotExample> examples);
    FeedbackEngine(std::shared_ptr<CompletionProvider> provider, std::vector<FewShotExample> examples,
                   Options options, Clock clock, IdGenerator ids);

    PromptBundle build_prompt(std::string_view selected_text, const PersonaSnapshot& persona) const;

    // Throws Error(EmptySelection) or ProviderError. Creates no state on failure.
    FeedbackCard generate(const FeedbackRequest& req, const Persona& persona,
                          const GenerationParams& params, bool condense_pass);

    // generate() followed by history.append(); history is untouched on failure.
    FeedbackCard generate_feedback(History& history, const FeedbackRequest& req, const Persona& persona,
                                   const GenerationParams& params, bool condense_pass);

    // Second pass; keeps the original unless the provider's answer has strictly
    // fewer words. Provider failures also keep the original.
    CondenseOutcome condense(std::string_view feedback, const GenerationParams& params);

    const std::vector<FewShotExample>& examples() const { return examples_; }
    const Options& options() const { return options_; }

private:
    Timestamp tick();
    std::string next_id();

    std::shared_ptr<CompletionProvider> provider_;
    std::vector<FewShotExample> examples_;
    Options options_;
    Clock clock_;
    IdGenerator ids_;
    std::mutex mutex_;
};

} // namespace pfb
