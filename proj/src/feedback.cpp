#include "pfb/feedback.hpp"

#include "pfb/text.hpp"

#include <algorithm>
#include <stdexcept>

namespace pfb {

FeedbackEngine::FeedbackEngine(std::shared_ptr<CompletionProvider> provider,
                               std::vector<FewShotExample> examples)
    : FeedbackEngine(std::move(provider), std::move(examples), Options{}, now_utc, IdGenerator{}) {}

FeedbackEngine::FeedbackEngine(std::shared_ptr<CompletionProvider> provider,
                               std::vector<FewShotExample> examples, Options options, Clock clock,
                               IdGenerator ids)
    : provider_(std::move(provider)), examples_(std::move(examples)), options_(std::move(options)),
      clock_(std::move(clock)), ids_(std::move(ids)) {
    if (!provider_) throw std::invalid_argument("FeedbackEngine needs a provider");
}

Timestamp FeedbackEngine::tick() {
    std::lock_guard lock(mutex_);
    return clock_();
}

std::string FeedbackEngine::next_id() {
    std::lock_guard lock(mutex_);
    return ids_.next();
}

PromptBundle FeedbackEngine::build_prompt(std::string_view selected_text,
                                          const PersonaSnapshot& persona) const {
    return assemble(selected_text, persona, examples_);
}

CondenseOutcome FeedbackEngine::condense(std::string_view feedback, const GenerationParams& params) {
    if (text::trim(feedback).empty()) throw std::invalid_argument("condense needs non-empty feedback");
    PromptBundle bundle{{{Role::System, options_.condense_prompt}, {Role::User, std::string(feedback)}}};
    try {
        std::string shorter = provider_->complete(bundle, params);
        if (!text::trim(shorter).empty() && text::count_words(shorter) < text::count_words(feedback))
            return {std::move(shorter), true};
    } catch (const ProviderError&) {
    }
    return {std::string(feedback), false};
}

FeedbackCard FeedbackEngine::generate(const FeedbackRequest& req, const Persona& persona,
                                      const GenerationParams& params, bool condense_pass) {
    if (text::trim(req.selected_text).empty() || req.start >= req.end)
        throw Error(ErrorCode::EmptySelection, "selection is empty");
    params.validate();

    const Timestamp requested_at = tick();
    PersonaSnapshot frozen = snapshot(persona, requested_at);
    const PromptBundle bundle = build_prompt(req.selected_text, frozen);

    std::string raw = provider_->complete(bundle, params);
    if (text::trim(raw).empty())
        throw ProviderError(ProviderFailure::BadResponse, "provider returned empty feedback");

    bool condensed = false;
    if (condense_pass) {
        auto outcome = condense(raw, params);
        raw = std::move(outcome.text);
        condensed = outcome.condensed;
    }
    const Timestamp finished_at = std::max(tick(), requested_at);

    return FeedbackCard{next_id(),
                        req.document_id,
                        frozen.name(),
                        std::move(frozen),
                        {req.start, req.end, req.selected_text},
                        make_result(std::move(raw), finished_at - requested_at, condensed),
                        finished_at};
}

FeedbackCard FeedbackEngine::generate_feedback(History& history, const FeedbackRequest& req,
                                               const Persona& persona, const GenerationParams& params,
                                               bool condense_pass) {
    FeedbackCard card = generate(req, persona, params, condense_pass);
    history.append(card);
    return card;
}

} // namespace pfb
