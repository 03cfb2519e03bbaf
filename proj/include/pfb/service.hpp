#pragma once

#include "pfb/analytics.hpp"
#include "pfb/feedback.hpp"
#include "pfb/history.hpp"
#include "pfb/persona.hpp"
#include "pfb/provider.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>

#include <json.hpp>

namespace pfb {

enum class ProviderKind { Mock, Remote };

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    ProviderKind provider = ProviderKind::Mock;
    std::string remote_base_url;
    std::string api_key_env = "OPENAI_API_KEY";
    std::string api_key;  // resolved from api_key_env, never read from the config file
    GenerationParams generation;
    std::filesystem::path data_dir = "data";
    bool condense = false;
    std::string few_shot_path;
    std::string condense_prompt = default_condense_prompt();
    std::size_t max_in_flight = 4;
    std::size_t preview_sentences = kDefaultPreviewSentences;
    std::string auth_token;  // empty: no auth
    std::string audit_path;  // empty: no provider audit log
    bool dump_prompt = false;

    // Throws Error(MalformedConfig); creates data_dir if missing.
    void validate() const;
};

// JSON config file; unknown keys are rejected.
ServiceConfig parse_config(std::string_view text);
ServiceConfig load_config(const std::filesystem::path& path);
// Reads the API key from the environment variable named by api_key_env.
void apply_environment(ServiceConfig& config);

std::string_view provider_kind_name(ProviderKind k);
std::optional<ProviderKind> provider_kind_from_name(std::string_view name);

// Remote or mock provider per config, wrapped for auditing when configured.
std::shared_ptr<CompletionProvider> make_provider(const ServiceConfig& config);

// Writes to a sibling temp file and renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

struct DocumentRecord {
    std::string id;
    std::string title;
    std::string text;  // LF newlines only
    Timestamp updated_at;
};

nlohmann::json document_to_json(const DocumentRecord& d);

// All request/response contracts of the HTTP facade, independent of transport.
// Layout under data_dir:
//   personas/<id>.json
//   documents/<id>/document.json, history.json, events.jsonl
class Service {
public:
    Service(ServiceConfig config, std::shared_ptr<CompletionProvider> provider,
            std::vector<FewShotExample> few_shot, Clock clock = now_utc,
            std::optional<std::uint64_t> id_seed = std::nullopt);

    const ServiceConfig& config() const { return config_; }

    nlohmann::json health() const;

    nlohmann::json create_document(std::string title, std::string text);
    nlohmann::json get_document(const std::string& id) const;
    nlohmann::json update_document(const std::string& id, std::optional<std::string> title,
                                   std::optional<std::string> text);

    nlohmann::json list_personas() const;
    nlohmann::json create_persona(std::string name);
    nlohmann::json get_persona(const std::string& id) const;
    nlohmann::json replace_persona(const std::string& id, const nlohmann::json& body);
    nlohmann::json delete_persona(const std::string& id);
    nlohmann::json add_pair(const std::string& id, std::string_view section, AttributePair pair);
    nlohmann::json edit_pair(const std::string& id, std::string_view section, std::size_t index,
                             AttributePair pair);
    nlohmann::json remove_pair(const std::string& id, std::string_view section, std::size_t index);
    nlohmann::json guidance() const;

    // Body: {persona_id, selection: {start, end}, condense?}. The selected text is
    // re-derived from the stored document.
    nlohmann::json request_feedback(const std::string& document_id, const nlohmann::json& body);
    // Same body as request_feedback; returns the bundle without calling the provider.
    nlohmann::json debug_prompt(const std::string& document_id, const nlohmann::json& body) const;

    nlohmann::json history(const std::string& document_id) const;
    nlohmann::json delete_card(const std::string& document_id, const std::string& card_id);
    nlohmann::json card_context(const std::string& document_id, const std::string& card_id) const;

    // Body: {events: [...]} or a bare array.
    nlohmann::json post_events(const std::string& document_id, const nlohmann::json& body);
    nlohmann::json stats(const std::string& document_id) const;
    nlohmann::json timeline(const std::string& document_id) const;
    nlohmann::json contribution(const std::string& document_id) const;

private:
    struct DocumentState {
        mutable std::mutex mutex;
        DocumentRecord record;
        History history;
        SessionLog log;
    };

    struct Selection {
        Persona persona;
        FeedbackRequest request;
    };

    std::filesystem::path document_dir(const std::string& id) const;
    std::filesystem::path persona_path(const std::string& id) const;
    void load_state();
    DocumentState& document(const std::string& id) const;
    Persona persona(const std::string& id) const;
    Selection resolve_selection(const std::string& document_id, const nlohmann::json& body) const;
    void store_persona(const Persona& p);
    void persist_document(const DocumentState& d) const;
    void persist_history(const std::string& document_id, const History& h) const;
    void append_event(DocumentState& d, EventKind kind, nlohmann::json payload);
    Persona mutate_persona(const std::string& id, const std::function<Persona(Persona)>& fn);
    nlohmann::json card_json(const FeedbackCard& card) const;

    ServiceConfig config_;
    std::shared_ptr<CompletionProvider> provider_;
    FeedbackEngine engine_;
    Clock clock_;
    mutable std::mutex clock_mutex_;
    mutable std::mutex ids_mutex_;
    IdGenerator ids_;

    mutable std::shared_mutex documents_mutex_;
    std::map<std::string, std::unique_ptr<DocumentState>> documents_;

    mutable std::shared_mutex personas_mutex_;
    std::map<std::string, Persona> personas_;

    std::counting_semaphore<> in_flight_;

    Timestamp now() const;
    std::string new_id();
};

} // namespace pfb
