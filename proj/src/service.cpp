#include "pfb/service.hpp"

#include "pfb/error.hpp"
#include "pfb/text.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pfb {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view provider_kind_name(ProviderKind k) { return k == ProviderKind::Mock ? "mock" : "remote"; }

std::optional<ProviderKind> provider_kind_from_name(std::string_view name) {
    if (name == "mock") return ProviderKind::Mock;
    if (name == "remote") return ProviderKind::Remote;
    return std::nullopt;
}

void ServiceConfig::validate() const {
    if (provider == ProviderKind::Remote && remote_base_url.empty())
        throw Error(ErrorCode::MalformedConfig, "provider=remote requires remote_base_url");
    if (port < 0 || port > 65535) throw Error(ErrorCode::MalformedConfig, "port out of range");
    if (max_in_flight == 0) throw Error(ErrorCode::MalformedConfig, "max_in_flight must be positive");
    try {
        generation.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedConfig, e.what());
    }
    std::error_code ec;
    fs::create_directories(data_dir, ec);
    const fs::path probe = data_dir / ".write-probe";
    {
        std::ofstream out(probe);
        if (!out) throw Error(ErrorCode::MalformedConfig, "data directory " + data_dir.string() + " is not writable");
    }
    fs::remove(probe, ec);
}

ServiceConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedConfig, std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedConfig, "config must be an object");

    ServiceConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "host") c.host = value.get<std::string>();
            else if (key == "port") c.port = value.get<int>();
            else if (key == "provider") {
                auto kind = provider_kind_from_name(value.get<std::string>());
                if (!kind) throw Error(ErrorCode::MalformedConfig, "provider must be 'mock' or 'remote'");
                c.provider = *kind;
            } else if (key == "remote_base_url") c.remote_base_url = value.get<std::string>();
            else if (key == "api_key_env") c.api_key_env = value.get<std::string>();
            else if (key == "model_id") c.generation.model_id = value.get<std::string>();
            else if (key == "temperature") c.generation.temperature = value.get<double>();
            else if (key == "max_output_tokens") c.generation.max_output_tokens = value.get<int>();
            else if (key == "request_timeout_ms") c.generation.request_timeout = Millis{value.get<std::int64_t>()};
            else if (key == "data_dir") c.data_dir = value.get<std::string>();
            else if (key == "condense") c.condense = value.get<bool>();
            else if (key == "few_shot_path") c.few_shot_path = value.get<std::string>();
            else if (key == "condense_prompt") c.condense_prompt = value.get<std::string>();
            else if (key == "max_in_flight") c.max_in_flight = value.get<std::size_t>();
            else if (key == "preview_sentences") c.preview_sentences = value.get<std::size_t>();
            else if (key == "auth_token") c.auth_token = value.get<std::string>();
            else if (key == "audit_path") c.audit_path = value.get<std::string>();
            else throw Error(ErrorCode::MalformedConfig, "unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedConfig, std::string("config: ") + e.what());
    }
    return c;
}

ServiceConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

void apply_environment(ServiceConfig& config) {
    if (const char* key = std::getenv(config.api_key_env.c_str())) config.api_key = key;
}

std::shared_ptr<CompletionProvider> make_provider(const ServiceConfig& config) {
    std::shared_ptr<CompletionProvider> provider;
    if (config.provider == ProviderKind::Remote)
        provider = std::make_shared<RemoteProvider>(config.remote_base_url, config.api_key);
    else
        provider = std::make_shared<MockProvider>(MockProvider::Options{config.condense_prompt, Millis{0}});
    if (!config.audit_path.empty())
        provider = std::make_shared<AuditingProvider>(provider, config.audit_path, config.api_key);
    return provider;
}

void atomic_write(const fs::path& path, std::string_view content) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot replace " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json document_to_json(const DocumentRecord& d) {
    return {{"id", d.id}, {"title", d.title}, {"text", d.text}, {"updated_at", format_rfc3339(d.updated_at)}};
}

namespace {

DocumentRecord document_from_json(const json& j) {
    return {j.at("id").get<std::string>(), j.value("title", std::string{}),
            text::normalize_newlines(j.at("text").get<std::string>()),
            parse_rfc3339(j.at("updated_at").get<std::string>())};
}

[[noreturn]] void bad_request(const std::string& message) { throw Error(ErrorCode::MalformedRequest, message); }

std::size_t index_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer() || it->get<long long>() < 0)
        bad_request(std::string("field '") + key + "' must be a non-negative integer");
    return it->get<std::size_t>();
}

SectionKind section_arg(std::string_view section) {
    auto kind = section_from_key(section);
    if (!kind) bad_request("unknown section '" + std::string(section) + "'");
    return *kind;
}

} // namespace

Service::Service(ServiceConfig config, std::shared_ptr<CompletionProvider> provider,
                 std::vector<FewShotExample> few_shot, Clock clock, std::optional<std::uint64_t> id_seed)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      engine_(provider_, std::move(few_shot), FeedbackEngine::Options{config_.condense_prompt},
              [this] { return now(); }, id_seed ? IdGenerator{*id_seed + 1} : IdGenerator{}),
      clock_(std::move(clock)),
      ids_(id_seed ? IdGenerator{*id_seed} : IdGenerator{}),
      in_flight_(static_cast<std::ptrdiff_t>(config_.max_in_flight)) {
    fs::create_directories(config_.data_dir / "personas");
    fs::create_directories(config_.data_dir / "documents");
    load_state();
}

Timestamp Service::now() const {
    std::lock_guard lock(clock_mutex_);
    return clock_();
}

std::string Service::new_id() {
    std::lock_guard lock(ids_mutex_);
    return ids_.next();
}

fs::path Service::document_dir(const std::string& id) const { return config_.data_dir / "documents" / id; }

fs::path Service::persona_path(const std::string& id) const {
    return config_.data_dir / "personas" / (id + ".json");
}

void Service::load_state() {
    for (const auto& entry : fs::directory_iterator(config_.data_dir / "personas")) {
        if (entry.path().extension() != ".json") continue;
        Persona p = parse_persona(read_file(entry.path()));
        personas_.emplace(p.id, std::move(p));
    }
    for (const auto& entry : fs::directory_iterator(config_.data_dir / "documents")) {
        if (!entry.is_directory() || !fs::exists(entry.path() / "document.json")) continue;
        auto state = std::make_unique<DocumentState>();
        try {
            state->record = document_from_json(json::parse(read_file(entry.path() / "document.json")));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::Io, "corrupt document " + entry.path().string() + ": " + e.what());
        }
        state->history = History(state->record.id);
        if (fs::exists(entry.path() / "history.json"))
            state->history = load_history(read_file(entry.path() / "history.json"));
        if (fs::exists(entry.path() / "events.jsonl"))
            state->log = SessionLog::from_jsonl(read_file(entry.path() / "events.jsonl"));
        documents_.emplace(state->record.id, std::move(state));
    }
}

Service::DocumentState& Service::document(const std::string& id) const {
    std::shared_lock lock(documents_mutex_);
    auto it = documents_.find(id);
    if (it == documents_.end()) throw Error(ErrorCode::DocumentNotFound, "document " + id + " not found");
    return *it->second;
}

Persona Service::persona(const std::string& id) const {
    std::shared_lock lock(personas_mutex_);
    auto it = personas_.find(id);
    if (it == personas_.end()) throw Error(ErrorCode::PersonaNotFound, "persona " + id + " not found");
    return it->second;
}

void Service::persist_document(const DocumentState& d) const {
    atomic_write(document_dir(d.record.id) / "document.json", document_to_json(d.record).dump(2));
}

void Service::persist_history(const std::string& document_id, const History& h) const {
    atomic_write(document_dir(document_id) / "history.json", save_history(h));
}

void Service::append_event(DocumentState& d, EventKind kind, json payload) {
    Timestamp at = now();
    if (auto last = d.log.last_timestamp(); last && at < *last) at = *last;
    SessionEvent e{at, kind, std::move(payload)};
    const std::string line = event_to_json(e).dump() + "\n";
    d.log.record(std::move(e));
    std::ofstream out(document_dir(d.record.id) / "events.jsonl", std::ios::app | std::ios::binary);
    out << line;
}

json Service::health() const {
    std::shared_lock dl(documents_mutex_);
    std::shared_lock pl(personas_mutex_);
    return {{"status", "ok"},
            {"provider", provider_kind_name(config_.provider)},
            {"few_shot_examples", engine_.examples().size()},
            {"documents", documents_.size()},
            {"personas", personas_.size()}};
}

json Service::create_document(std::string title, std::string text) {
    auto state = std::make_unique<DocumentState>();
    state->record = {new_id(), std::move(title), text::normalize_newlines(text), now()};
    state->history = History(state->record.id);
    persist_document(*state);
    persist_history(state->record.id, state->history);
    json out = document_to_json(state->record);
    std::unique_lock lock(documents_mutex_);
    documents_.emplace(state->record.id, std::move(state));
    return out;
}

json Service::get_document(const std::string& id) const {
    DocumentState& d = document(id);
    std::lock_guard lock(d.mutex);
    return document_to_json(d.record);
}

json Service::update_document(const std::string& id, std::optional<std::string> title,
                              std::optional<std::string> text) {
    DocumentState& d = document(id);
    std::lock_guard lock(d.mutex);
    DocumentRecord updated = d.record;
    if (title) updated.title = std::move(*title);
    if (text) updated.text = text::normalize_newlines(*text);
    updated.updated_at = std::max(now(), d.record.updated_at);
    atomic_write(document_dir(id) / "document.json", document_to_json(updated).dump(2));
    d.record = std::move(updated);
    return document_to_json(d.record);
}

void Service::store_persona(const Persona& p) { atomic_write(persona_path(p.id), serialize_persona(p)); }

json Service::list_personas() const {
    std::shared_lock lock(personas_mutex_);
    std::vector<const Persona*> sorted;
    for (const auto& [_, p] : personas_) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](const Persona* a, const Persona* b) {
        return a->created_at != b->created_at ? a->created_at < b->created_at : a->id < b->id;
    });
    json out = json::array();
    for (const Persona* p : sorted) out.push_back(persona_to_json(*p));
    return out;
}

json Service::create_persona(std::string name) {
    Persona p;
    {
        std::lock_guard lock(ids_mutex_);
        p = pfb::create_persona(std::move(name), ids_, now());
    }
    std::unique_lock lock(personas_mutex_);
    store_persona(p);
    personas_.emplace(p.id, p);
    return persona_to_json(p);
}

json Service::get_persona(const std::string& id) const { return persona_to_json(persona(id)); }

Persona Service::mutate_persona(const std::string& id, const std::function<Persona(Persona)>& fn) {
    std::unique_lock lock(personas_mutex_);
    auto it = personas_.find(id);
    if (it == personas_.end()) throw Error(ErrorCode::PersonaNotFound, "persona " + id + " not found");
    Persona updated = fn(it->second);
    store_persona(updated);
    it->second = updated;
    return updated;
}

json Service::replace_persona(const std::string& id, const json& body) {
    if (!body.is_object()) bad_request("persona body must be an object");
    const Timestamp at = now();
    return persona_to_json(mutate_persona(id, [&](Persona p) {
        std::string name = p.name;
        if (auto it = body.find("name"); it != body.end()) {
            if (!it->is_string()) bad_request("name must be a string");
            name = it->get<std::string>();
        }
        Sections sections = p.sections;
        if (auto it = body.find("sections"); it != body.end()) {
            try {
                json full = *it;
                if (full.is_object())
                    for (SectionKind k : kAllSections)
                        if (!full.contains(section_key(k))) full[std::string(section_key(k))] = json::array();
                sections = sections_from_json(full, "/sections");
            } catch (const Error& e) {
                if (e.code() == ErrorCode::MalformedPersona && std::string(e.what()).find("empty attribute") != std::string::npos)
                    throw Error(ErrorCode::EmptyAttribute, e.what());
                throw Error(ErrorCode::MalformedRequest, e.what());
            }
        }
        return pfb::replace_contents(std::move(p), std::move(name), std::move(sections), at);
    }));
}

json Service::delete_persona(const std::string& id) {
    std::unique_lock lock(personas_mutex_);
    auto it = personas_.find(id);
    if (it == personas_.end()) throw Error(ErrorCode::PersonaNotFound, "persona " + id + " not found");
    std::error_code ec;
    fs::remove(persona_path(id), ec);
    if (ec) throw Error(ErrorCode::Io, "cannot delete persona file: " + ec.message());
    personas_.erase(it);
    return {{"deleted", id}};
}

json Service::add_pair(const std::string& id, std::string_view section, AttributePair pair) {
    const SectionKind kind = section_arg(section);
    const Timestamp at = now();
    return persona_to_json(mutate_persona(id, [&](Persona p) {
        return pfb::add_pair(std::move(p), kind, std::move(pair), at);
    }));
}

json Service::edit_pair(const std::string& id, std::string_view section, std::size_t index, AttributePair pair) {
    const SectionKind kind = section_arg(section);
    const Timestamp at = now();
    return persona_to_json(mutate_persona(id, [&](Persona p) {
        return pfb::edit_pair(std::move(p), kind, index, std::move(pair), at);
    }));
}

json Service::remove_pair(const std::string& id, std::string_view section, std::size_t index) {
    const SectionKind kind = section_arg(section);
    const Timestamp at = now();
    return persona_to_json(mutate_persona(id, [&](Persona p) {
        return pfb::remove_pair(std::move(p), kind, index, at);
    }));
}

json Service::guidance() const {
    json out = json::array();
    for (const auto& g : section_guidance()) {
        json examples = json::array();
        for (const auto& pair : g.example_pairs)
            examples.push_back({{"attribute", pair.attribute}, {"description", pair.description}});
        out.push_back({{"section", section_key(g.section)},
                       {"title", g.title},
                       {"description", g.description},
                       {"examples", std::move(examples)}});
    }
    return out;
}

Service::Selection Service::resolve_selection(const std::string& document_id, const json& body) const {
    if (!body.is_object()) bad_request("request body must be an object");
    auto pid = body.find("persona_id");
    if (pid == body.end() || !pid->is_string()) bad_request("persona_id is required");
    auto sel = body.find("selection");
    if (sel == body.end() || !sel->is_object()) bad_request("selection {start, end} is required");
    const std::size_t start = index_field(*sel, "start");
    const std::size_t end = index_field(*sel, "end");

    DocumentState& d = document(document_id);
    std::string selected;
    {
        std::lock_guard lock(d.mutex);
        if (end > text::codepoint_count(d.record.text))
            throw Error(ErrorCode::StaleSelection, "selection [" + std::to_string(start) + ", " +
                                                       std::to_string(end) + ") exceeds the document");
        if (start >= end) throw Error(ErrorCode::EmptySelection, "selection is empty");
        selected = *text::codepoint_substr(d.record.text, start, end);
    }
    if (text::trim(selected).empty()) throw Error(ErrorCode::EmptySelection, "selection is blank");
    Persona p = persona(pid->get<std::string>());
    return {std::move(p), {document_id, pid->get<std::string>(), start, end, std::move(selected)}};
}

json Service::card_json(const FeedbackCard& card) const {
    json j = card_to_json(card);
    j["preview"] = preview(card, config_.preview_sentences);
    return j;
}

json Service::debug_prompt(const std::string& document_id, const json& body) const {
    Selection s = resolve_selection(document_id, body);
    return {{"dry_run", true},
            {"bundle", bundle_to_json(engine_.build_prompt(s.request.selected_text, snapshot(s.persona, now())))}};
}

json Service::request_feedback(const std::string& document_id, const json& body) {
    if (config_.dump_prompt) {
        json out = debug_prompt(document_id, body);
        std::cout << out["bundle"].dump(2) << std::endl;
        return out;
    }
    bool condense = config_.condense;
    if (auto it = body.find("condense"); body.is_object() && it != body.end()) {
        if (!it->is_boolean()) bad_request("condense must be a boolean");
        condense = it->get<bool>();
    }
    Selection s = resolve_selection(document_id, body);
    DocumentState& d = document(document_id);

    FeedbackCard card = [&] {
        in_flight_.acquire();
        try {
            FeedbackCard c = engine_.generate(s.request, s.persona, config_.generation, condense);
            in_flight_.release();
            return c;
        } catch (const Error& e) {
            in_flight_.release();
            if (e.code() == ErrorCode::ProviderError) {
                std::lock_guard lock(d.mutex);
                append_event(d, EventKind::FeedbackFailed,
                             {{"persona_id", s.request.persona_id}, {"code", to_wire(e.code())}});
            }
            throw;
        } catch (...) {
            in_flight_.release();
            throw;
        }
    }();

    std::lock_guard lock(d.mutex);
    History updated = d.history;
    updated.append(card);
    persist_history(document_id, updated);
    d.history = std::move(updated);
    append_event(d, EventKind::FeedbackRequested, {{"persona_id", s.request.persona_id}, {"card_id", card.id}});
    return card_json(card);
}

json Service::history(const std::string& document_id) const {
    DocumentState& d = document(document_id);
    std::lock_guard lock(d.mutex);
    json cards = json::array();
    for (const auto& c : d.history.cards()) cards.push_back(card_json(c));
    return {{"document_id", document_id}, {"cards", std::move(cards)}};
}

json Service::delete_card(const std::string& document_id, const std::string& card_id) {
    DocumentState& d = document(document_id);
    std::lock_guard lock(d.mutex);
    History updated = d.history;
    updated.remove(card_id);
    persist_history(document_id, updated);
    d.history = std::move(updated);
    append_event(d, EventKind::FeedbackDeleted, {{"card_id", card_id}});
    return {{"deleted", card_id}};
}

json Service::card_context(const std::string& document_id, const std::string& card_id) const {
    DocumentState& d = document(document_id);
    std::lock_guard lock(d.mutex);
    const FeedbackCard* card = d.history.find(card_id);
    if (!card) throw Error(ErrorCode::CardNotFound, "card " + card_id + " not found");
    return {{"card_id", card_id},
            {"start", card->context.start},
            {"end", card->context.end},
            {"selected_text", card->context.selected_text},
            {"stale", context_is_stale(card->context, d.record.text)}};
}

json Service::post_events(const std::string& document_id, const json& body) {
    const json* events = &body;
    if (body.is_object() && body.contains("events")) events = &body["events"];
    if (!events->is_array()) bad_request("expected {events: [...]} or an array of events");
    std::vector<SessionEvent> parsed;
    for (const auto& e : *events) parsed.push_back(event_from_json(e));

    DocumentState& d = document(document_id);
    std::lock_guard lock(d.mutex);
    SessionLog updated = d.log;
    for (auto& e : parsed) updated.record(e);
    std::ofstream out(document_dir(document_id) / "events.jsonl", std::ios::app | std::ios::binary);
    for (const auto& e : parsed) out << event_to_json(e).dump() << '\n';
    d.log = std::move(updated);
    return {{"recorded", parsed.size()}, {"total", d.log.size()}};
}

json Service::stats(const std::string& document_id) const {
    DocumentState& d = document(document_id);
    std::lock_guard lock(d.mutex);
    return stats_to_json(compute_stats(d.log, d.record.text));
}

json Service::timeline(const std::string& document_id) const {
    DocumentState& d = document(document_id);
    std::lock_guard lock(d.mutex);
    return timeline_to_json(focus_timeline(d.log));
}

json Service::contribution(const std::string& document_id) const {
    PersonaIndex index;
    {
        std::shared_lock lock(personas_mutex_);
        for (const auto& [_, p] : personas_) index.add_persona(p);
    }
    DocumentState& d = document(document_id);
    std::lock_guard lock(d.mutex);
    index.add_history(d.history);
    return contribution_to_json(attribute_contribution(d.log, index));
}

} // namespace pfb
