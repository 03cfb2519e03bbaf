// Acceptance suite: one PASS/FAIL line per criterion; exit status is non-zero on any failure.
#include "pfb/analytics.hpp"
#include "pfb/analyzer.hpp"
#include "pfb/error.hpp"
#include "pfb/feedback.hpp"
#include "pfb/prompt.hpp"
#include "pfb/service.hpp"
#include "pfb/text.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

using namespace pfb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const Timestamp t0 = from_unix_ms(1709287200000);

struct Failure {
    std::string what;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw Failure{what};
}

std::string fixture(const std::string& name) {
    std::ifstream in(std::string(PFB_FIXTURES) + "/" + name, std::ios::binary);
    if (!in) throw Failure{"missing fixture " + name};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("pfb-accept-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string words(std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) out += (i ? " w" : "w") + std::to_string(i);
    return out;
}

PersonaSnapshot appendix_persona() {
    Sections s;
    s[SectionKind::RoleTask].push_back({"role", "reviewer"});
    s[SectionKind::Background].push_back({"occupation", "CS professor"});
    s[SectionKind::StylePreferences].push_back({"writing style", "formal"});
    s[SectionKind::StylePreferences].push_back({"sentence length", "short"});
    return PersonaSnapshot{"p", "Reviewer", s, t0};
}

void prompt_golden() {
    const std::string golden = fixture("appendix_user_message.txt");
    const std::string rendered = render_user_message("Lorem ipsum dolor sit amet", appendix_persona());
    expect(rendered == golden, "rendered user message differs from the golden block");
    expect(rendered.find("- Content: {}") != std::string::npos, "missing empty content block");
    const PromptBundle b = assemble("Lorem ipsum dolor sit amet", appendix_persona(), {});
    expect(b.messages.back().content == golden, "bundle's final message differs from the golden block");
}

void bundle_shape() {
    const auto shipped = load_few_shot_file(PFB_DEFAULT_FEW_SHOT);
    expect(shipped.size() == 6, "shipped few-shot set must hold 6 examples");
    for (std::size_t k : {0u, 1u, 6u}) {
        const std::vector<FewShotExample> ex(shipped.begin(), shipped.begin() + static_cast<std::ptrdiff_t>(k));
        const PromptBundle b = assemble("Lorem ipsum dolor sit amet", appendix_persona(), ex);
        expect(b.messages.size() == 2 * k + 2, "k=" + std::to_string(k) + ": wrong bundle length");
        expect(has_feedback_role_pattern(b), "k=" + std::to_string(k) + ": wrong role pattern");
        expect(b.messages[0].role == Role::System, "first message must be the system prompt");
        for (std::size_t i = 0; i < k; ++i) {
            expect(b.messages[1 + 2 * i].role == Role::User && b.messages[2 + 2 * i].role == Role::Assistant,
                   "example pair out of order");
            expect(b.messages[2 + 2 * i].content == ex[i].feedback_text, "assistant message is not the example");
        }
    }
}

json feedback_body(const std::string& persona, std::size_t start, std::size_t end) {
    return {{"persona_id", persona}, {"selection", {{"start", start}, {"end", end}}}};
}

struct Session {
    std::unique_ptr<Service> svc;
    std::string doc;
    std::string persona;
};

Session open_session(const fs::path& dir, std::shared_ptr<CompletionProvider> provider, ServiceConfig config = {}) {
    config.data_dir = dir;
    Session s;
    s.svc = std::make_unique<Service>(config, std::move(provider), load_few_shot_file(PFB_DEFAULT_FEW_SHOT),
                                      stepping_clock(t0, Millis{250}), 99);
    s.doc = s.svc->create_document("Draft", "Personas help writers anticipate readers. They are cheap to build.")["id"];
    s.persona = s.svc->create_persona("Reviewer")["id"];
    s.svc->add_pair(s.persona, "role_task", {"role", "reviewer"});
    s.svc->add_pair(s.persona, "background", {"occupation", "CS professor"});
    s.svc->add_pair(s.persona, "style_preferences", {"writing style", "formal"});
    return s;
}

void end_to_end_determinism() {
    std::string reference;
    for (int i = 0; i < 100; ++i) {
        TempDir dir;
        Session s = open_session(dir.path, std::make_shared<MockProvider>());
        const std::string card = s.svc->request_feedback(s.doc, feedback_body(s.persona, 0, 42)).dump();
        if (i == 0) reference = card;
        expect(card == reference, "run " + std::to_string(i) + " produced a different card");
    }

    TempDir dir;
    ServiceConfig config;
    config.generation.request_timeout = Millis{50};
    Session s = open_session(dir.path, std::make_shared<MockProvider>(MockProvider::Options{default_condense_prompt(), Millis{500}}),
                             config);
    const json doc_before = s.svc->get_document(s.doc);
    const json history_before = s.svc->history(s.doc);
    const fs::path doc_dir = dir.path / "documents" / s.doc;
    const std::string doc_file = read_file(doc_dir / "document.json");
    const std::string history_file = read_file(doc_dir / "history.json");
    try {
        s.svc->request_feedback(s.doc, feedback_body(s.persona, 0, 42));
        throw Failure{"timeout did not raise"};
    } catch (const Error& e) {
        expect(e.code() == ErrorCode::ProviderError, "timeout must surface as PROVIDER_ERROR");
        expect(to_wire(e.code()) == "PROVIDER_ERROR", "wire code mismatch");
    }
    expect(s.svc->get_document(s.doc) == doc_before, "document changed after a failed request");
    expect(s.svc->history(s.doc) == history_before, "history changed after a failed request");
    expect(read_file(doc_dir / "document.json") == doc_file, "document file changed");
    expect(read_file(doc_dir / "history.json") == history_file, "history file changed");
}

FeedbackCard make_card(std::string id, Timestamp at) {
    Sections s;
    s[SectionKind::RoleTask].push_back({"role", "reviewer"});
    return FeedbackCard{std::move(id), "doc", "Reviewer", PersonaSnapshot{"p", "Reviewer", s, at},
                        {0, 5, "Hello"}, make_result("Fine. Good.", Millis{3}, false), at};
}

void history_properties() {
    std::mt19937 rng(2024);
    for (int round = 0; round < 1000; ++round) {
        History h("doc");
        std::vector<FeedbackCard> model;
        for (int step = 0; step < 40; ++step) {
            if (model.empty() || rng() % 3 != 0) {
                FeedbackCard c = make_card("c" + std::to_string(round) + "-" + std::to_string(step),
                                           t0 + Millis{static_cast<int>(rng() % 25)});
                h.append(c);
                model.push_back(std::move(c));
            } else {
                const std::size_t i = rng() % model.size();
                h.remove(model[i].id);
                model.erase(model.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
        expect(h.size() == model.size(), "size mismatch in round " + std::to_string(round));
        for (std::size_t i = 1; i < h.cards().size(); ++i) {
            const auto& a = h.cards()[i - 1];
            const auto& b = h.cards()[i];
            expect(a.created_at > b.created_at || (a.created_at == b.created_at && a.id > b.id),
                   "cards not newest first in round " + std::to_string(round));
        }
    }

    // Concurrent persona edits while feedback is requested: every card keeps the
    // snapshot it was generated with.
    TempDir dir;
    Session s = open_session(dir.path, std::make_shared<MockProvider>());
    std::atomic<bool> done{false};
    std::thread editor([&] {
        for (int i = 0; !done; ++i) {
            const std::string v = "v" + std::to_string(i);
            s.svc->replace_persona(s.persona, {{"sections",
                                                {{"role_task", {{{"attribute", "role"}, {"description", v}}}},
                                                 {"background", {{{"attribute", "field"}, {"description", v}}}}}}});
        }
    });
    std::vector<json> issued;
    std::mutex issued_mutex;
    std::vector<std::thread> requesters;
    for (int t = 0; t < 3; ++t)
        requesters.emplace_back([&] {
            for (int i = 0; i < 20; ++i) {
                json card = s.svc->request_feedback(s.doc, feedback_body(s.persona, 0, 42));
                std::lock_guard lock(issued_mutex);
                issued.push_back(std::move(card));
            }
        });
    for (auto& t : requesters) t.join();
    done = true;
    editor.join();

    const json stored = s.svc->history(s.doc)["cards"];
    expect(stored.size() == issued.size(), "history lost cards under concurrency");
    std::map<std::string, json> by_id;
    for (const auto& c : stored) by_id[c["id"]] = c;
    for (const auto& c : issued) {
        expect(by_id.count(c["id"]) && by_id[c["id"]] == c, "stored card differs from the issued card");
        const json& sections = c["persona"]["sections"];
        if (!sections["background"].empty() && sections["background"][0]["attribute"] == "field")
            expect(sections["role_task"][0]["description"] == sections["background"][0]["description"],
                   "snapshot mixes two persona versions");
    }
    for (std::size_t i = 1; i < stored.size(); ++i)
        expect(parse_rfc3339(stored[i - 1]["created_at"].get<std::string>()) >= parse_rfc3339(stored[i]["created_at"].get<std::string>()),
               "concurrent history not newest first");
}

void analytics_oracle() {
    const std::string raw = fixture("session_log.jsonl");
    const SessionStats s = compute_stats(SessionLog::from_jsonl(raw));

    // Brute-force reference straight from the raw lines.
    std::size_t created = 0, requested = 0;
    std::vector<std::int64_t> times;
    std::istringstream lines(raw);
    for (std::string line; std::getline(lines, line);) {
        if (text::trim(line).empty()) continue;
        const json e = json::parse(line);
        if (e["kind"] == "persona_created") ++created;
        if (e["kind"] == "feedback_requested") {
            ++requested;
            times.push_back(to_unix_ms(parse_rfc3339(e["timestamp"].get<std::string>())));
        }
    }
    std::int64_t gap_sum = 0;
    for (std::size_t i = 1; i < times.size(); ++i) gap_sum += times[i] - times[i - 1];
    const double reference_mean = static_cast<double>(gap_sum) / static_cast<double>(times.size() - 1);

    expect(created == 3 && requested == 11, "fixture no longer has 3 creations and 11 requests");
    expect(s.personas_created == 3, "personas_created != 3");
    expect(s.feedbacks_requested == 11, "feedbacks_requested != 11");
    expect(s.mean_inter_feedback_interval.has_value(), "mean interval missing");
    expect(s.mean_inter_feedback_interval->count() == reference_mean, "mean interval differs from reference");
    expect(reference_mean == 181475.0, "mean interval differs from the frozen value");

    Sections sec;
    sec[SectionKind::StylePreferences].push_back({"writing style", "formal, scientific"});
    PersonaIndex index;
    index.by_persona.emplace("p", PersonaSnapshot{"p", "P", sec, t0});
    SessionLog log;
    for (int i = 0; i < 4; ++i)
        log.record({t0 + Millis{i}, EventKind::FeedbackRequested, {{"persona_id", "p"}, {"card_id", std::to_string(i)}}});
    const AttributeContribution c = attribute_contribution(log, index);
    expect(c.attributes == std::map<std::string, std::size_t>{{"style", 4}, {"writing", 4}}, "attribute counts");
    expect(c.descriptions == std::map<std::string, std::size_t>{{"formal", 4}, {"scientific", 4}}, "description counts");

    Sections stop;
    stop[SectionKind::StylePreferences].push_back({"the", ""});
    PersonaIndex stop_index;
    stop_index.by_persona.emplace("p", PersonaSnapshot{"p", "P", stop, t0});
    const AttributeContribution none = attribute_contribution(log, stop_index);
    expect(none.attributes.empty() && none.descriptions.empty(), "stopwords were counted");
}

void timeline() {
    const FocusTimeline t = focus_timeline(SessionLog::from_jsonl(fixture("session_log.jsonl")));
    const std::vector<std::tuple<std::int64_t, std::int64_t, Focus>> expected{
        {0, 30000, Focus::Editor},         {30000, 100000, Focus::Sidebar},   {100000, 300000, Focus::Editor},
        {300000, 320000, Focus::Sidebar},  {320000, 500000, Focus::Editor},   {500000, 600000, Focus::Sidebar},
        {600000, 820000, Focus::Editor},   {820000, 1150000, Focus::Sidebar}, {1150000, 1400000, Focus::Editor},
        {1400000, 1700000, Focus::Sidebar}, {1700000, 1901234, Focus::Editor}, {1901234, 2000000, Focus::Sidebar},
        {2000000, 2100000, Focus::Editor}};
    expect(t.segments.size() == expected.size(), "segment count differs");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& [s, e, f] = expected[i];
        expect(t.segments[i] == FocusSegment{t0 + Millis{s}, t0 + Millis{e}, f},
               "segment " + std::to_string(i) + " differs");
        if (i > 0) expect(t.segments[i].start == t.segments[i - 1].end, "segments not contiguous");
        expect(t.segments[i].start < t.segments[i].end, "empty or inverted segment");
    }
    expect(t.persona_marks == std::vector<Timestamp>{t0 + Millis{35500}, t0 + Millis{505000}, t0 + Millis{905000}},
           "persona marks differ");

    SessionLog simple;
    simple.record({t0, EventKind::EditorFocus, json::object()});
    simple.record({t0 + Millis{60000}, EventKind::SidebarFocus, json::object()});
    simple.record({t0 + Millis{90000}, EventKind::EditorFocus, json::object()});
    const FocusTimeline st = focus_timeline(simple, t0 + Millis{120000});
    expect(st.segments == std::vector<FocusSegment>{{t0, t0 + Millis{60000}, Focus::Editor},
                                                    {t0 + Millis{60000}, t0 + Millis{90000}, Focus::Sidebar},
                                                    {t0 + Millis{90000}, t0 + Millis{120000}, Focus::Editor}},
           "three-segment example differs");
    expect(focus_timeline(SessionLog{}).segments.empty(), "empty log must give an empty timeline");
}

void structure_analyzer() {
    const json gold = json::parse(fixture("structure_gold.json"));
    expect(gold.size() == 12, "gold file must hold 12 annotations");
    auto span_text = [](const std::optional<text::Span>& s, const std::string& t) -> json {
        return s ? json(std::string(s->of(t))) : json(nullptr);
    };
    for (int i = 1; i <= 12; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "structure/card_%02d.json", i);
        const FeedbackCard card = card_from_json(json::parse(fixture(name)));
        const CardAnalysis a = analyze_text(card.id, card.feedback.text);
        const json& g = gold[static_cast<std::size_t>(i - 1)];
        const std::string where = std::string(name) + ": ";
        expect(g["card_id"] == a.card_id, where + "card id");
        expect(span_text(a.blocks.opening, card.feedback.text) == g["opening"], where + "opening");
        expect(span_text(a.blocks.summary, card.feedback.text) == g["summary"], where + "summary");
        std::vector<std::string> labels;
        for (MainLabel l : a.labels) labels.emplace_back(label_name(l));
        std::sort(labels.begin(), labels.end());
        expect(json(labels) == g["labels"], where + "labels");
        expect(g["word_count"] == a.word_count, where + "word count");
        expect(g["over_limit"] == a.over_limit, where + "over_limit");
    }
    expect(!analyze_text("a", words(200)).over_limit, "200 words flagged");
    expect(analyze_text("b", words(201)).over_limit, "201 words not flagged");
}

void condense_guard() {
    const std::string original = words(300);
    auto provider_for = [&](std::function<std::string(const std::string&)> condense) {
        return std::make_shared<FunctionProvider>(
            [condense, original](const PromptBundle& b, const GenerationParams&) -> std::string {
                const bool is_condense =
                    b.messages.size() == 2 && b.messages[0].content == default_condense_prompt();
                return is_condense ? condense(b.messages[1].content) : original;
            });
    };
    Persona p;
    p.id = "p";
    p.name = "Reviewer";
    p.sections[SectionKind::RoleTask].push_back({"role", "reviewer"});
    const FeedbackRequest req{"doc", "p", 0, 5, "Hello"};

    FeedbackEngine longer(provider_for([](const std::string& t) { return t + " plus extra words"; }), {},
                          {}, stepping_clock(t0, Millis{1}), IdGenerator{1});
    const FeedbackCard kept = longer.generate(req, p, {}, true);
    expect(kept.feedback.text == original, "longer condense output replaced the original");
    expect(!kept.feedback.condensed, "condensed flag set without replacement");

    FeedbackEngine halving(provider_for([](const std::string& t) {
                               const auto w = text::split_words(t);
                               std::string out;
                               for (std::size_t i = 0; i < w.size() / 2; ++i) out += (i ? " " : "") + std::string(w[i]);
                               return out;
                           }),
                           {}, {}, stepping_clock(t0, Millis{1}), IdGenerator{1});
    const FeedbackCard shorter = halving.generate(req, p, {}, true);
    expect(shorter.feedback.condensed, "halving condenser did not set condensed");
    expect(shorter.feedback.word_count <= 150, "condensed feedback exceeds 150 words");

    // The shipped mock's condense path halves as well.
    FeedbackEngine mock(std::make_shared<MockProvider>(), {});
    const CondenseOutcome m = mock.condense(original, {});
    expect(m.condensed && text::count_words(m.text) == 150, "mock condenser did not halve");
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, void (*)()>> criteria{
        {"prompt_golden", prompt_golden},
        {"bundle_shape", bundle_shape},
        {"end_to_end_determinism", end_to_end_determinism},
        {"history_properties", history_properties},
        {"analytics_oracle", analytics_oracle},
        {"timeline", timeline},
        {"structure_analyzer", structure_analyzer},
        {"condense_guard", condense_guard},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            fn();
        } catch (const Failure& f) {
            error = f.what;
        } catch (const std::exception& e) {
            error = std::string("exception: ") + e.what();
        }
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
        if (error.empty()) {
            std::cout << "PASS " << name << " (" << ms << " ms)\n";
        } else {
            ++failed;
            std::cout << "FAIL " << name << " (" << ms << " ms): " << error << "\n";
        }
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
