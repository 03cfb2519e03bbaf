#include "pfb/error.hpp"
#include "pfb/http.hpp"
#include "pfb/prompt.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <random>
#include <thread>

using namespace pfb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const Timestamp t0 = from_unix_ms(1709287200000);

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("pfb-http-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

// Runs an httplib server on an ephemeral loopback port for the lifetime of the object.
class LiveServer {
public:
    explicit LiveServer(const std::function<void(httplib::Server&)>& setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LiveServer() {
        server_.stop();
        thread_.join();
    }
    int port() const { return port_; }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

json parse(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

PromptBundle tiny_bundle() {
    Sections s;
    s[SectionKind::RoleTask].push_back({"role", "reviewer"});
    return assemble("Some text.", PersonaSnapshot{"p", "P", s, t0}, {});
}

} // namespace

TEST_CASE("HTTP routes expose the service contracts") {
    TempDir dir;
    ServiceConfig config;
    config.data_dir = dir.path;
    Service svc(config, std::make_shared<MockProvider>(), {}, stepping_clock(t0, Millis{1000}), 7);
    LiveServer server([&](httplib::Server& s) { register_routes(s, svc); });
    httplib::Client cli("127.0.0.1", server.port());
    const std::string js = "application/json";

    auto r = cli.Get("/api/health");
    CHECK(r->status == 200);
    CHECK(parse(r)["status"] == "ok");

    r = cli.Post("/api/documents", json{{"title", "T"}, {"text", "First sentence. Second one."}}.dump(), js);
    CHECK(r->status == 201);
    const std::string doc = parse(r)["id"];
    CHECK(parse(cli.Get("/api/documents/" + doc))["text"] == "First sentence. Second one.");
    r = cli.Put("/api/documents/" + doc, json{{"title", "T2"}}.dump(), js);
    CHECK(parse(r)["title"] == "T2");

    r = cli.Post("/api/personas", json{{"name", "Reviewer"}}.dump(), js);
    CHECK(r->status == 201);
    const std::string persona = parse(r)["id"];
    r = cli.Post("/api/personas/" + persona + "/sections/role_task/pairs",
                 json{{"attribute", "role"}, {"description", "reviewer"}}.dump(), js);
    CHECK(r->status == 201);
    r = cli.Post("/api/personas/" + persona + "/sections/background/pairs",
                 json{{"attribute", "field"}, {"description", "HCI"}}.dump(), js);
    r = cli.Put("/api/personas/" + persona + "/sections/background/pairs/0",
                json{{"attribute", "field"}, {"description", "NLP"}}.dump(), js);
    CHECK(parse(r)["sections"]["background"][0]["description"] == "NLP");
    r = cli.Delete("/api/personas/" + persona + "/sections/background/pairs/0");
    CHECK(parse(r)["sections"]["background"].empty());
    r = cli.Delete("/api/personas/" + persona + "/sections/background/pairs/x");
    CHECK(r->status == 400);
    CHECK(parse(cli.Get("/api/personas")).size() == 1);
    CHECK(parse(cli.Get("/api/personas/" + persona))["name"] == "Reviewer");
    CHECK(parse(cli.Get("/api/guidance")).size() == 4);

    const json sel{{"persona_id", persona}, {"selection", {{"start", 0}, {"end", 15}}}};
    r = cli.Post("/api/documents/" + doc + "/feedback", sel.dump(), js);
    CHECK(r->status == 201);
    const json card = parse(r);
    CHECK(card["context"]["selected_text"] == "First sentence.");
    const std::string card_id = card["id"];

    r = cli.Post("/api/documents/" + doc + "/feedback",
                 json{{"persona_id", persona}, {"selection", {{"start", 3}, {"end", 3}}}}.dump(), js);
    CHECK(r->status == 400);
    CHECK(parse(r)["code"] == "EMPTY_SELECTION");
    r = cli.Post("/api/documents/" + doc + "/feedback",
                 json{{"persona_id", persona}, {"selection", {{"start", 0}, {"end", 500}}}}.dump(), js);
    CHECK(r->status == 409);
    CHECK(parse(r)["code"] == "STALE_SELECTION");
    r = cli.Post("/api/documents/" + doc + "/feedback",
                 json{{"persona_id", "ghost"}, {"selection", {{"start", 0}, {"end", 5}}}}.dump(), js);
    CHECK(r->status == 404);
    CHECK(parse(r)["code"] == "PERSONA_NOT_FOUND");
    r = cli.Post("/api/documents/" + doc + "/feedback", "{not json", js);
    CHECK(r->status == 400);

    r = cli.Post("/api/debug/prompt", json{{"document_id", doc}, {"persona_id", persona},
                                           {"selection", {{"start", 0}, {"end", 15}}}}.dump(), js);
    CHECK(parse(r)["dry_run"] == true);

    const json hist = parse(cli.Get("/api/documents/" + doc + "/history"));
    REQUIRE(hist["cards"].size() == 1);
    CHECK(hist["cards"][0]["id"] == card_id);
    CHECK(parse(cli.Get("/api/documents/" + doc + "/history/" + card_id + "/context"))["stale"] == false);

    r = cli.Post("/api/documents/" + doc + "/events",
                 json{{"events", {{{"timestamp", "2030-01-01T00:00:00.000Z"}, {"kind", "editor_focus"}},
                                  {{"timestamp", "2030-01-01T00:00:10.000Z"}, {"kind", "sidebar_focus"}}}}}
                     .dump(),
                 js);
    CHECK(parse(r)["recorded"] == 2);
    CHECK(parse(cli.Get("/api/documents/" + doc + "/stats"))["feedbacks_requested"] == 1);
    CHECK(parse(cli.Get("/api/documents/" + doc + "/timeline"))["segments"].size() == 1);
    CHECK(parse(cli.Get("/api/documents/" + doc + "/contribution"))["attributes"]["role"] == 1);

    r = cli.Delete("/api/documents/" + doc + "/history/" + card_id);
    CHECK(r->status == 200);
    r = cli.Delete("/api/documents/" + doc + "/history/" + card_id);
    CHECK(r->status == 404);
    CHECK(parse(r)["code"] == "CARD_NOT_FOUND");

    r = cli.Delete("/api/personas/" + persona);
    CHECK(r->status == 200);
    CHECK(cli.Get("/api/personas/" + persona)->status == 404);
    CHECK(cli.Get("/api/documents/nope")->status == 404);
    CHECK(cli.Get("/api/nothing/here")->status == 404);
}

TEST_CASE("bearer token guards every route") {
    TempDir dir;
    ServiceConfig config;
    config.data_dir = dir.path;
    config.auth_token = "s3cret";
    Service svc(config, std::make_shared<MockProvider>(), {});
    LiveServer server([&](httplib::Server& s) { register_routes(s, svc); });
    httplib::Client cli("127.0.0.1", server.port());

    auto r = cli.Get("/api/health");
    CHECK(r->status == 401);
    CHECK(parse(r)["code"] == "UNAUTHORIZED");
    r = cli.Get("/api/health", {{"Authorization", "Bearer wrong"}});
    CHECK(r->status == 401);
    r = cli.Get("/api/health", {{"Authorization", "Bearer s3cret"}});
    CHECK(r->status == 200);
}

TEST_CASE("remote provider speaks the chat completions protocol") {
    std::atomic<int> mode{0};
    json last_request;
    std::string last_auth;
    std::mutex m;
    LiveServer fake([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(m);
                last_request = json::parse(req.body);
                last_auth = req.get_header_value("Authorization");
            }
            switch (mode.load()) {
            case 0:
                res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "Nice."}}}}}}}.dump(),
                                "application/json");
                break;
            case 1: res.status = 401; break;
            case 2: res.status = 429; break;
            case 3: std::this_thread::sleep_for(std::chrono::milliseconds(400)); break;
            case 4: res.set_content("{\"choices\": []}", "application/json"); break;
            case 5: res.status = 500; break;
            }
        });
    });

    RemoteProvider provider(fake.url() + "/v1/", "sk-abc");
    GenerationParams params;
    params.request_timeout = Millis{150};
    const PromptBundle bundle = tiny_bundle();

    CHECK(provider.complete(bundle, params) == "Nice.");
    {
        std::lock_guard lock(m);
        CHECK(last_auth == "Bearer sk-abc");
        CHECK(last_request["model"] == "gpt-3.5-turbo");
        CHECK(last_request["temperature"] == 0.7);
        CHECK(last_request["max_tokens"] == 512);
        CHECK(last_request["messages"] == bundle_to_json(bundle));
    }

    auto failure = [&](int m_) {
        mode = m_;
        try {
            provider.complete(bundle, params);
        } catch (const ProviderError& e) {
            CHECK(e.code() == ErrorCode::ProviderError);
            return e.kind();
        }
        FAIL("expected ProviderError");
        return ProviderFailure::Transport;
    };
    CHECK(failure(1) == ProviderFailure::Auth);
    CHECK(failure(2) == ProviderFailure::RateLimit);
    CHECK(failure(3) == ProviderFailure::Timeout);
    CHECK(failure(4) == ProviderFailure::BadResponse);
    CHECK(failure(5) == ProviderFailure::Transport);

    RemoteProvider nowhere("http://127.0.0.1:1", "");
    try {
        nowhere.complete(bundle, params);
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK((e.kind() == ProviderFailure::Transport || e.kind() == ProviderFailure::Timeout));
    }
}

TEST_CASE("audit log records calls without the API key") {
    TempDir dir;
    const std::string path = (dir.path / "audit.jsonl").string();
    auto inner = std::make_shared<FunctionProvider>([](const PromptBundle&, const GenerationParams&) -> std::string {
        return "key is sk-abc, keep it secret";
    });
    AuditingProvider audited(inner, path, "sk-abc", stepping_clock(t0, Millis{1}));
    CHECK(audited.complete(tiny_bundle(), GenerationParams{}) == "key is sk-abc, keep it secret");

    auto failing = std::make_shared<FunctionProvider>([](const PromptBundle&, const GenerationParams&) -> std::string {
        throw ProviderError(ProviderFailure::Auth, "bad key sk-abc");
    });
    AuditingProvider audited_fail(failing, path, "sk-abc", stepping_clock(t0, Millis{1}));
    CHECK_THROWS_AS(audited_fail.complete(tiny_bundle(), GenerationParams{}), ProviderError);

    const std::string log = read_file(path);
    CHECK(log.find("sk-abc") == std::string::npos);
    CHECK(log.find("[REDACTED]") != std::string::npos);
    CHECK(std::count(log.begin(), log.end(), '\n') == 2);
    CHECK(redact("aXa", "X") == "a[REDACTED]a");
    CHECK(redact("abc", "") == "abc");
}
