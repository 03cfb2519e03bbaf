#include "pfb/http.hpp"

#include "pfb/error.hpp"

#include <httplib.h>

namespace pfb {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, http_status(code), {{"code", to_wire(code)}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedRequest, std::string("invalid JSON body: ") + e.what());
    }
}

std::string string_field(const json& body, const char* key, bool required = true) {
    auto it = body.find(key);
    if (it == body.end()) {
        if (required) throw Error(ErrorCode::MalformedRequest, std::string("field '") + key + "' is required");
        return {};
    }
    if (!it->is_string()) throw Error(ErrorCode::MalformedRequest, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key)) return std::nullopt;
    return string_field(body, key);
}

AttributePair pair_body(const json& body) {
    if (!body.is_object()) throw Error(ErrorCode::MalformedRequest, "pair body must be an object");
    return {string_field(body, "attribute"), string_field(body, "description", false)};
}

std::size_t path_index(const std::string& raw) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("trailing characters");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedRequest, "invalid index '" + raw + "'");
    }
}

using Handler = std::function<json(const httplib::Request&)>;

httplib::Server::Handler wrap(Handler fn, int ok_status = 200) {
    return [fn = std::move(fn), ok_status](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, ok_status, fn(req));
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const std::exception& e) {
            send_error(res, ErrorCode::Io, e.what());
        }
    };
}

} // namespace

void register_routes(httplib::Server& server, Service& service) {
    const std::string token = service.config().auth_token;
    if (!token.empty()) {
        server.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
            if (req.get_header_value("Authorization") == "Bearer " + token)
                return httplib::Server::HandlerResponse::Unhandled;
            send_error(res, ErrorCode::Unauthorized, "missing or wrong bearer token");
            return httplib::Server::HandlerResponse::Handled;
        });
    }

    server.Get("/api/health", wrap([&](const auto&) { return service.health(); }));

    server.Post("/api/documents", wrap([&](const auto& req) {
        const json body = parse_body(req);
        return service.create_document(string_field(body, "title", false), string_field(body, "text", false));
    }, 201));
    server.Get(R"(/api/documents/([^/]+))", wrap([&](const auto& req) {
        return service.get_document(req.matches[1]);
    }));
    server.Put(R"(/api/documents/([^/]+))", wrap([&](const auto& req) {
        const json body = parse_body(req);
        return service.update_document(req.matches[1], optional_string(body, "title"),
                                       optional_string(body, "text"));
    }));

    server.Get("/api/personas", wrap([&](const auto&) { return service.list_personas(); }));
    server.Post("/api/personas", wrap([&](const auto& req) {
        return service.create_persona(string_field(parse_body(req), "name", false));
    }, 201));
    server.Get(R"(/api/personas/([^/]+))", wrap([&](const auto& req) {
        return service.get_persona(req.matches[1]);
    }));
    server.Put(R"(/api/personas/([^/]+))", wrap([&](const auto& req) {
        return service.replace_persona(req.matches[1], parse_body(req));
    }));
    server.Delete(R"(/api/personas/([^/]+))", wrap([&](const auto& req) {
        return service.delete_persona(req.matches[1]);
    }));
    server.Post(R"(/api/personas/([^/]+)/sections/([^/]+)/pairs)", wrap([&](const auto& req) {
        return service.add_pair(req.matches[1], req.matches[2].str(), pair_body(parse_body(req)));
    }, 201));
    server.Put(R"(/api/personas/([^/]+)/sections/([^/]+)/pairs/([^/]+))", wrap([&](const auto& req) {
        return service.edit_pair(req.matches[1], req.matches[2].str(), path_index(req.matches[3]),
                                 pair_body(parse_body(req)));
    }));
    server.Delete(R"(/api/personas/([^/]+)/sections/([^/]+)/pairs/([^/]+))", wrap([&](const auto& req) {
        return service.remove_pair(req.matches[1], req.matches[2].str(), path_index(req.matches[3]));
    }));
    server.Get("/api/guidance", wrap([&](const auto&) { return service.guidance(); }));

    server.Post(R"(/api/documents/([^/]+)/feedback)", wrap([&](const auto& req) {
        return service.request_feedback(req.matches[1], parse_body(req));
    }, 201));
    server.Get(R"(/api/documents/([^/]+)/history)", wrap([&](const auto& req) {
        return service.history(req.matches[1]);
    }));
    server.Delete(R"(/api/documents/([^/]+)/history/([^/]+))", wrap([&](const auto& req) {
        return service.delete_card(req.matches[1], req.matches[2]);
    }));
    server.Get(R"(/api/documents/([^/]+)/history/([^/]+)/context)", wrap([&](const auto& req) {
        return service.card_context(req.matches[1], req.matches[2]);
    }));

    server.Post(R"(/api/documents/([^/]+)/events)", wrap([&](const auto& req) {
        return service.post_events(req.matches[1], parse_body(req));
    }));
    server.Get(R"(/api/documents/([^/]+)/stats)", wrap([&](const auto& req) {
        return service.stats(req.matches[1]);
    }));
    server.Get(R"(/api/documents/([^/]+)/timeline)", wrap([&](const auto& req) {
        return service.timeline(req.matches[1]);
    }));
    server.Get(R"(/api/documents/([^/]+)/contribution)", wrap([&](const auto& req) {
        return service.contribution(req.matches[1]);
    }));

    server.Post("/api/debug/prompt", wrap([&](const auto& req) {
        const json body = parse_body(req);
        return service.debug_prompt(string_field(body, "document_id"), body);
    }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty() && res.status == 404)
            send_json(res, 404, {{"code", to_wire(ErrorCode::MalformedRequest)}, {"message", "no such route"}});
    });
}

} // namespace pfb
