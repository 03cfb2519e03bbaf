#include "pfb/analytics.hpp"
#include "pfb/analyzer.hpp"
#include "pfb/error.hpp"
#include "pfb/history.hpp"
#include "pfb/http.hpp"
#include "pfb/prompt.hpp"
#include "pfb/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

httplib::Server* g_server = nullptr;

void handle_signal(int) {
    if (g_server) g_server->stop();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') std::cout << '\n';
        return;
    }
    pfb::atomic_write(path, content);
}

struct ServeArgs {
    std::string config_path;
    std::string host;
    int port = -1;
    std::string provider;
    std::string base_url;
    std::string model;
    std::string data_dir;
    std::string few_shot;
    bool condense = false;
    bool dump_prompt = false;
};

int run_serve(const ServeArgs& args) {
    pfb::ServiceConfig config;
    if (!args.config_path.empty()) config = pfb::load_config(args.config_path);
    if (!args.host.empty()) config.host = args.host;
    if (args.port >= 0) config.port = args.port;
    if (!args.provider.empty()) config.provider = *pfb::provider_kind_from_name(args.provider);
    if (!args.base_url.empty()) config.remote_base_url = args.base_url;
    if (!args.model.empty()) config.generation.model_id = args.model;
    if (!args.data_dir.empty()) config.data_dir = args.data_dir;
    if (!args.few_shot.empty()) config.few_shot_path = args.few_shot;
    if (args.condense) config.condense = true;
    if (args.dump_prompt) config.dump_prompt = true;
    if (config.few_shot_path.empty()) config.few_shot_path = PFB_DEFAULT_FEW_SHOT;
    pfb::apply_environment(config);
    config.validate();

    pfb::Service service(config, pfb::make_provider(config), pfb::load_few_shot_file(config.few_shot_path));
    httplib::Server server;
    pfb::register_routes(server, service);
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    std::cerr << "listening on " << config.host << ":" << config.port << " (provider "
              << pfb::provider_kind_name(config.provider) << ", data " << config.data_dir.string() << ")\n";
    if (!server.listen(config.host, config.port)) {
        std::cerr << "cannot listen on " << config.host << ":" << config.port << "\n";
        return 1;
    }
    return 0;
}

int run_prompt(const std::string& persona_path, const std::string& text, const std::string& few_shot) {
    const pfb::Persona persona = pfb::parse_persona(pfb::read_file(persona_path));
    const auto examples = pfb::load_few_shot_file(few_shot.empty() ? PFB_DEFAULT_FEW_SHOT : few_shot);
    const auto bundle = pfb::assemble(text, pfb::snapshot(persona), examples);
    std::cout << pfb::bundle_to_json(bundle).dump(2) << '\n';
    return 0;
}

int run_stats(const std::string& log_path, const std::string& document_path, const std::string& format,
              const std::string& timeline_out) {
    const auto log = pfb::SessionLog::from_jsonl(pfb::read_file(log_path));
    std::optional<std::string> final_text;
    if (!document_path.empty()) {
        const std::string raw = pfb::read_file(document_path);
        const json doc = json::parse(raw, nullptr, false);
        final_text = doc.is_object() && doc.contains("text") && doc["text"].is_string()
                         ? doc["text"].get<std::string>()
                         : raw;
    }
    const auto stats = pfb::compute_stats(log, final_text ? std::optional<std::string_view>(*final_text)
                                                          : std::nullopt);
    const auto timeline = pfb::focus_timeline(log);
    if (format == "csv") {
        std::cout << pfb::timeline_to_csv(timeline);
    } else {
        std::cout << json{{"stats", pfb::stats_to_json(stats)}, {"timeline", pfb::timeline_to_json(timeline)}}.dump(2)
                  << '\n';
    }
    if (!timeline_out.empty()) write_output(timeline_out, pfb::timeline_to_csv(timeline));
    return 0;
}

std::vector<pfb::FeedbackCard> collect_cards(const fs::path& input) {
    std::vector<pfb::FeedbackCard> cards;
    auto add_file = [&](const fs::path& file) {
        const std::string content = pfb::read_file(file);
        const json j = json::parse(content);
        if (j.is_object() && j.contains("cards")) {
            for (const auto& c : pfb::load_history(content).cards()) cards.push_back(c);
        } else {
            cards.push_back(pfb::card_from_json(j));
        }
    };
    if (fs::is_directory(input)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) add_file(f);
    } else {
        add_file(input);
    }
    return cards;
}

int run_analyze(const std::string& input, const std::string& out, bool summary_only) {
    const auto report = pfb::analyze_corpus(collect_cards(input));
    write_output(out, pfb::report_to_json(report, !summary_only).dump(2));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Persona feedback service and analysis tools"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--config", serve.config_path, "JSON config file")->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", serve.host, "Listen address");
    serve_cmd->add_option("--port", serve.port, "Listen port")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--provider", serve.provider, "Completion provider")
        ->check(CLI::IsMember({"mock", "remote"}));
    serve_cmd->add_option("--base-url", serve.base_url, "OpenAI-compatible base URL (provider=remote)");
    serve_cmd->add_option("--model", serve.model, "Model id");
    serve_cmd->add_option("--data-dir", serve.data_dir, "State directory");
    serve_cmd->add_option("--few-shot", serve.few_shot, "Few-shot example file")->check(CLI::ExistingFile);
    serve_cmd->add_flag("--condense", serve.condense, "Apply the conciseness second pass");
    serve_cmd->add_flag("--dump-prompt", serve.dump_prompt,
                        "Answer feedback requests with the assembled prompt instead of calling the provider");

    std::string persona_path, text, few_shot;
    auto* prompt_cmd = app.add_subcommand("prompt", "Print the prompt bundle for a persona file and text");
    prompt_cmd->add_option("--persona", persona_path, "Persona file")->required()->check(CLI::ExistingFile);
    prompt_cmd->add_option("--text", text, "Selected text")->required();
    prompt_cmd->add_option("--few-shot", few_shot, "Few-shot example file")->check(CLI::ExistingFile);

    std::string log_path, document_path, format = "json", timeline_out;
    auto* stats_cmd = app.add_subcommand("stats", "Session statistics and focus timeline from an event log");
    stats_cmd->add_option("log", log_path, "events.jsonl")->required()->check(CLI::ExistingFile);
    stats_cmd->add_option("--document", document_path, "Document (JSON record or plain text) for the final word count")
        ->check(CLI::ExistingFile);
    stats_cmd->add_option("--format", format, "json or csv (timeline table)")->check(CLI::IsMember({"json", "csv"}));
    stats_cmd->add_option("--timeline-out", timeline_out, "Also write the timeline table (CSV) here");

    std::string analyze_input, analyze_out;
    bool summary_only = false;
    auto* analyze_cmd = app.add_subcommand("analyze", "Structure report for a history file or a directory of card files");
    analyze_cmd->add_option("input", analyze_input, "history.json or directory")->required()->check(CLI::ExistingPath);
    analyze_cmd->add_option("-o,--out", analyze_out, "Output file (default stdout)");
    analyze_cmd->add_flag("--summary-only", summary_only, "Omit per-card annotations");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return run_serve(serve);
        if (*prompt_cmd) return run_prompt(persona_path, text, few_shot);
        if (*stats_cmd) return run_stats(log_path, document_path, format, timeline_out);
        if (*analyze_cmd) return run_analyze(analyze_input, analyze_out, summary_only);
    } catch (const pfb::Error& e) {
        std::cerr << pfb::to_wire(e.code()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
