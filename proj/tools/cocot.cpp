#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "cocot/http_backend.hpp"
#include "cocot/scenario.hpp"
#include "cocot/service.hpp"

namespace {

void print_messages(const std::vector<std::string>& messages) {
    for (const auto& m : messages) std::cout << m << "\n\n";
    std::cout.flush();
}

int run_scenario_command(const std::string& path, const std::string& record_to, bool quiet) {
    const auto fixture = cocot::read_json_file(path);
    auto scenario = cocot::load_scenario(fixture, std::filesystem::path(path).parent_path());
    const auto result = cocot::run_scenario(scenario);

    if (!quiet) {
        for (std::size_t i = 0; i < result.produced.size(); ++i) {
            if (i == 0) {
                std::cout << ">>> " << scenario.query << "\n\n";
            } else {
                std::cout << ">>> " << scenario.turns[i - 1].utterance << "\n\n";
            }
            print_messages(result.produced[i]);
        }
    }
    if (!record_to.empty()) {
        auto updated = fixture;
        updated["start"]["expected"] = result.produced.front();
        for (std::size_t i = 0; i < scenario.turns.size(); ++i) {
            updated["turns"][i]["expected"] = result.produced[i + 1];
        }
        std::ofstream(record_to) << updated.dump(2) << "\n";
        std::cerr << "recorded " << record_to << "\n";
    }
    if (result.mismatch) {
        const auto& m = *result.mismatch;
        std::cerr << "TranscriptMismatch at step " << m.step << " message " << m.message << "\n--- expected\n"
                  << m.expected << "\n+++ actual\n"
                  << m.actual << "\n";
        return 1;
    }
    std::cerr << "scenario passed (" << result.produced.size() << " steps, " << result.elapsed.count() << " us)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interactive chain-of-thought session engine"};
    app.require_subcommand(1);

    std::string endpoint;
    std::string script;
    std::string session_dir = "sessions";
    std::string model = "default";
    std::string token_env = "COCOT_API_TOKEN";
    int timeout = 60;
    cocot::SessionConfig defaults;
    std::int64_t seed = 0;

    auto* endpoint_opt = app.add_option("--endpoint", endpoint, "Chat-completion endpoint URL");
    auto* script_opt = app.add_option("--script", script, "Scripted backend fixture (offline)")->check(CLI::ExistingFile);
    endpoint_opt->excludes(script_opt);
    app.add_option("--session-dir", session_dir, "Directory holding session files");
    app.add_option("--candidates", defaults.candidates, "Candidates sampled per regeneration")->check(CLI::PositiveNumber);
    app.add_option("--alpha", defaults.alpha, "Preference learning rate")->check(CLI::Range(0.0, 1.0));
    auto* seed_opt = app.add_option("--seed", seed, "Decoding seed and session-id seed");
    app.add_option("--model", model, "Model name sent to the endpoint");
    app.add_option("--token-env", token_env, "Environment variable holding the endpoint token");
    app.add_option("--timeout", timeout, "Endpoint timeout in seconds");

    auto* repl = app.add_subcommand("repl", "Interactive terminal session");
    std::string query_arg;
    repl->add_option("query", query_arg, "Query (read from stdin when omitted)");

    auto* serve = app.add_subcommand("serve", "HTTP API with event stream");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    auto* scenario = app.add_subcommand("run-scenario", "Replay a scripted dialogue and compare messages");
    std::string scenario_path;
    std::string record_to;
    bool quiet = false;
    scenario->add_option("path", scenario_path)->required()->check(CLI::ExistingFile);
    scenario->add_option("--record", record_to, "Write the fixture back with the produced messages");
    scenario->add_flag("--quiet", quiet, "Only report the result");

    auto* exporter = app.add_subcommand("export", "Print a stored session");
    std::string export_id;
    std::string export_format = "markdown";
    exporter->add_option("session-id", export_id)->required();
    exporter->add_option("--format", export_format)->check(CLI::IsMember({"markdown", "json"}));

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) defaults.seed = seed;
    defaults.endpoint = endpoint;

    try {
        if (scenario->parsed()) return run_scenario_command(scenario_path, record_to, quiet);

        cocot::SessionStore store{std::filesystem::path(session_dir)};
        if (exporter->parsed()) {
            const auto session = store.load(export_id);
            std::cout << cocot::export_session(session, export_format == "json" ? cocot::ExportFormat::Json
                                                                                : cocot::ExportFormat::Markdown)
                      << "\n";
            return 0;
        }

        std::unique_ptr<cocot::Backend> backend;
        if (!script.empty()) {
            backend = std::make_unique<cocot::ScriptedBackend>(cocot::load_script_file(script));
        } else if (!endpoint.empty()) {
            backend = std::make_unique<cocot::HttpBackend>(cocot::HttpBackendConfig{endpoint, model, token_env, timeout, 1});
        } else {
            std::cerr << "one of --endpoint or --script is required\n";
            return 2;
        }
        cocot::Service service(*backend, store, cocot::ServiceOptions{defaults, {}, std::chrono::milliseconds(500)});

        if (serve->parsed()) {
            httplib::Server server;
            service.mount(server);
            std::cerr << "listening on " << host << ":" << port << "\n";
            return server.listen(host, port) ? 0 : 1;
        }

        std::string query = query_arg;
        if (query.empty() && !std::getline(std::cin, query)) return 0;
        auto reply = service.create(query);
        std::cerr << "session " << reply.session_id << "\n";
        print_messages(reply.messages);
        std::string line;
        while (!reply.finished && std::getline(std::cin, line)) {
            if (cocot::trim(line).empty()) continue;
            reply = service.utter(reply.session_id, line);
            print_messages(reply.messages);
        }
        return 0;
    } catch (const cocot::Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == cocot::ErrorCode::FixtureSchemaError ? 3 : 1;
    }
}
