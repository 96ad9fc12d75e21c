// Command-line entry point: ingest, serve, ask, tool, stats.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "kgx/agent.hpp"
#include "kgx/config.hpp"
#include "kgx/error.hpp"
#include "kgx/gql.hpp"
#include "kgx/ingest.hpp"
#include "kgx/remote.hpp"
#include "kgx/service.hpp"

namespace fs = std::filesystem;
using namespace kgx;
using gateway::Config;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EngineOptions {
    std::string config;
    std::string snapshot;
};

void add_engine_options(CLI::App* cmd, EngineOptions& o) {
    cmd->add_option("--config", o.config, "Config file (default: $KGX_CONFIG)");
    cmd->add_option("--snapshot", o.snapshot, "Snapshot path, overriding the config");
}

Config make_config(const EngineOptions& o) {
    Config c;
    if (auto path = gateway::resolve_config_path(o.config)) c = gateway::load_config(*path);
    if (!o.snapshot.empty()) c.snapshot = o.snapshot;
    return c;
}

void print_table(const ingest::IngestReport& r) {
    std::printf("%-14s %10s %11s\n", "Label", "Count", "Percentage");
    for (const auto& s : r.distribution()) {
        std::printf("%-14s %10zu %10.1f%%\n", std::string(to_string(s.label)).c_str(), s.count, s.percentage);
    }
    std::printf("%-14s %10zu\n\n", "Total nodes", r.total_nodes());
    std::printf("%-16s %8s\n", "Relationship", "Count");
    for (std::size_t t = 0; t < kEdgeTypeCount; ++t) {
        if (r.edge_counts[t] == 0) continue;
        std::printf("%-16s %8zu\n", std::string(to_string(static_cast<EdgeType>(t))).c_str(), r.edge_counts[t]);
    }
    std::printf("%-16s %8zu\n", "Total edges", r.total_edges());
    std::printf("\nRecords ingested: %zu, filtered: %zu, rejected: %zu\n", r.records_ingested, r.filtered,
                r.errors.size());
    for (const auto& e : r.errors) {
        std::printf("  line %zu %s: %s %s\n", e.line, e.record_id.c_str(), e.code.c_str(),
                    e.message.c_str());
    }
}

struct IngestOptions {
    std::string corpus, thesaurus, projects, out;
    bool force = false;
    int first_year = 1900, last_year = 2100;
    bool open_access_only = false;
};

int cmd_ingest(const IngestOptions& o) {
    fs::path out(o.out);
    if (!o.force && (fs::exists(out) || fs::exists(ingest::chunks_path(out)))) {
        std::fprintf(stderr, "error: snapshot '%s' already exists; pass --force to overwrite\n", o.out.c_str());
        return kFailure;
    }
    ingest::CorpusOptions copts;
    copts.years = {o.first_year, o.last_year};
    copts.open_access_only = o.open_access_only;
    auto corpus = ingest::load_corpus(o.corpus, copts);
    auto thesaurus = ingest::load_thesaurus(o.thesaurus);
    std::vector<ingest::ProjectEntry> projects;
    if (!o.projects.empty()) projects = ingest::load_projects(o.projects);
    ingest::KnowledgeBase kb;
    auto report = ingest::populate(kb, corpus.records, thesaurus, projects);
    report.errors.insert(report.errors.begin(), corpus.errors.begin(), corpus.errors.end());
    report.filtered = corpus.filtered;
    if (kb.chunks.empty()) {
        std::fprintf(stderr, "error: no valid records in '%s'\n", o.corpus.c_str());
        print_table(report);
        return kFailure;
    }
    ingest::save(kb, out);
    print_table(report);
    std::printf("Snapshot written to %s\n", o.out.c_str());
    return kOk;
}

int cmd_serve(const EngineOptions& eo, int port_override) {
    auto config = make_config(eo);
    if (port_override >= 0) config.port = port_override;
    auto engine = gateway::Engine::open(config);

    // Block the stop signals before any thread starts so that only sigwait
    // below receives them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    gateway::Service service(engine);
    int port = service.start(config.host, config.port);
    std::printf("listening on http://%s:%d (snapshot %s)\n", config.host.c_str(), port,
                engine->fingerprint().c_str());
    std::fflush(stdout);
    int sig = 0;
    sigwait(&stop_signals, &sig);
    service.stop();
    return kOk;
}

struct AskOptions {
    std::string question;
    std::string policy;
    bool trace = false;
    bool json_out = false;
    std::size_t max_steps = 0;
};

int cmd_ask(const EngineOptions& eo, const AskOptions& o) {
    auto config = make_config(eo);
    if (!o.policy.empty()) {
        try {
            auto binding = gateway::PolicyBinding::parse(o.policy);
            config.policy.kind = binding.kind;
            config.policy.target = binding.target;
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    if (config.policy.kind == gateway::PolicyKind::None) throw UsageError("--policy is required");
    if (config.policy.kind == gateway::PolicyKind::External && config.policy.prompt_template.empty()) {
        config.policy.prompt_template = (fs::path(KGX_PROMPT_DIR) / "react_v1.txt").string();
    }
    if (o.max_steps > 0) config.agent.max_steps = o.max_steps;

    std::string question = o.question;
    if (question.empty() && config.policy.kind == gateway::PolicyKind::Scripted) {
        question = agent::load_script(config.policy.target).query;
    }
    if (question.empty()) throw UsageError("a question is required");

    auto engine = gateway::Engine::open(config);
    auto session = agent::run("cli", question, engine->make_policy(), engine->toolbox(), config.agent);
    if (o.trace) {
        for (const auto& e : session.transcript) {
            if (e.type != agent::EventType::ToolResult) continue;
            const auto& r = e.result;
            std::printf("[trace] %s %s %s %.3f ms%s\n", r.call_id.c_str(),
                        r.tool_name.empty() ? "-" : r.tool_name.c_str(), r.ok ? "ok" : r.error_code.c_str(),
                        std::chrono::duration<double, std::milli>(r.elapsed).count(),
                        r.truncated ? " truncated" : "");
        }
    }
    auto doc = agent::render_answer(session, engine->graph());
    if (o.json_out) {
        std::printf("%s\n", doc.dump(2).c_str());
    } else {
        std::fputs(agent::render_text(doc).c_str(), stdout);
    }
    if (session.status == agent::Status::Failed) {
        std::fprintf(stderr, "error: session failed: %s %s\n", session.failure->code.c_str(),
                     session.failure->message.c_str());
        return kFailure;
    }
    return kOk;
}

int cmd_tool(const EngineOptions& eo, const std::string& name, const std::string& args_text) {
    json args;
    try {
        args = json::parse(args_text);
    } catch (const json::exception&) {
        throw UsageError("--args is not valid JSON");
    }
    auto engine = gateway::Engine::open(make_config(eo));
    auto result = engine->toolbox().call(tools::ToolCall{name, args, "cli"});
    std::printf("%s\n", result.to_json(true).dump(2).c_str());
    return result.ok ? kOk : kFailure;
}

int cmd_stats(const EngineOptions& eo) {
    auto config = make_config(eo);
    auto kb = ingest::load(config.snapshot, config.max_depth);
    auto stats = gateway::stats_json(kb.graph);
    std::printf("%-14s %10s %11s\n", "Label", "Count", "Percentage");
    for (const auto& s : stats["distribution"]) {
        std::printf("%-14s %10zu %10.1f%%\n", s["label"].get<std::string>().c_str(), s["count"].get<std::size_t>(),
                    s["percentage"].get<double>());
    }
    std::printf("%-14s %10zu\n", "Total nodes", kb.graph.node_count());
    std::printf("%-14s %10zu\n", "Total edges", kb.graph.edge_count());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph retrieval engine"};
    app.require_subcommand(1);

    IngestOptions io;
    auto* ingest_cmd = app.add_subcommand("ingest", "Build a snapshot from JSONL inputs");
    ingest_cmd->add_option("--corpus", io.corpus, "Publication records (JSONL)")->required();
    ingest_cmd->add_option("--thesaurus", io.thesaurus, "Thesaurus entries (JSONL)")->required();
    ingest_cmd->add_option("--projects", io.projects, "Project descriptions (JSONL)");
    ingest_cmd->add_option("--out", io.out, "Snapshot path to write")->required();
    ingest_cmd->add_flag("--force", io.force, "Overwrite an existing snapshot");
    ingest_cmd->add_option("--first-year", io.first_year, "Earliest publication year kept");
    ingest_cmd->add_option("--last-year", io.last_year, "Latest publication year kept");
    ingest_cmd->add_flag("--open-access-only", io.open_access_only, "Keep only open-access records");

    EngineOptions serve_eo;
    int port = -1;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    add_engine_options(serve_cmd, serve_eo);
    serve_cmd->add_option("--port", port, "Port, overriding the config (0 picks a free one)")
        ->check(CLI::Range(0, 65535));

    EngineOptions ask_eo;
    AskOptions ao;
    auto* ask_cmd = app.add_subcommand("ask", "Answer a question with the agent");
    add_engine_options(ask_cmd, ask_eo);
    ask_cmd->add_option("question", ao.question, "Question (a scripted policy may supply it)");
    ask_cmd->add_option("--policy", ao.policy, "scripted:<file> or external:<url>");
    ask_cmd->add_flag("--trace", ao.trace, "Print one line per tool call");
    ask_cmd->add_flag("--json", ao.json_out, "Print the answer document as JSON");
    ask_cmd->add_option("--max-steps", ao.max_steps, "Step budget")->check(CLI::PositiveNumber);

    EngineOptions tool_eo;
    std::string tool_name, tool_args = "{}";
    auto* tool_cmd = app.add_subcommand("tool", "Call one tool directly");
    add_engine_options(tool_cmd, tool_eo);
    tool_cmd->add_option("name", tool_name, "Tool name")->required();
    tool_cmd->add_option("--args", tool_args, "Arguments as a JSON object");

    EngineOptions stats_eo;
    auto* stats_cmd = app.add_subcommand("stats", "Print the node label distribution");
    add_engine_options(stats_cmd, stats_eo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(io);
        if (*serve_cmd) return cmd_serve(serve_eo, port);
        if (*ask_cmd) return cmd_ask(ask_eo, ao);
        if (*tool_cmd) return cmd_tool(tool_eo, tool_name, tool_args);
        if (*stats_cmd) return cmd_stats(stats_eo);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kUsage;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", std::string(to_string(e.code())).c_str(), e.what());
        return kFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
    return kUsage;
}
