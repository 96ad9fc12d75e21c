#include "kgx/service.hpp"

#include <cstdio>
#include <fstream>
#include <future>

#include <httplib.h>

#include "kgx/error.hpp"
#include "kgx/gql.hpp"
#include "kgx/remote.hpp"

namespace kgx::gateway {

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

int http_status(std::string_view code) {
    if (code == "ARG_SCHEMA" || code == "DEPTH_EXCEEDED" || code == "UNKNOWN_EDGE_TYPE") return 400;
    if (code == "UNKNOWN_TOOL" || code == "UNKNOWN_NODE" || code == "NOT_FOUND") return 404;
    if (code == "SESSION_CLOSED" || code == "ALREADY_EXISTS") return 409;
    if (code == "TIMEOUT") return 504;
    if (code == "INTERNAL" || code == "INVALID_CONFIG") return 500;
    return 422;
}

std::string correlation_id(const httplib::Request& req, std::atomic<std::uint64_t>& counter) {
    if (req.has_header("X-Correlation-Id")) return req.get_header_value("X-Correlation-Id");
    char buf[32];
    std::snprintf(buf, sizeof buf, "req-%06llu", static_cast<unsigned long long>(counter++));
    return buf;
}

void send(httplib::Response& res, int status, const json& body, const std::string& cid) {
    res.status = status;
    res.set_header("X-Correlation-Id", cid);
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, std::string_view code, const std::string& message,
                const std::string& cid) {
    send(res, http_status(code),
         {{"error", {{"code", code}, {"message", message}, {"correlation_id", cid}}}}, cid);
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidArgument, "request body is not valid JSON");
    }
}

json node_json(const Node& n) {
    json props = json::object();
    for (const auto& [k, v] : n.props) props[k] = tools::prop_to_json(v);
    return {{"id", n.id}, {"label", to_string(n.label)}, {"props", props}};
}

}  // namespace

std::string file_fingerprint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read '" + path.string() + "'");
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

Engine::Engine(ingest::KnowledgeBase kb, const Config& config, std::string fingerprint)
    : config_(config), kb_(std::move(kb)), fingerprint_(std::move(fingerprint)) {
    config_.tools.weights.validate();
    config_.agent.validate();
    std::shared_ptr<const retrieval::Embedder> embedder;
    if (config_.embedder.kind == "remote") {
        embedder = std::make_shared<RemoteEmbedder>(config_.embedder.endpoint, config_.embedder.dimension,
                                                    config_.embedder.model, config_.provider_timeout);
    } else {
        embedder = std::make_shared<retrieval::HashingEmbedder>(config_.embedder.dimension);
    }
    if (config_.reranker.kind == "remote") {
        reranker_ = std::make_shared<RemoteReranker>(config_.reranker.endpoint, config_.reranker.model,
                                                     config_.provider_timeout);
    } else {
        reranker_ = std::make_shared<retrieval::OverlapReranker>();
    }
    index_ = std::make_unique<retrieval::HybridIndex>(kb_.chunks, std::move(embedder), config_.retrieval);
    toolbox_ = std::make_unique<tools::Toolbox>(kb_.graph, *index_, *reranker_, config_.tools);
}

std::shared_ptr<const Engine> Engine::open(const Config& config) {
    auto fingerprint = file_fingerprint(config.snapshot);
    auto kb = ingest::load(config.snapshot, config.max_depth);
    return std::make_shared<const Engine>(std::move(kb), config, std::move(fingerprint));
}

std::shared_ptr<agent::Policy> Engine::make_policy() const {
    const auto& p = config_.policy;
    switch (p.kind) {
        case PolicyKind::Scripted:
            return std::make_shared<agent::ScriptedPolicy>(agent::load_script(p.target).actions);
        case PolicyKind::External: {
            if (p.prompt_template.empty()) {
                throw Error(ErrorCode::InvalidConfig, "config key 'agent.prompt_template' is required "
                                                      "for an external policy");
            }
            return std::make_shared<ExternalPolicy>(p.target, load_prompt_template(p.prompt_template),
                                                    config_.agent.policy_timeout);
        }
        case PolicyKind::None:
            break;
    }
    throw Error(ErrorCode::InvalidConfig, "config key 'agent.policy' is not set");
}

json neighborhood_json(const PropertyGraph& g, std::string_view id, int depth, EdgeTypeSet filter) {
    auto sub = g.neighborhood(id, depth, filter);
    json nodes = json::array(), edges = json::array();
    for (auto n : sub.nodes) nodes.push_back(node_json(g.node(n)));
    for (auto e : sub.edges) {
        const auto& edge = g.edge(e);
        edges.push_back({{"src", g.node(edge.src).id}, {"type", to_string(edge.type)}, {"dst", g.node(edge.dst).id}});
    }
    return {{"center", std::string(id)}, {"depth", depth}, {"nodes", nodes}, {"edges", edges}};
}

json stats_json(const PropertyGraph& g) {
    json dist = json::array();
    for (const auto& s : g.label_distribution()) {
        dist.push_back({{"label", to_string(s.label)}, {"count", s.count}, {"percentage", s.percentage}});
    }
    std::array<std::size_t, kEdgeTypeCount> edge_counts{};
    for (std::size_t i = 0; i < g.edge_count(); ++i) ++edge_counts[static_cast<std::size_t>(g.edge(i).type)];
    json edges = json::object();
    for (std::size_t t = 0; t < kEdgeTypeCount; ++t) {
        edges[std::string(to_string(static_cast<EdgeType>(t)))] = edge_counts[t];
    }
    return {{"nodes", g.node_count()}, {"edges", g.edge_count()}, {"distribution", dist}, {"edge_counts", edges}};
}

Service::Service(std::shared_ptr<const Engine> engine)
    : engine_(std::move(engine)), server_(std::make_unique<httplib::Server>()) {
    auto t = engine_->config().request_timeout;
    server_->set_read_timeout(t);
    server_->set_write_timeout(t);
    install_routes();
}

Service::~Service() { stop(); }

std::shared_ptr<Service::Entry> Service::find(const std::string& id) {
    std::lock_guard lock(registry_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'");
    return it->second;
}

void Service::install_routes() {
    auto& srv = *server_;

    // Wraps a handler with correlation ids and error mapping.
    auto route = [this](auto handler) {
        return [this, handler](const httplib::Request& req, httplib::Response& res) {
            auto cid = correlation_id(req, next_correlation_);
            try {
                handler(req, res, cid);
            } catch (const gql::QueryError& e) {
                send_error(res, to_string(e.code()), e.what(), cid);
            } catch (const Error& e) {
                send_error(res, to_string(e.code()), e.what(), cid);
            } catch (const std::exception& e) {
                send_error(res, "INTERNAL", e.what(), cid);
            }
        };
    };

    srv.Get("/healthz", route([this](const httplib::Request&, httplib::Response& res, const std::string& cid) {
        const auto& g = engine_->graph();
        send(res, 200,
             {{"status", "ok"},
              {"snapshot",
               {{"format", "KGX1"},
                {"fingerprint", engine_->fingerprint()},
                {"nodes", g.node_count()},
                {"edges", g.edge_count()},
                {"chunks", engine_->kb().chunks.size()}}}},
             cid);
    }));

    srv.Get("/graph/stats", route([this](const httplib::Request&, httplib::Response& res, const std::string& cid) {
        send(res, 200, stats_json(engine_->graph()), cid);
    }));

    srv.Get(R"(/graph/nodes/([^/]+)/neighborhood)",
            route([this](const httplib::Request& req, httplib::Response& res, const std::string& cid) {
                int depth = 1;
                if (req.has_param("depth")) {
                    const auto text = req.get_param_value("depth");
                    std::size_t used = 0;
                    try {
                        depth = std::stoi(text, &used);
                    } catch (const std::exception&) {
                        used = 0;
                    }
                    if (used == 0 || used != text.size() || depth < 1) {
                        throw Error(ErrorCode::InvalidArgument, "depth must be a positive integer");
                    }
                }
                EdgeTypeSet filter = EdgeTypeSet::all();
                if (req.has_param("types")) {
                    filter = EdgeTypeSet{};
                    std::string types = req.get_param_value("types");
                    std::size_t start = 0;
                    while (start <= types.size()) {
                        auto comma = types.find(',', start);
                        auto name = types.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
                        auto t = parse_edge_type(name);
                        if (!t) throw Error(ErrorCode::UnknownEdgeType, "unknown edge type '" + name + "'");
                        filter.insert(*t);
                        if (comma == std::string::npos) break;
                        start = comma + 1;
                    }
                }
                send(res, 200, neighborhood_json(engine_->graph(), req.matches[1].str(), depth, filter), cid);
            }));

    srv.Post(R"(/tools/([^/]+))",
             route([this](const httplib::Request& req, httplib::Response& res, const std::string& cid) {
                 json args = parse_body(req);
                 if (!args.is_object()) throw Error(ErrorCode::InvalidArgument, "arguments must be an object");
                 auto result = engine_->toolbox().call(tools::ToolCall{req.matches[1].str(), args, cid});
                 if (!result.ok) {
                     send_error(res, result.error_code, result.error_message, cid);
                     return;
                 }
                 send(res, 200, result.to_json(true), cid);
             }));

    srv.Post("/sessions", route([this](const httplib::Request&, httplib::Response& res, const std::string& cid) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "s-%06llu", static_cast<unsigned long long>(next_session_++));
        {
            std::lock_guard lock(registry_mutex_);
            sessions_.emplace(buf, std::make_shared<Entry>());
        }
        send(res, 201, {{"session_id", buf}, {"status", "created"}}, cid);
    }));

    srv.Post(R"(/sessions/([^/]+)/ask)",
             route([this](const httplib::Request& req, httplib::Response& res, const std::string& cid) {
                 const std::string id = req.matches[1].str();
                 auto entry = find(id);
                 json body = parse_body(req);
                 if (!body.is_object() || !body.contains("query") || !body["query"].is_string()) {
                     throw Error(ErrorCode::InvalidArgument, "body must be {\"query\": string, \"script\"?: array}");
                 }
                 std::shared_ptr<agent::Policy> policy;
                 if (body.contains("script")) {
                     if (!body["script"].is_array()) throw Error(ErrorCode::InvalidArgument, "script must be an array");
                     policy = std::make_shared<agent::ScriptedPolicy>(body["script"].get<std::vector<json>>());
                 } else {
                     policy = engine_->make_policy();
                 }
                 const auto& cfg = engine_->config().agent;
                 auto session = agent::start_session(id, body["query"].get<std::string>(), cfg);
                 {
                     std::lock_guard lock(entry->state);
                     if (entry->session || entry->busy) {
                         throw Error(ErrorCode::SessionClosed, "session '" + id + "' has already been asked");
                     }
                     entry->session = session;
                     entry->busy = true;
                 }

                 // The session advances on its own thread; this request waits
                 // for it up to the request timeout.
                 auto done = std::make_shared<std::promise<void>>();
                 auto finished = done->get_future();
                 std::thread([engine = engine_, entry, policy, done, session]() mutable {
                     std::lock_guard advance(entry->advance);
                     const auto& config = engine->config().agent;
                     while (!session.terminal()) {
                         agent::step(session, policy, engine->toolbox(), config);
                         std::lock_guard lock(entry->state);
                         entry->session = session;
                     }
                     {
                         std::lock_guard lock(entry->state);
                         entry->busy = false;
                     }
                     done->set_value();
                 }).detach();

                 if (finished.wait_for(engine_->config().request_timeout) != std::future_status::ready) {
                     throw Error(ErrorCode::Timeout, "session '" + id + "' is still running; poll GET /sessions/" + id);
                 }
                 std::lock_guard lock(entry->state);
                 send(res, 200,
                      {{"session", agent::to_json(*entry->session, true)},
                       {"answer", agent::render_answer(*entry->session, engine_->graph())}},
                      cid);
             }));

    srv.Get(R"(/sessions/([^/]+))",
            route([this](const httplib::Request& req, httplib::Response& res, const std::string& cid) {
                const std::string id = req.matches[1].str();
                auto entry = find(id);
                std::lock_guard lock(entry->state);
                json body{{"session_id", id}};
                if (!entry->session) {
                    body["status"] = "created";
                    body["transcript"] = nullptr;
                } else {
                    body["status"] = to_string(entry->session->status);
                    body["transcript"] = agent::to_json(*entry->session, true);
                    if (entry->session->terminal()) {
                        body["answer"] = agent::render_answer(*entry->session, engine_->graph());
                    }
                }
                send(res, 200, body, cid);
            }));

    srv.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        auto cid = correlation_id(req, next_correlation_);
        std::string code = res.status == 404 ? "NOT_FOUND" : "HTTP_" + std::to_string(res.status);
        int status = res.status;
        send(res, status, {{"error", {{"code", code}, {"message", "no route for " + req.method + " " + req.path}, {"correlation_id", cid}}}}, cid);
    });
}

int Service::start(const std::string& host, int port) {
    int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void Service::run(const std::string& host, int port) {
    if (!server_->bind_to_port(host, port)) {
        throw Error(ErrorCode::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port));
    }
    server_->listen_after_bind();
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace kgx::gateway
