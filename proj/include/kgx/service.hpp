#pragma once
// Loaded snapshot plus indexes and tools, and the HTTP API over it.
//
//   POST /sessions                            create a session
//   POST /sessions/{id}/ask                   {"query", "script"?} run to completion
//   GET  /sessions/{id}                       transcript (+ answer once terminal)
//   POST /tools/{name}                        direct tool call, body = arguments
//   GET  /graph/nodes/{id}/neighborhood?depth=&types=
//   GET  /graph/stats
//   GET  /healthz
//
// Failures answer {"error": {"code", "message", "correlation_id"}}.

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "kgx/agent.hpp"
#include "kgx/config.hpp"
#include "kgx/ingest.hpp"
#include "kgx/tools.hpp"

namespace httplib {
class Server;
}

namespace kgx::gateway {

// Immutable after construction; shared by every request and session.
class Engine {
public:
    // Loads the snapshot named in the config and builds both indexes. Throws
    // on any startup failure.
    static std::shared_ptr<const Engine> open(const Config& config);
    Engine(ingest::KnowledgeBase kb, const Config& config, std::string fingerprint = {});

    const Config& config() const { return config_; }
    const ingest::KnowledgeBase& kb() const { return kb_; }
    const PropertyGraph& graph() const { return kb_.graph; }
    const retrieval::HybridIndex& index() const { return *index_; }
    const tools::Toolbox& toolbox() const { return *toolbox_; }
    // FNV-1a 64 of the snapshot bytes, hex; empty when built in memory.
    const std::string& fingerprint() const { return fingerprint_; }

    // The configured policy; throws InvalidConfig when none is configured.
    std::shared_ptr<agent::Policy> make_policy() const;

private:
    Config config_;
    ingest::KnowledgeBase kb_;
    std::unique_ptr<retrieval::HybridIndex> index_;
    std::shared_ptr<retrieval::Reranker> reranker_;
    std::unique_ptr<tools::Toolbox> toolbox_;
    std::string fingerprint_;
};

std::string file_fingerprint(const std::filesystem::path& path);

json neighborhood_json(const PropertyGraph& g, std::string_view id, int depth, EdgeTypeSet filter);
json stats_json(const PropertyGraph& g);

class Service {
public:
    explicit Service(std::shared_ptr<const Engine> engine);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds (port 0 picks a free one) and serves on a background thread.
    // Returns the bound port; throws on bind failure.
    int start(const std::string& host, int port);
    // Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    struct Entry {
        std::mutex advance;  // held while the session is being stepped
        std::mutex state;
        std::optional<agent::Session> session;
        bool busy = false;
    };

    void install_routes();
    std::shared_ptr<Entry> find(const std::string& id);

    std::shared_ptr<const Engine> engine_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::atomic<std::uint64_t> next_session_{1};
    std::atomic<std::uint64_t> next_correlation_{1};
};

}  // namespace kgx::gateway
