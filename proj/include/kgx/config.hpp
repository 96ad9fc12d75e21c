#pragma once
// Process configuration read from a JSON file. Every key is optional; unknown
// keys and out-of-range values are rejected with the dotted key path named
// in the InvalidConfig message.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "kgx/agent.hpp"
#include "kgx/retrieval.hpp"
#include "kgx/tools.hpp"

namespace kgx::gateway {

using json = nlohmann::json;

inline constexpr const char* kConfigEnv = "KGX_CONFIG";

struct ProviderConfig {
    std::string kind;      // embedder: hashing | remote; reranker: overlap | remote
    std::string endpoint;  // remote only
    std::size_t dimension = 256;
    std::string model;  // passed through to remote providers
};

enum class PolicyKind { None, Scripted, External };

struct PolicyBinding {
    PolicyKind kind = PolicyKind::None;
    std::string target;  // script path or endpoint URL
    std::string prompt_template;

    // "scripted:<file>" or "external:<url>"; throws InvalidArgument otherwise.
    static PolicyBinding parse(std::string_view spec);
};

struct Config {
    std::filesystem::path snapshot = "kgx.snapshot";
    retrieval::HybridConfig retrieval;
    ProviderConfig embedder{"hashing", "", 256, ""};
    ProviderConfig reranker{"overlap", "", 0, ""};
    std::chrono::milliseconds provider_timeout{10'000};
    int max_depth = 4;
    tools::ToolConfig tools;
    agent::AgentConfig agent;
    PolicyBinding policy;
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::chrono::milliseconds request_timeout{30'000};
};

// Relative paths are resolved against `base_dir`. Throws InvalidConfig.
Config config_from_json(const json& j, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

// Explicit path, else $KGX_CONFIG, else nothing.
std::optional<std::filesystem::path> resolve_config_path(const std::string& explicit_path);

}  // namespace kgx::gateway
