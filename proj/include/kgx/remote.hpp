#pragma once
// Embedder, reranker and policy implementations that delegate to an HTTP
// endpoint with JSON bodies.
//
//   embedder  POST {"model", "texts": [str]}            -> {"vectors": [[float]]}
//   reranker  POST {"model", "query", "texts": [str]}   -> {"scores": [float]}
//   policy    POST {"prompt", "request": {...}}         -> one action object

#include <chrono>
#include <string>

#include "kgx/agent.hpp"
#include "kgx/error.hpp"
#include "kgx/retrieval.hpp"

namespace kgx::gateway {

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // starts with '/'

    // Throws InvalidArgument for anything other than http://host[:port][/path].
    static Endpoint parse(std::string_view url);
};

// Sends `body` and parses the JSON reply. Transport failures, non-2xx status
// and unparsable replies throw Error(`failure`).
nlohmann::json post_json(const Endpoint& ep, const nlohmann::json& body,
                         std::chrono::milliseconds timeout, ErrorCode failure);

class RemoteEmbedder final : public retrieval::Embedder {
public:
    RemoteEmbedder(std::string url, std::size_t dimension, std::string model,
                   std::chrono::milliseconds timeout);
    std::string id() const override { return "remote:" + (model_.empty() ? url_ : model_); }
    std::size_t dimension() const override { return dimension_; }
    // Throws ProviderError on transport failure or a malformed reply, and
    // ZeroContent for an all-zero vector.
    std::vector<float> embed(std::string_view text) const override;

private:
    std::string url_;
    Endpoint ep_;
    std::size_t dimension_;
    std::string model_;
    std::chrono::milliseconds timeout_;
};

class RemoteReranker final : public retrieval::Reranker {
public:
    RemoteReranker(std::string url, std::string model, std::chrono::milliseconds timeout);
    std::string id() const override { return "remote:" + (model_.empty() ? url_ : model_); }
    // Throws RerankerUnavailable on any failure, which search turns into the
    // fused-order fallback.
    std::vector<double> score(std::string_view query,
                              std::span<const std::string> texts) const override;

private:
    std::string url_;
    Endpoint ep_;
    std::string model_;
    std::chrono::milliseconds timeout_;
};

// Policy backed by a remote model. The prompt is rendered from a versioned
// template file. A reply that is not a JSON object is a MalformedAction; a
// transport failure is a PolicyFailure.
class ExternalPolicy final : public agent::Policy {
public:
    ExternalPolicy(std::string url, std::string prompt_template, std::chrono::milliseconds timeout);
    std::string id() const override { return "external:" + url_; }
    nlohmann::json decide(const agent::PolicyRequest& request) override;

private:
    std::string url_;
    Endpoint ep_;
    std::string template_;
    std::chrono::milliseconds timeout_;
};

// Reads a prompt template; throws FileUnreadable.
std::string load_prompt_template(const std::string& path);

}  // namespace kgx::gateway
