#include "kgx/remote.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "kgx/error.hpp"

namespace kgx::gateway {

using json = nlohmann::json;

namespace {

struct RawReply {
    int status = 0;
    std::string body;
};

RawReply post_raw(const Endpoint& ep, const json& body, std::chrono::milliseconds timeout,
                  ErrorCode failure) {
    httplib::Client client(ep.base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(ep.path, body.dump(), "application/json");
    if (!res) {
        throw Error(failure, "request to " + ep.base + ep.path + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(failure, ep.base + ep.path + " answered HTTP " + std::to_string(res->status));
    }
    return {res->status, res->body};
}

}  // namespace

Endpoint Endpoint::parse(std::string_view url) {
    constexpr std::string_view scheme = "http://";
    if (url.substr(0, scheme.size()) != scheme || url.size() == scheme.size()) {
        throw Error(ErrorCode::InvalidArgument, "endpoint must be http://host[:port][/path], got '" +
                                                    std::string(url) + "'");
    }
    auto slash = url.find('/', scheme.size());
    Endpoint ep;
    ep.base = std::string(url.substr(0, slash));
    ep.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
    return ep;
}

json post_json(const Endpoint& ep, const json& body, std::chrono::milliseconds timeout,
               ErrorCode failure) {
    auto reply = post_raw(ep, body, timeout, failure);
    try {
        return json::parse(reply.body);
    } catch (const json::exception& e) {
        throw Error(failure, ep.base + ep.path + " sent invalid JSON: " + e.what());
    }
}

RemoteEmbedder::RemoteEmbedder(std::string url, std::size_t dimension, std::string model,
                               std::chrono::milliseconds timeout)
    : url_(std::move(url)),
      ep_(Endpoint::parse(url_)),
      dimension_(dimension),
      model_(std::move(model)),
      timeout_(timeout) {}

std::vector<float> RemoteEmbedder::embed(std::string_view text) const {
    json body{{"model", model_}, {"texts", json::array({std::string(text)})}};
    json reply = post_json(ep_, body, timeout_, ErrorCode::ProviderError);
    const json* vectors = reply.is_object() && reply.contains("vectors") ? &reply["vectors"] : nullptr;
    if (vectors == nullptr || !vectors->is_array() || vectors->size() != 1 || !(*vectors)[0].is_array()) {
        throw Error(ErrorCode::ProviderError, "embedder reply must hold one vector under 'vectors'");
    }
    const auto& v = (*vectors)[0];
    if (v.size() != dimension_) {
        throw Error(ErrorCode::ProviderError, "embedder returned dimension " + std::to_string(v.size()) +
                                                  ", expected " + std::to_string(dimension_));
    }
    std::vector<double> acc(dimension_);
    double norm = 0;
    for (std::size_t i = 0; i < dimension_; ++i) {
        if (!v[i].is_number()) throw Error(ErrorCode::ProviderError, "embedder vector has a non-number");
        acc[i] = v[i].get<double>();
        norm += acc[i] * acc[i];
    }
    if (norm == 0 || !std::isfinite(norm)) {
        throw Error(ErrorCode::ZeroContent, "embedder returned a zero or non-finite vector");
    }
    norm = std::sqrt(norm);
    std::vector<float> out(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

RemoteReranker::RemoteReranker(std::string url, std::string model, std::chrono::milliseconds timeout)
    : url_(std::move(url)), ep_(Endpoint::parse(url_)), model_(std::move(model)), timeout_(timeout) {}

std::vector<double> RemoteReranker::score(std::string_view query,
                                          std::span<const std::string> texts) const {
    json body{{"model", model_}, {"query", std::string(query)}, {"texts", json(std::vector<std::string>(texts.begin(), texts.end()))}};
    json reply = post_json(ep_, body, timeout_, ErrorCode::RerankerUnavailable);
    if (!reply.is_object() || !reply.contains("scores") || !reply["scores"].is_array()) {
        throw Error(ErrorCode::RerankerUnavailable, "reranker reply must hold 'scores'");
    }
    std::vector<double> out;
    for (const auto& s : reply["scores"]) {
        if (!s.is_number()) throw Error(ErrorCode::RerankerUnavailable, "reranker score is not a number");
        out.push_back(s.get<double>());
    }
    return out;
}

ExternalPolicy::ExternalPolicy(std::string url, std::string prompt_template,
                               std::chrono::milliseconds timeout)
    : url_(std::move(url)), ep_(Endpoint::parse(url_)), template_(std::move(prompt_template)), timeout_(timeout) {}

json ExternalPolicy::decide(const agent::PolicyRequest& request) {
    json body{{"prompt", agent::render_prompt(template_, request)}, {"request", agent::to_json(request)}};
    auto reply = post_raw(ep_, body, timeout_, ErrorCode::PolicyFailure);
    json action;
    try {
        action = json::parse(reply.body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::MalformedAction, "policy reply is not JSON");
    }
    if (!action.is_object()) throw Error(ErrorCode::MalformedAction, "policy reply is not a JSON object");
    return action;
}

std::string load_prompt_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read prompt template '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace kgx::gateway
