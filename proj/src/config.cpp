#include "kgx/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "kgx/error.hpp"

namespace kgx::gateway {

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + key + "' " + what);
}

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) invalid(path_.empty() ? "<root>" : path_, "must be an object");
    }

    std::string key(std::string_view k) const {
        return path_.empty() ? std::string(k) : path_ + "." + std::string(k);
    }

    const json* get(const char* k) {
        seen_.insert(k);
        auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const char* k, double& out, double lo, double hi) {
        if (const json* v = get(k)) {
            if (!v->is_number()) invalid(key(k), "must be a number");
            double d = v->get<double>();
            if (!(d >= lo && d <= hi)) {
                invalid(key(k), "must be in [" + fmt(lo) + ", " + fmt(hi) + "]");
            }
            out = d;
        }
    }

    template <class Int>
    void integer(const char* k, Int& out, long long lo, long long hi) {
        if (const json* v = get(k)) {
            if (!v->is_number_integer()) invalid(key(k), "must be an integer");
            long long n = v->get<long long>();
            if (n < lo || n > hi) {
                invalid(key(k), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            }
            out = static_cast<Int>(n);
        }
    }

    void millis(const char* k, std::chrono::milliseconds& out) {
        long long ms = out.count();
        integer(k, ms, 1, 24LL * 3600 * 1000);
        out = std::chrono::milliseconds(ms);
    }

    void string(const char* k, std::string& out, bool allow_empty = false) {
        if (const json* v = get(k)) {
            if (!v->is_string()) invalid(key(k), "must be a string");
            out = v->get<std::string>();
            if (out.empty() && !allow_empty) invalid(key(k), "must not be empty");
        }
    }

    std::optional<Section> section(const char* k) {
        if (const json* v = get(k)) return Section(*v, key(k));
        return std::nullopt;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) invalid(key(k), "is not recognised");
        }
    }

private:
    static std::string fmt(double d) {
        auto s = std::to_string(d);
        while (s.size() > 1 && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    }

    const json& j_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

void read_provider(Section& s, ProviderConfig& p, std::initializer_list<std::string_view> kinds,
                   bool has_dimension) {
    s.string("kind", p.kind);
    if (std::find(kinds.begin(), kinds.end(), p.kind) == kinds.end()) {
        invalid(s.key("kind"), "has unsupported value '" + p.kind + "'");
    }
    s.string("endpoint", p.endpoint);
    s.string("model", p.model, true);
    if (has_dimension) s.integer("dimension", p.dimension, 1, 65536);
    if (p.kind == "remote" && p.endpoint.rfind("http://", 0) != 0) {
        invalid(s.key("endpoint"), "must be an http:// URL for a remote provider");
    }
    s.finish();
}

}  // namespace

PolicyBinding PolicyBinding::parse(std::string_view spec) {
    PolicyBinding b;
    auto colon = spec.find(':');
    if (colon == std::string_view::npos || colon + 1 == spec.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "policy must be scripted:<file> or external:<url>, got '" + std::string(spec) + "'");
    }
    auto kind = spec.substr(0, colon);
    b.target = std::string(spec.substr(colon + 1));
    if (kind == "scripted") {
        b.kind = PolicyKind::Scripted;
    } else if (kind == "external") {
        b.kind = PolicyKind::External;
        if (b.target.rfind("http://", 0) != 0) {
            throw Error(ErrorCode::InvalidArgument, "external policy endpoint must be an http:// URL");
        }
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown policy kind '" + std::string(kind) + "'");
    }
    return b;
}

Config config_from_json(const json& j, const std::filesystem::path& base_dir) {
    Config c;
    Section root(j, "");

    if (auto s = root.section("data")) {
        std::string snap;
        s->string("snapshot", snap);
        if (!snap.empty()) c.snapshot = resolve(base_dir, snap);
        s->finish();
    } else {
        c.snapshot = resolve(base_dir, c.snapshot.string());
    }

    if (auto s = root.section("retrieval")) {
        s->number("k1", c.retrieval.bm25.k1, 0.0, 100.0);
        s->number("b", c.retrieval.bm25.b, 0.0, 1.0);
        s->number("rrf_constant", c.retrieval.rrf_constant, 0.0, 1e6);
        if (c.retrieval.rrf_constant <= 0) invalid("retrieval.rrf_constant", "must be > 0");
        s->integer("pool_size", c.retrieval.pool_size, 1, 100000);
        s->millis("provider_timeout_ms", c.provider_timeout);
        if (auto e = s->section("embedder")) read_provider(*e, c.embedder, {"hashing", "remote"}, true);
        if (auto r = s->section("reranker")) read_provider(*r, c.reranker, {"overlap", "remote"}, false);
        s->finish();
    }
    c.tools.pool_size = c.retrieval.pool_size;

    if (auto s = root.section("graph")) {
        s->integer("max_depth", c.max_depth, 1, 16);
        s->finish();
    }

    if (auto s = root.section("tools")) {
        s->integer("row_budget", c.tools.row_budget, 1, 1000000);
        s->integer("max_bindings", c.tools.exec.max_bindings, 1, 100000000);
        s->number("weak_threshold", c.tools.weak_threshold, 0.0, 1.0);
        s->integer("excerpt_chars", c.tools.excerpt_chars, 1, 100000);
        s->finish();
    }

    if (auto s = root.section("experts")) {
        if (const json* w = s->get("weights")) {
            if (!w->is_array() || w->size() != tools::kMetricCount) {
                invalid(s->key("weights"), "must be an array of 6 numbers");
            }
            for (std::size_t i = 0; i < tools::kMetricCount; ++i) {
                if (!(*w)[i].is_number()) invalid(s->key("weights"), "must be an array of 6 numbers");
                c.tools.weights.w[i] = (*w)[i].get<double>();
            }
            try {
                c.tools.weights.validate();
            } catch (const Error& e) {
                invalid(s->key("weights"), std::string("is invalid: ") + e.what());
            }
        }
        s->integer("retrieval_depth", c.tools.expert_retrieval_depth, 1, 100000);
        s->number("relevance_threshold", c.tools.relevance_threshold, 0.0, 1.0);
        s->finish();
    }

    if (auto s = root.section("agent")) {
        s->integer("max_steps", c.agent.max_steps, 1, 1000);
        s->millis("policy_timeout_ms", c.agent.policy_timeout);
        s->integer("result_char_budget", c.agent.result_char_budget, 1, 10000000);
        std::string policy;
        s->string("policy", policy);
        if (!policy.empty()) {
            try {
                c.policy = PolicyBinding::parse(policy);
            } catch (const Error& e) {
                invalid(s->key("policy"), std::string("is invalid: ") + e.what());
            }
            if (c.policy.kind == PolicyKind::Scripted) {
                c.policy.target = resolve(base_dir, c.policy.target).string();
            }
        }
        std::string tmpl;
        s->string("prompt_template", tmpl);
        if (!tmpl.empty()) c.policy.prompt_template = resolve(base_dir, tmpl).string();
        s->finish();
    }

    if (auto s = root.section("service")) {
        s->string("host", c.host);
        s->integer("port", c.port, 0, 65535);
        s->millis("request_timeout_ms", c.request_timeout);
        s->finish();
    }

    root.finish();
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read config '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, "config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

std::optional<std::filesystem::path> resolve_config_path(const std::string& explicit_path) {
    if (!explicit_path.empty()) return std::filesystem::path(explicit_path);
    if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::nullopt;
}

}  // namespace kgx::gateway
