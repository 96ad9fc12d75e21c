#include "kgx/tools.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "kgx/error.hpp"

namespace kgx::tools {

namespace {

using Clock = std::chrono::steady_clock;

std::string graph_tool_description() {
    std::string d =
        "Run a read-only graph query: MATCH pattern[, pattern] [WHERE predicate] "
        "RETURN [DISTINCT] items [ORDER BY item [DESC]] [LIMIT n]. Patterns look like "
        "(a:Author)-[:AUTHORED]->(p:Publication); hops may be variable, e.g. -[:T*1..3]->, at "
        "most 4. Items are variables, v.property, COUNT(v) or COUNT(DISTINCT v). Predicates "
        "compare with = <> < <= > >= CONTAINS and combine with AND, OR, NOT. Node labels: ";
    for (std::size_t i = 0; i < kNodeLabelCount; ++i) {
        d += std::string(i ? ", " : "") + std::string(to_string(static_cast<NodeLabel>(i)));
    }
    d += ". Relationships: ";
    for (std::size_t i = 0; i < kEdgeTypeCount; ++i) {
        auto t = static_cast<EdgeType>(i);
        auto sig = edge_signature(t);
        d += std::string(i ? ", " : "") + "(" + std::string(to_string(sig.src)) + ")-[:" +
             std::string(to_string(t)) + "]->(" + std::string(to_string(sig.dst)) + ")";
    }
    d += ". Every node has an id property.";
    return d;
}

std::vector<ToolSpec> build_specs() {
    using T = ArgSpec::Type;
    return {
        {std::string(kSearchGraph), graph_tool_description(),
         {{"query", T::String, true, {}, {}, {}, "graph query text"}}},
        {std::string(kSearchPublications),
         "Hybrid keyword and semantic search over publication texts. Returns publication ids, "
         "titles, scores, excerpts and authors; weak_results is set when nothing scores well.",
         {{"query", T::String, true, {}, {}, {}, "free-text query"},
          {"k", T::Integer, false, 1, 50, 10, "number of hits"}}},
        {std::string(kSearchConceptsKeywords),
         "Find thesaurus concepts and author keywords whose labels match the text; use the "
         "returned ids as entry points for graph queries.",
         {{"query", T::String, true, {}, {}, {}, "term or phrase"},
          {"k", T::Integer, false, 1, 100, 10, "number of matches"}}},
        {std::string(kIdentifyExperts),
         "Rank authors by expertise on a topic using a composite of relevance, top-rank "
         "presence, publication count, citations, activity span and recency.",
         {{"topic", T::String, true, {}, {}, {}, "topic text"},
          {"k", T::Integer, false, 1, 50, 10, "number of experts"},
          {"reference_year", T::Integer, true, 1900, 2100, {},
           "year against which recency is measured"}}},
    };
}

[[noreturn]] void arg_error(std::string_view tool, const std::string& message) {
    throw Error(ErrorCode::InvalidArgument, std::string(tool) + ": " + message);
}

std::string prop_string(const Node& n, std::string_view key) {
    auto it = n.props.find(key);
    if (it == n.props.end()) return {};
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    return {};
}

std::int64_t prop_int(const Node& n, std::string_view key, std::int64_t fallback = 0) {
    auto it = n.props.find(key);
    if (it == n.props.end()) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
    return fallback;
}

json cell_json(const gql::Value& v, const std::function<json(const std::string&)>& node) {
    return std::visit(
        [&](const auto& x) -> json {
            using X = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<X, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<X, gql::NodeRef>) {
                return node(x.id);
            } else {
                return x;
            }
        },
        v);
}

}  // namespace

const std::vector<ToolSpec>& tool_specs() {
    static const std::vector<ToolSpec> specs = build_specs();
    return specs;
}

const ToolSpec* find_tool(std::string_view name) {
    for (const auto& s : tool_specs()) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

json manifest() {
    json out = json::array();
    for (const auto& spec : tool_specs()) {
        json args = json::array();
        for (const auto& a : spec.args) {
            json d{{"name", a.name},
                   {"type", a.type == ArgSpec::Type::String ? "string" : "integer"},
                   {"required", a.required},
                   {"description", a.description}};
            if (a.min) d["minimum"] = *a.min;
            if (a.max) d["maximum"] = *a.max;
            if (a.default_value) d["default"] = *a.default_value;
            args.push_back(std::move(d));
        }
        out.push_back({{"name", spec.name}, {"description", spec.description}, {"arguments", args}});
    }
    return out;
}

json validate_args(std::string_view tool_name, const json& args) {
    const ToolSpec* spec = find_tool(tool_name);
    if (spec == nullptr) {
        throw Error(ErrorCode::UnknownTool, "unknown tool '" + std::string(tool_name) + "'");
    }
    if (!args.is_object()) arg_error(tool_name, "arguments must be an object");
    for (const auto& [key, value] : args.items()) {
        bool known = std::any_of(spec->args.begin(), spec->args.end(),
                                 [&](const ArgSpec& a) { return a.name == key; });
        if (!known) arg_error(tool_name, "unknown argument '" + key + "'");
    }
    json out = json::object();
    for (const auto& a : spec->args) {
        auto it = args.find(a.name);
        if (it == args.end() || it->is_null()) {
            if (a.required) arg_error(tool_name, "missing required argument '" + a.name + "'");
            if (a.default_value) out[a.name] = *a.default_value;
            continue;
        }
        if (a.type == ArgSpec::Type::String) {
            if (!it->is_string()) arg_error(tool_name, "'" + a.name + "' must be a string");
            const auto& s = it->get_ref<const std::string&>();
            if (s.find_first_not_of(" \t\r\n") == std::string::npos) {
                arg_error(tool_name, "'" + a.name + "' must not be empty");
            }
            out[a.name] = s;
        } else {
            if (!it->is_number_integer()) arg_error(tool_name, "'" + a.name + "' must be an integer");
            auto v = it->get<std::int64_t>();
            if ((a.min && v < *a.min) || (a.max && v > *a.max)) {
                arg_error(tool_name, "'" + a.name + "' = " + std::to_string(v) + " is outside [" +
                                         std::to_string(a.min.value_or(INT64_MIN)) + ", " +
                                         std::to_string(a.max.value_or(INT64_MAX)) + "]");
            }
            out[a.name] = v;
        }
    }
    return out;
}

// ---------------------------------------------------------------- results

json ToolResult::to_json(bool with_elapsed) const {
    json j{{"call_id", call_id},
           {"tool", tool_name},
           {"status", ok ? "ok" : "error"},
           {"truncated", truncated}};
    if (ok) {
        j["payload"] = payload;
    } else {
        j["error"] = {{"code", error_code}, {"message", error_message}};
    }
    if (with_elapsed) {
        j["elapsed_ms"] = std::chrono::duration<double, std::milli>(elapsed).count();
    }
    return j;
}

ToolResult ToolResult::from_json(const json& j) {
    ToolResult r;
    r.call_id = j.at("call_id").get<std::string>();
    r.tool_name = j.at("tool").get<std::string>();
    r.ok = j.at("status").get<std::string>() == "ok";
    r.truncated = j.value("truncated", false);
    if (r.ok) {
        r.payload = j.at("payload");
    } else {
        r.error_code = j.at("error").at("code").get<std::string>();
        r.error_message = j.at("error").at("message").get<std::string>();
    }
    if (j.contains("elapsed_ms")) {
        r.elapsed = std::chrono::nanoseconds(
            static_cast<std::int64_t>(j["elapsed_ms"].get<double>() * 1e6));
    }
    return r;
}

json prop_to_json(const PropValue& v) {
    return std::visit([](const auto& x) -> json { return x; }, v);
}

// ---------------------------------------------------------------- scoring helpers

std::string_view metric_name(std::size_t i) {
    static constexpr std::array<std::string_view, kMetricCount> names = {
        "mean_relevance", "top_decile_count",    "relevant_pub_count",
        "citation_sum",   "activity_span_years", "recency_years"};
    return names.at(i);
}

void ExpertWeights::validate() const {
    double sum = 0;
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (!(w[i] >= 0.0) || !std::isfinite(w[i])) {
            throw Error(ErrorCode::InvalidConfig,
                        "expert weight '" + std::string(metric_name(i)) + "' must be non-negative");
        }
        sum += w[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidConfig,
                    "expert weights must sum to 1, got " + std::to_string(sum));
    }
}

std::vector<ExpertScore> score_experts(std::vector<ExpertScore> candidates,
                                       const ExpertWeights& weights) {
    weights.validate();
    constexpr std::size_t kRecency = 5;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& c : candidates) {
            lo = std::min(lo, c.raw[m]);
            hi = std::max(hi, c.raw[m]);
        }
        for (auto& c : candidates) {
            if (hi == lo) {
                c.normalized[m] = 0.5;
            } else if (m == kRecency) {
                c.normalized[m] = (hi - c.raw[m]) / (hi - lo);
            } else {
                c.normalized[m] = (c.raw[m] - lo) / (hi - lo);
            }
        }
    }
    for (auto& c : candidates) {
        c.composite = 0.0;
        for (std::size_t m = 0; m < kMetricCount; ++m) c.composite += weights.w[m] * c.normalized[m];
    }
    std::sort(candidates.begin(), candidates.end(), [](const ExpertScore& a, const ExpertScore& b) {
        if (a.composite != b.composite) return a.composite > b.composite;
        return a.author_id < b.author_id;
    });
    return candidates;
}

double label_match_score(const std::vector<std::string>& query_tokens, std::string_view label) {
    auto label_tokens = retrieval::tokenize(label);
    if (query_tokens.empty() || label_tokens.empty()) return 0.0;
    if (label_tokens == query_tokens) return 1.0;
    if (label_tokens.size() > query_tokens.size() &&
        std::equal(query_tokens.begin(), query_tokens.end(), label_tokens.begin())) {
        return 0.8;
    }
    std::set<std::string> q(query_tokens.begin(), query_tokens.end());
    std::set<std::string> l(label_tokens.begin(), label_tokens.end());
    std::size_t shared = 0;
    for (const auto& t : q) shared += l.count(t);
    return static_cast<double>(shared) / static_cast<double>(q.size() + l.size() - shared);
}

std::string utf8_prefix(std::string_view s, std::size_t max_chars) {
    std::size_t i = 0, chars = 0;
    while (i < s.size() && chars < max_chars) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : (c & 0xF8) == 0xF0 ? 4 : 1;
        i = std::min(s.size(), i + len);
        ++chars;
    }
    return std::string(s.substr(0, i));
}

// ---------------------------------------------------------------- toolbox

Toolbox::Toolbox(const PropertyGraph& graph, const retrieval::HybridIndex& index,
                 const retrieval::Reranker& reranker, ToolConfig config)
    : graph_(graph), index_(index), reranker_(reranker), config_(std::move(config)) {
    config_.weights.validate();
}

json Toolbox::node_json(NodeIndex n) const {
    const auto& node = graph_.node(n);
    json props = json::object();
    for (const auto& [k, v] : node.props) props[k] = prop_to_json(v);
    return {{"id", node.id}, {"label", std::string(to_string(node.label))}, {"props", props}};
}

json Toolbox::search_graph(const std::string& query, bool& truncated) const {
    auto q = gql::parse(query);
    auto table = gql::execute(q, graph_, config_.exec);
    truncated = table.rows.size() > config_.row_budget;
    auto node = [&](const std::string& id) { return node_json(*graph_.find(id)); };
    json rows = json::array();
    std::size_t n = std::min(table.rows.size(), config_.row_budget);
    for (std::size_t i = 0; i < n; ++i) {
        json row = json::array();
        for (const auto& cell : table.rows[i]) row.push_back(cell_json(cell, node));
        rows.push_back(std::move(row));
    }
    return {{"query", gql::canonical_print(q)},
            {"columns", table.columns},
            {"rows", rows},
            {"row_count", table.rows.size()},
            {"truncated", truncated}};
}

json Toolbox::search_publications(const std::string& query, std::size_t k) const {
    auto result = index_.search(query, k, reranker_, config_.pool_size);
    json hits = json::array();
    for (const auto& h : result.hits) {
        auto n = graph_.find(h.chunk_id);
        const auto* chunk = index_.chunk(h.chunk_id);
        json authors = json::array();
        std::string title;
        std::int64_t year = 0;
        if (n) {
            const auto& node = graph_.node(*n);
            title = prop_string(node, "title");
            year = prop_int(node, "year");
            std::vector<std::pair<std::string, std::string>> names;
            for (EdgeIndex e : graph_.edges_of(*n, Direction::In, EdgeType::Authored)) {
                const auto& a = graph_.node(graph_.edge(e).src);
                names.emplace_back(a.id, prop_string(a, "name"));
            }
            std::sort(names.begin(), names.end());
            for (auto& [id, name] : names) authors.push_back({{"id", id}, {"name", name}});
        }
        hits.push_back({{"id", h.chunk_id},
                        {"rank", h.rank},
                        {"score", h.score},
                        {"title", title},
                        {"year", year},
                        {"authors", authors},
                        {"excerpt", chunk ? utf8_prefix(chunk->text, config_.excerpt_chars) : ""}});
    }
    bool weak = result.hits.empty() || result.hits.front().score < config_.weak_threshold;
    return {{"query", query},
            {"hits", hits},
            {"weak_results", weak},
            {"reranker_fallback", result.fallback}};
}

json Toolbox::search_concepts_keywords(const std::string& query, std::size_t k) const {
    auto q = retrieval::tokenize(query);
    struct Match {
        double score;
        int kind;  // 0 Concept, 1 Keyword
        std::string id;
        std::string label;
    };
    std::vector<Match> matches;
    auto consider = [&](NodeLabel label, int kind) {
        for (NodeIndex n : graph_.nodes_with_label(label)) {
            const auto& node = graph_.node(n);
            std::string preferred = prop_string(node, "label");
            double best = label_match_score(q, preferred);
            auto alts = node.props.find("alt_labels");
            if (alts != node.props.end()) {
                if (const auto* list = std::get_if<std::vector<std::string>>(&alts->second)) {
                    for (const auto& a : *list) best = std::max(best, label_match_score(q, a));
                }
            }
            if (best > 0.0) matches.push_back({best, kind, node.id, preferred});
        }
    };
    consider(NodeLabel::Concept, 0);
    consider(NodeLabel::Keyword, 1);
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.id < b.id;
    });
    if (matches.size() > k) matches.resize(k);
    json out = json::array();
    for (const auto& m : matches) {
        out.push_back({{"id", m.id},
                       {"label", m.label},
                       {"kind", m.kind == 0 ? "Concept" : "Keyword"},
                       {"score", m.score}});
    }
    return {{"query", query}, {"matches", out}};
}

json Toolbox::identify_experts(const std::string& topic, std::size_t k, int reference_year) const {
    const std::size_t depth = config_.expert_retrieval_depth;
    auto result = index_.search(topic, depth, reranker_, std::max(config_.pool_size, depth));
    std::vector<retrieval::RankedHit> relevant;
    for (const auto& h : result.hits) {
        if (result.fallback || h.score >= config_.relevance_threshold) relevant.push_back(h);
    }
    if (relevant.empty()) {
        throw Error(ErrorCode::NoRelevantPublications,
                    "no publication is relevant to '" + topic + "'");
    }
    const std::size_t top_cut = (depth + 9) / 10;  // ceil(0.1 * R)

    struct Acc {
        std::string name;
        double relevance_sum = 0;
        std::size_t top = 0, count = 0;
        std::int64_t citations = 0;
        std::int64_t first = INT64_MAX, last = INT64_MIN;
        std::vector<std::string> pubs;
    };
    std::map<std::string, Acc> by_author;
    for (const auto& h : relevant) {
        auto pub = graph_.find(h.chunk_id);
        if (!pub) continue;
        const auto& pnode = graph_.node(*pub);
        auto year = prop_int(pnode, "year");
        auto cites = prop_int(pnode, "citations_count");
        for (EdgeIndex e : graph_.edges_of(*pub, Direction::In, EdgeType::Authored)) {
            const auto& author = graph_.node(graph_.edge(e).src);
            auto& acc = by_author[author.id];
            acc.name = prop_string(author, "name");
            acc.relevance_sum += h.score;
            acc.count += 1;
            acc.top += h.rank <= top_cut ? 1 : 0;
            acc.citations += cites;
            acc.first = std::min(acc.first, year);
            acc.last = std::max(acc.last, year);
            acc.pubs.push_back(h.chunk_id);
        }
    }
    if (by_author.empty()) {
        throw Error(ErrorCode::NoRelevantPublications,
                    "relevant publications for '" + topic + "' have no recorded authors");
    }

    std::vector<ExpertScore> candidates;
    for (auto& [id, acc] : by_author) {
        ExpertScore s;
        s.author_id = id;
        s.name = acc.name;
        s.raw = {acc.relevance_sum / static_cast<double>(acc.count),
                 static_cast<double>(acc.top),
                 static_cast<double>(acc.count),
                 static_cast<double>(acc.citations),
                 static_cast<double>(acc.last - acc.first + 1),
                 static_cast<double>(reference_year - acc.last)};
        s.publications = std::move(acc.pubs);
        candidates.push_back(std::move(s));
    }
    auto ranked = score_experts(std::move(candidates), config_.weights);
    if (ranked.size() > k) ranked.resize(k);

    json weights = json::object();
    for (std::size_t m = 0; m < kMetricCount; ++m) weights[std::string(metric_name(m))] = config_.weights.w[m];
    json experts = json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& s = ranked[i];
        json raw = json::object(), norm = json::object();
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            raw[std::string(metric_name(m))] = s.raw[m];
            norm[std::string(metric_name(m))] = s.normalized[m];
        }
        experts.push_back({{"rank", i + 1},
                           {"author_id", s.author_id},
                           {"name", s.name},
                           {"composite", s.composite},
                           {"metrics", raw},
                           {"normalized", norm},
                           {"publications", s.publications}});
    }
    return {{"topic", topic},
            {"reference_year", reference_year},
            {"retrieval_depth", depth},
            {"top_rank_cutoff", top_cut},
            {"relevant_publications", relevant.size()},
            {"reranker_fallback", result.fallback},
            {"weights", weights},
            {"experts", experts}};
}

ToolResult Toolbox::call(const ToolCall& call) const {
    ToolResult r;
    r.call_id = call.call_id;
    r.tool_name = call.tool_name;
    auto start = Clock::now();
    try {
        json args = validate_args(call.tool_name, call.args);
        if (call.tool_name == kSearchGraph) {
            bool truncated = false;
            r.payload = search_graph(args["query"].get<std::string>(), truncated);
            r.truncated = truncated;
        } else if (call.tool_name == kSearchPublications) {
            r.payload = search_publications(args["query"].get<std::string>(),
                                            args["k"].get<std::size_t>());
        } else if (call.tool_name == kSearchConceptsKeywords) {
            r.payload = search_concepts_keywords(args["query"].get<std::string>(),
                                                 args["k"].get<std::size_t>());
        } else {
            r.payload = identify_experts(args["topic"].get<std::string>(), args["k"].get<std::size_t>(),
                                         args["reference_year"].get<int>());
        }
    } catch (const gql::QueryError& e) {
        r.ok = false;
        r.error_code = std::string(gql::to_string(e.code()));
        r.error_message = e.what();
    } catch (const Error& e) {
        r.ok = false;
        r.error_code = std::string(to_string(e.code()));
        r.error_message = e.what();
    } catch (const std::exception& e) {
        r.ok = false;
        r.error_code = "INTERNAL";
        r.error_message = e.what();
    }
    if (!r.ok) r.payload = nullptr;
    r.elapsed = Clock::now() - start;
    return r;
}

}  // namespace kgx::tools
