#pragma once
// The four agent-facing tools behind one call contract: validated named
// arguments in, a ToolResult out. Tool failures are returned, never thrown.

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgx/gql.hpp"
#include "kgx/graph.hpp"
#include "kgx/retrieval.hpp"

namespace kgx::tools {

using json = nlohmann::json;

inline constexpr std::string_view kSearchGraph = "SearchGraph";
inline constexpr std::string_view kSearchPublications = "SearchPublications";
inline constexpr std::string_view kSearchConceptsKeywords = "SearchConceptsKeywords";
inline constexpr std::string_view kIdentifyExperts = "IdentifyExperts";

struct ArgSpec {
    enum class Type { String, Integer };
    std::string name;
    Type type = Type::String;
    bool required = true;
    std::optional<std::int64_t> min;
    std::optional<std::int64_t> max;
    std::optional<std::int64_t> default_value;  // integers only
    std::string description;
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ArgSpec> args;
};

const std::vector<ToolSpec>& tool_specs();
const ToolSpec* find_tool(std::string_view name);

// Machine-readable descriptors: [{name, description, arguments: [{name, type,
// required, minimum?, maximum?, default?, description}]}].
json manifest();

// Checks names, types and bounds, fills integer defaults. Throws
// Error(InvalidArgument) or Error(UnknownTool).
json validate_args(std::string_view tool_name, const json& args);

struct ToolCall {
    std::string tool_name;
    json args = json::object();
    std::string call_id;
};

struct ToolResult {
    std::string call_id;
    std::string tool_name;
    bool ok = true;
    json payload;  // null on error
    bool truncated = false;
    std::string error_code;
    std::string error_message;
    std::chrono::nanoseconds elapsed{0};

    // Elapsed time is left out unless asked for so that the serialisation is
    // reproducible.
    json to_json(bool with_elapsed = false) const;
    static ToolResult from_json(const json& j);
};

inline constexpr std::size_t kMetricCount = 6;
// mean_relevance, top_decile_count, relevant_pub_count, citation_sum,
// activity_span_years, recency_years
std::string_view metric_name(std::size_t i);

struct ExpertWeights {
    std::array<double, kMetricCount> w{0.25, 0.15, 0.20, 0.20, 0.10, 0.10};
    // Non-negative and summing to 1 within 1e-9; throws InvalidConfig.
    void validate() const;
};

struct ExpertScore {
    std::string author_id;
    std::string name;
    std::array<double, kMetricCount> raw{};
    std::array<double, kMetricCount> normalized{};
    double composite = 0.0;
    std::vector<std::string> publications;  // retrieved ones, by rank
};

// Min-max normalisation over the candidate set (recency inverted, constant
// metric -> 0.5), weighted sum, sort by composite desc then author id.
std::vector<ExpertScore> score_experts(std::vector<ExpertScore> candidates,
                                       const ExpertWeights& weights);

struct ToolConfig {
    std::size_t row_budget = 500;
    std::size_t pool_size = retrieval::kDefaultPoolSize;
    std::size_t expert_retrieval_depth = 100;  // R
    double weak_threshold = 0.05;
    double relevance_threshold = 0.05;
    std::size_t excerpt_chars = 300;
    ExpertWeights weights;
    gql::ExecOptions exec;
};

class Toolbox {
public:
    Toolbox(const PropertyGraph& graph, const retrieval::HybridIndex& index,
            const retrieval::Reranker& reranker, ToolConfig config = {});

    ToolResult call(const ToolCall& call) const;

    // Typed entry points; these throw (kgx::Error or gql::QueryError).
    json search_graph(const std::string& query, bool& truncated) const;
    json search_publications(const std::string& query, std::size_t k) const;
    json search_concepts_keywords(const std::string& query, std::size_t k) const;
    json identify_experts(const std::string& topic, std::size_t k, int reference_year) const;

    const ToolConfig& config() const { return config_; }
    const PropertyGraph& graph() const { return graph_; }

private:
    json node_json(NodeIndex n) const;

    const PropertyGraph& graph_;
    const retrieval::HybridIndex& index_;
    const retrieval::Reranker& reranker_;
    ToolConfig config_;
};

// JSON form of a property value / query result cell.
json prop_to_json(const PropValue& v);

// Label-overlap score used by SearchConceptsKeywords: 1.0 exact, 0.8 token
// prefix, token Jaccard otherwise (all on normalised tokens).
double label_match_score(const std::vector<std::string>& query_tokens, std::string_view label);

// First `max_chars` code points of a UTF-8 string.
std::string utf8_prefix(std::string_view s, std::size_t max_chars);

}  // namespace kgx::tools
