#pragma once
// Read-only, Cypher-inspired graph query language.
//
//   query    := MATCH pattern {"," pattern} [WHERE or] RETURN [DISTINCT] item {"," item}
//               [ORDER BY item [ASC | DESC]] [LIMIT integer]
//   pattern  := node {edge node}
//   node     := "(" [variable] [":" Label] ")"
//   edge     := "-" [bracket] "->" | "<-" [bracket] "-" | "-" [bracket] "-"
//   bracket  := "[" [":" EDGE_TYPE] ["*" integer [".." integer]] "]"
//   or       := and {OR and}
//   and      := not {AND not}
//   not      := NOT not | "(" or ")" | operand op operand
//   op       := "=" | "<>" | "<" | "<=" | ">" | ">=" | CONTAINS
//   operand  := variable "." property | string | ["-"] number | TRUE | FALSE
//   item     := variable | variable "." property | COUNT "(" [DISTINCT] variable ")"
//
// Keywords are case-insensitive. The pseudo-property `id` yields the node id.
// Matching is homomorphic on nodes with no edge reused inside one path
// instance; a missing property compares as unknown (three-valued logic).
// Rows come back ordered by the ORDER BY key, ties and unordered queries
// falling back to lexicographic order of the row cells.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgx/graph.hpp"

namespace kgx::gql {

enum class QueryErrorCode { Syntax, Unbound, Schema, Budget };

std::string_view to_string(QueryErrorCode code);

class QueryError : public std::runtime_error {
public:
    QueryError(QueryErrorCode code, const std::string& message, int line = 0, int column = 0);

    QueryErrorCode code() const noexcept { return code_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    QueryErrorCode code_;
    int line_;
    int column_;
};

struct NodePattern {
    std::optional<std::string> variable;
    std::optional<NodeLabel> label;
    bool operator==(const NodePattern&) const = default;
};

enum class EdgeDirection { Right, Left, Undirected };

inline constexpr int kMaxHops = 4;

struct HopRange {
    int min = 1;
    int max = 1;
    bool operator==(const HopRange&) const = default;
};

struct EdgePattern {
    std::optional<EdgeType> type;
    EdgeDirection direction = EdgeDirection::Right;
    HopRange hops;
    bool operator==(const EdgePattern&) const = default;
};

// nodes.size() == edges.size() + 1
struct PathPattern {
    std::vector<NodePattern> nodes;
    std::vector<EdgePattern> edges;
    bool operator==(const PathPattern&) const = default;
};

struct PropertyRef {
    std::string variable;
    std::string property;
    bool operator==(const PropertyRef&) const = default;
};

using Literal = std::variant<bool, std::int64_t, double, std::string>;
using Operand = std::variant<PropertyRef, Literal>;

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, Contains };

struct Comparison {
    Operand lhs;
    CompareOp op = CompareOp::Eq;
    Operand rhs;
    bool operator==(const Comparison&) const = default;
};

struct Predicate {
    enum class Kind { Compare, And, Or, Not };
    Kind kind = Kind::Compare;
    Comparison comparison;             // Kind::Compare
    std::vector<Predicate> children;   // two for And/Or, one for Not
    bool operator==(const Predicate&) const = default;
};

struct ReturnItem {
    enum class Kind { Node, Property, Count, CountDistinct };
    Kind kind = Kind::Node;
    std::string variable;
    std::string property;  // Kind::Property only
    bool operator==(const ReturnItem&) const = default;
};

struct OrderBy {
    ReturnItem item;
    bool descending = false;
    bool operator==(const OrderBy&) const = default;
};

struct Query {
    std::vector<PathPattern> patterns;
    std::optional<Predicate> where;
    bool distinct = false;
    std::vector<ReturnItem> items;
    std::optional<OrderBy> order_by;
    std::optional<std::int64_t> limit;
    bool operator==(const Query&) const = default;
};

// Parses and validates against the closed schema. Throws QueryError.
Query parse(std::string_view text);

// Single-line text that parses back to a structurally equal Query.
std::string canonical_print(const Query& query);
std::string canonical_print(const ReturnItem& item);

struct NodeRef {
    std::string id;
    auto operator<=>(const NodeRef&) const = default;
};

using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string,
                           std::vector<std::string>, NodeRef>;

// Total order used for row sorting: null < bool < number < string < list < node.
int compare_values(const Value& a, const Value& b);

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
};

struct ExecOptions {
    std::size_t max_bindings = 100'000;
};

// Complete result set (only LIMIT truncates). Throws QueryError(Budget) when
// pattern expansion produces more than max_bindings partial bindings.
ResultTable execute(const Query& query, const PropertyGraph& graph, const ExecOptions& options = {});

}  // namespace kgx::gql
