#pragma once
// Property graph store.
//
// Nodes carry one of eleven closed labels; edges carry one of eleven closed
// relationship types whose endpoint labels are fixed (see edge_signature).
// Adjacency is indexed by (node, direction, edge type). The graph is built in
// one exclusive ingestion phase and only read afterwards, so all const member
// functions are safe to call concurrently.
//
// Snapshot layout (all integers little-endian):
//   "KGX1"
//   u64 byte length | node table:  u32 count, then per node  str id, u8 label, props
//   u64 byte length | edge table:  u32 count, then per edge  str src, str dst, u8 type, props
//   props: u32 count, then per entry  str key, u8 tag, value
// Nodes are written sorted by id and edges by (src, dst, type), so two graphs
// with the same content produce identical bytes.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace kgx {

enum class NodeLabel : std::uint8_t {
    Author,
    Keyword,
    Publication,
    Software,
    Concept,
    Journal,
    Project,
    Domain,
    ResearchUnit,
    Dataset,
    Region,
};
inline constexpr std::size_t kNodeLabelCount = 11;

enum class EdgeType : std::uint8_t {
    Authored,
    HasKeyword,
    MentionsConcept,
    PublishedIn,
    FundedBy,
    Describes,
    AffiliatedWith,
    LocatedIn,
    InDomain,
    UsesSoftware,
    UsesDataset,
};
inline constexpr std::size_t kEdgeTypeCount = 11;

std::string_view to_string(NodeLabel label);
std::string_view to_string(EdgeType type);
std::optional<NodeLabel> parse_node_label(std::string_view text);
std::optional<EdgeType> parse_edge_type(std::string_view text);

struct EdgeSignature {
    NodeLabel src;
    NodeLabel dst;
};

// Permitted endpoint labels for each relationship type.
EdgeSignature edge_signature(EdgeType type);

class EdgeTypeSet {
public:
    constexpr EdgeTypeSet() = default;
    EdgeTypeSet(std::initializer_list<EdgeType> types) {
        for (auto t : types) insert(t);
    }
    static constexpr EdgeTypeSet all() {
        EdgeTypeSet s;
        s.bits_ = (1u << kEdgeTypeCount) - 1;
        return s;
    }
    void insert(EdgeType t) { bits_ |= bit(t); }
    bool contains(EdgeType t) const { return (bits_ & bit(t)) != 0; }
    bool empty() const { return bits_ == 0; }

private:
    static constexpr std::uint16_t bit(EdgeType t) {
        return static_cast<std::uint16_t>(1u << static_cast<unsigned>(t));
    }
    std::uint16_t bits_ = 0;
};

using PropValue = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;
using PropMap = std::map<std::string, PropValue, std::less<>>;

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

struct Node {
    std::string id;
    NodeLabel label;
    PropMap props;
};

struct Edge {
    NodeIndex src;
    NodeIndex dst;
    EdgeType type;
    PropMap props;
};

enum class Direction : std::uint8_t { Out, In };

struct Subgraph {
    std::vector<NodeIndex> nodes;  // sorted by node id
    std::vector<EdgeIndex> edges;  // sorted by (src id, dst id, type)
};

struct LabelShare {
    NodeLabel label;
    std::size_t count;
    double percentage;  // rounded half-up to one decimal

    bool operator==(const LabelShare&) const = default;
};

using LabelCounts = std::array<std::size_t, kNodeLabelCount>;

// Distribution over the non-empty labels, largest count first (ties in label
// order). Percentages are 100*count/total rounded half-up to one decimal,
// computed in integer arithmetic so they are exact.
std::vector<LabelShare> label_distribution(const LabelCounts& counts);

class PropertyGraph {
public:
    static constexpr int kDefaultMaxDepth = 4;

    explicit PropertyGraph(int max_depth = kDefaultMaxDepth) : max_depth_(max_depth) {}

    const Node& add_node(NodeLabel label, std::string id, PropMap props = {});
    // String-labelled overload for untyped input; rejects labels outside the schema.
    const Node& add_node(std::string_view label, std::string id, PropMap props = {});

    // Inserting an existing (src, dst, type) triple returns the stored edge.
    EdgeIndex add_edge(std::string_view src, std::string_view dst, EdgeType type,
                       PropMap props = {});

    std::optional<NodeIndex> find(std::string_view id) const;
    const Node* find_node(std::string_view id) const;
    const Node& node(NodeIndex i) const { return nodes_[i]; }
    const Edge& edge(EdgeIndex i) const { return edges_[i]; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    bool empty() const { return nodes_.empty() && edges_.empty(); }
    int max_depth() const { return max_depth_; }

    std::span<const EdgeIndex> edges_of(NodeIndex n, Direction dir, EdgeType type) const;
    // Insertion-ordered members of one label.
    std::span<const NodeIndex> nodes_with_label(NodeLabel label) const;

    // Every node within `depth` undirected hops over permitted edge types, and
    // every permitted edge whose endpoints both lie in that set.
    Subgraph neighborhood(std::string_view id, int depth,
                          EdgeTypeSet filter = EdgeTypeSet::all()) const;

    LabelCounts label_counts() const;
    std::vector<LabelShare> label_distribution() const;

    void save(std::ostream& out) const;
    static PropertyGraph load(std::istream& in, int max_depth = kDefaultMaxDepth);
    void save(const std::filesystem::path& path) const;
    static PropertyGraph load(const std::filesystem::path& path,
                              int max_depth = kDefaultMaxDepth);

    // Node and edge indices in the deterministic snapshot order.
    std::vector<NodeIndex> nodes_sorted_by_id() const;
    std::vector<EdgeIndex> edges_sorted() const;

private:
    static std::uint64_t adjacency_key(NodeIndex n, Direction dir, EdgeType type) {
        return (static_cast<std::uint64_t>(n) << 16) |
               (static_cast<std::uint64_t>(dir) << 8) | static_cast<std::uint64_t>(type);
    }

    struct TripleHash {
        std::size_t operator()(const std::array<std::uint32_t, 3>& t) const noexcept {
            std::uint64_t h = 1469598103934665603ull;
            for (auto v : t) {
                h ^= v;
                h *= 1099511628211ull;
            }
            return static_cast<std::size_t>(h);
        }
    };

    int max_depth_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, NodeIndex> by_id_;
    std::array<std::vector<NodeIndex>, kNodeLabelCount> by_label_;
    std::unordered_map<std::uint64_t, std::vector<EdgeIndex>> adjacency_;
    std::unordered_map<std::array<std::uint32_t, 3>, EdgeIndex, TripleHash> triples_;
};

}  // namespace kgx
