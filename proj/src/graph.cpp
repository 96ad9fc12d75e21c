#include "kgx/graph.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <deque>
#include <fstream>
#include <sstream>

#include "kgx/binary_io.hpp"
#include "kgx/error.hpp"

namespace kgx {

namespace {

constexpr std::array<std::string_view, kNodeLabelCount> kLabelNames = {
    "Author",  "Keyword", "Publication", "Software",     "Concept", "Journal",
    "Project", "Domain",  "ResearchUnit", "Dataset", "Region",
};

constexpr std::array<std::string_view, kEdgeTypeCount> kEdgeNames = {
    "AUTHORED",        "HAS_KEYWORD", "MENTIONS_CONCEPT", "PUBLISHED_IN",
    "FUNDED_BY",       "DESCRIBES",   "AFFILIATED_WITH",  "LOCATED_IN",
    "IN_DOMAIN",       "USES_SOFTWARE", "USES_DATASET",
};

constexpr std::array<EdgeSignature, kEdgeTypeCount> kSignatures = {{
    {NodeLabel::Author, NodeLabel::Publication},
    {NodeLabel::Publication, NodeLabel::Keyword},
    {NodeLabel::Publication, NodeLabel::Concept},
    {NodeLabel::Publication, NodeLabel::Journal},
    {NodeLabel::Publication, NodeLabel::Project},
    {NodeLabel::Project, NodeLabel::Concept},
    {NodeLabel::Author, NodeLabel::ResearchUnit},
    {NodeLabel::ResearchUnit, NodeLabel::Region},
    {NodeLabel::Concept, NodeLabel::Domain},
    {NodeLabel::Publication, NodeLabel::Software},
    {NodeLabel::Publication, NodeLabel::Dataset},
}};

constexpr std::string_view kSnapshotMagic = "KGX1";

enum class PropTag : std::uint8_t { String = 0, Int = 1, Float = 2, Bool = 3, StringList = 4 };

void write_props(std::ostream& out, const PropMap& props) {
    binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(props.size()));
    for (const auto& [key, value] : props) {
        binary::write_string(out, key);
        binary::write_uint<std::uint8_t>(out, static_cast<std::uint8_t>(value.index()));
        std::visit(
            [&out](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::string>) {
                    binary::write_string(out, v);
                } else if constexpr (std::is_same_v<T, std::int64_t>) {
                    binary::write_uint<std::uint64_t>(out, static_cast<std::uint64_t>(v));
                } else if constexpr (std::is_same_v<T, double>) {
                    binary::write_uint<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
                } else if constexpr (std::is_same_v<T, bool>) {
                    binary::write_uint<std::uint8_t>(out, v ? 1 : 0);
                } else {
                    binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
                    for (const auto& s : v) binary::write_string(out, s);
                }
            },
            value);
    }
}

PropMap read_props(std::istream& in) {
    PropMap props;
    auto count = binary::read_uint<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto key = binary::read_string(in);
        auto tag = static_cast<PropTag>(binary::read_uint<std::uint8_t>(in));
        switch (tag) {
            case PropTag::String:
                props.emplace(std::move(key), binary::read_string(in));
                break;
            case PropTag::Int:
                props.emplace(std::move(key),
                              static_cast<std::int64_t>(binary::read_uint<std::uint64_t>(in)));
                break;
            case PropTag::Float:
                props.emplace(std::move(key),
                              std::bit_cast<double>(binary::read_uint<std::uint64_t>(in)));
                break;
            case PropTag::Bool:
                props.emplace(std::move(key), binary::read_uint<std::uint8_t>(in) != 0);
                break;
            case PropTag::StringList: {
                auto n = binary::read_uint<std::uint32_t>(in);
                std::vector<std::string> list;
                list.reserve(n);
                for (std::uint32_t j = 0; j < n; ++j) list.push_back(binary::read_string(in));
                props.emplace(std::move(key), std::move(list));
                break;
            }
            default:
                throw Error(ErrorCode::SnapshotFormat, "unknown property tag");
        }
    }
    return props;
}

}  // namespace

std::string_view to_string(NodeLabel label) {
    return kLabelNames[static_cast<std::size_t>(label)];
}

std::string_view to_string(EdgeType type) {
    return kEdgeNames[static_cast<std::size_t>(type)];
}

std::optional<NodeLabel> parse_node_label(std::string_view text) {
    for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
        if (kLabelNames[i] == text) return static_cast<NodeLabel>(i);
    }
    return std::nullopt;
}

std::optional<EdgeType> parse_edge_type(std::string_view text) {
    for (std::size_t i = 0; i < kEdgeNames.size(); ++i) {
        if (kEdgeNames[i] == text) return static_cast<EdgeType>(i);
    }
    return std::nullopt;
}

EdgeSignature edge_signature(EdgeType type) {
    return kSignatures[static_cast<std::size_t>(type)];
}

std::vector<LabelShare> label_distribution(const LabelCounts& counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    std::vector<LabelShare> out;
    if (total == 0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        // round(1000*c/total) / 10, half-up, without floating error
        std::uint64_t tenths = (2000 * static_cast<std::uint64_t>(counts[i]) + total) / (2 * total);
        out.push_back({static_cast<NodeLabel>(i), counts[i], static_cast<double>(tenths) / 10.0});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LabelShare& a, const LabelShare& b) { return a.count > b.count; });
    return out;
}

const Node& PropertyGraph::add_node(NodeLabel label, std::string id, PropMap props) {
    if (by_id_.contains(id)) {
        throw Error(ErrorCode::DuplicateId, "duplicate node id '" + id + "'");
    }
    for (const auto& [key, _] : props) {
        if (key.empty()) {
            throw Error(ErrorCode::InvalidArgument, "empty property key on node '" + id + "'");
        }
    }
    auto index = static_cast<NodeIndex>(nodes_.size());
    by_id_.emplace(id, index);
    by_label_[static_cast<std::size_t>(label)].push_back(index);
    nodes_.push_back(Node{std::move(id), label, std::move(props)});
    return nodes_.back();
}

const Node& PropertyGraph::add_node(std::string_view label, std::string id, PropMap props) {
    auto parsed = parse_node_label(label);
    if (!parsed) {
        throw Error(ErrorCode::UnknownLabel, "unknown node label '" + std::string(label) + "'");
    }
    return add_node(*parsed, std::move(id), std::move(props));
}

EdgeIndex PropertyGraph::add_edge(std::string_view src, std::string_view dst, EdgeType type,
                                  PropMap props) {
    auto s = find(src);
    if (!s) throw Error(ErrorCode::MissingEndpoint, "missing source node '" + std::string(src) + "'");
    auto d = find(dst);
    if (!d) {
        throw Error(ErrorCode::MissingEndpoint, "missing target node '" + std::string(dst) + "'");
    }
    auto sig = edge_signature(type);
    if (nodes_[*s].label != sig.src || nodes_[*d].label != sig.dst) {
        throw Error(ErrorCode::LabelConstraintViolation,
                    std::string(to_string(type)) + " requires " + std::string(to_string(sig.src)) +
                        " -> " + std::string(to_string(sig.dst)) + ", got " +
                        std::string(to_string(nodes_[*s].label)) + " -> " +
                        std::string(to_string(nodes_[*d].label)));
    }
    std::array<std::uint32_t, 3> triple{*s, *d, static_cast<std::uint32_t>(type)};
    if (auto it = triples_.find(triple); it != triples_.end()) return it->second;

    auto index = static_cast<EdgeIndex>(edges_.size());
    edges_.push_back(Edge{*s, *d, type, std::move(props)});
    triples_.emplace(triple, index);
    adjacency_[adjacency_key(*s, Direction::Out, type)].push_back(index);
    adjacency_[adjacency_key(*d, Direction::In, type)].push_back(index);
    return index;
}

std::optional<NodeIndex> PropertyGraph::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

const Node* PropertyGraph::find_node(std::string_view id) const {
    auto i = find(id);
    return i ? &nodes_[*i] : nullptr;
}

std::span<const EdgeIndex> PropertyGraph::edges_of(NodeIndex n, Direction dir, EdgeType type) const {
    auto it = adjacency_.find(adjacency_key(n, dir, type));
    if (it == adjacency_.end()) return {};
    return it->second;
}

std::span<const NodeIndex> PropertyGraph::nodes_with_label(NodeLabel label) const {
    return by_label_[static_cast<std::size_t>(label)];
}

Subgraph PropertyGraph::neighborhood(std::string_view id, int depth, EdgeTypeSet filter) const {
    auto start = find(id);
    if (!start) throw Error(ErrorCode::UnknownNode, "unknown node '" + std::string(id) + "'");
    if (depth < 1 || depth > max_depth_) {
        throw Error(ErrorCode::DepthExceeded, "depth " + std::to_string(depth) +
                                                  " outside 1.." + std::to_string(max_depth_));
    }

    std::unordered_map<NodeIndex, int> dist{{*start, 0}};
    std::deque<NodeIndex> frontier{*start};
    while (!frontier.empty()) {
        auto u = frontier.front();
        frontier.pop_front();
        int du = dist[u];
        if (du == depth) continue;
        for (std::size_t t = 0; t < kEdgeTypeCount; ++t) {
            auto type = static_cast<EdgeType>(t);
            if (!filter.contains(type)) continue;
            for (auto dir : {Direction::Out, Direction::In}) {
                for (auto e : edges_of(u, dir, type)) {
                    auto v = dir == Direction::Out ? edges_[e].dst : edges_[e].src;
                    if (dist.emplace(v, du + 1).second) frontier.push_back(v);
                }
            }
        }
    }

    Subgraph sub;
    sub.nodes.reserve(dist.size());
    for (const auto& [n, _] : dist) sub.nodes.push_back(n);
    std::sort(sub.nodes.begin(), sub.nodes.end(),
              [this](NodeIndex a, NodeIndex b) { return nodes_[a].id < nodes_[b].id; });

    for (auto n : sub.nodes) {
        for (std::size_t t = 0; t < kEdgeTypeCount; ++t) {
            auto type = static_cast<EdgeType>(t);
            if (!filter.contains(type)) continue;
            for (auto e : edges_of(n, Direction::Out, type)) {
                if (dist.contains(edges_[e].dst)) sub.edges.push_back(e);
            }
        }
    }
    auto edge_less = [this](EdgeIndex a, EdgeIndex b) {
        const auto& ea = edges_[a];
        const auto& eb = edges_[b];
        return std::tie(nodes_[ea.src].id, nodes_[ea.dst].id, ea.type) <
               std::tie(nodes_[eb.src].id, nodes_[eb.dst].id, eb.type);
    };
    std::sort(sub.edges.begin(), sub.edges.end(), edge_less);
    return sub;
}

LabelCounts PropertyGraph::label_counts() const {
    LabelCounts counts{};
    for (std::size_t i = 0; i < kNodeLabelCount; ++i) counts[i] = by_label_[i].size();
    return counts;
}

std::vector<LabelShare> PropertyGraph::label_distribution() const {
    return kgx::label_distribution(label_counts());
}

std::vector<NodeIndex> PropertyGraph::nodes_sorted_by_id() const {
    std::vector<NodeIndex> order(nodes_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<NodeIndex>(i);
    std::sort(order.begin(), order.end(),
              [this](NodeIndex a, NodeIndex b) { return nodes_[a].id < nodes_[b].id; });
    return order;
}

std::vector<EdgeIndex> PropertyGraph::edges_sorted() const {
    std::vector<EdgeIndex> order(edges_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<EdgeIndex>(i);
    std::sort(order.begin(), order.end(), [this](EdgeIndex a, EdgeIndex b) {
        const auto& ea = edges_[a];
        const auto& eb = edges_[b];
        return std::tie(nodes_[ea.src].id, nodes_[ea.dst].id, ea.type) <
               std::tie(nodes_[eb.src].id, nodes_[eb.dst].id, eb.type);
    });
    return order;
}

void PropertyGraph::save(std::ostream& out) const {
    binary::write_magic(out, kSnapshotMagic);

    std::ostringstream node_table;
    binary::write_uint<std::uint32_t>(node_table, static_cast<std::uint32_t>(nodes_.size()));
    for (auto i : nodes_sorted_by_id()) {
        const auto& n = nodes_[i];
        binary::write_string(node_table, n.id);
        binary::write_uint<std::uint8_t>(node_table, static_cast<std::uint8_t>(n.label));
        write_props(node_table, n.props);
    }
    binary::write_section(out, node_table.str());

    std::ostringstream edge_table;
    binary::write_uint<std::uint32_t>(edge_table, static_cast<std::uint32_t>(edges_.size()));
    for (auto i : edges_sorted()) {
        const auto& e = edges_[i];
        binary::write_string(edge_table, nodes_[e.src].id);
        binary::write_string(edge_table, nodes_[e.dst].id);
        binary::write_uint<std::uint8_t>(edge_table, static_cast<std::uint8_t>(e.type));
        write_props(edge_table, e.props);
    }
    binary::write_section(out, edge_table.str());
    if (!out) throw Error(ErrorCode::SnapshotFormat, "failed writing snapshot");
}

PropertyGraph PropertyGraph::load(std::istream& in, int max_depth) {
    binary::expect_magic(in, kSnapshotMagic, "graph snapshot");
    PropertyGraph g(max_depth);

    std::istringstream node_table(binary::read_section(in));
    auto node_count = binary::read_uint<std::uint32_t>(node_table);
    for (std::uint32_t i = 0; i < node_count; ++i) {
        auto id = binary::read_string(node_table);
        auto label = binary::read_uint<std::uint8_t>(node_table);
        if (label >= kNodeLabelCount) throw Error(ErrorCode::SnapshotFormat, "bad node label");
        g.add_node(static_cast<NodeLabel>(label), std::move(id), read_props(node_table));
    }

    std::istringstream edge_table(binary::read_section(in));
    auto edge_count = binary::read_uint<std::uint32_t>(edge_table);
    for (std::uint32_t i = 0; i < edge_count; ++i) {
        auto src = binary::read_string(edge_table);
        auto dst = binary::read_string(edge_table);
        auto type = binary::read_uint<std::uint8_t>(edge_table);
        if (type >= kEdgeTypeCount) throw Error(ErrorCode::SnapshotFormat, "bad edge type");
        g.add_edge(src, dst, static_cast<EdgeType>(type), read_props(edge_table));
    }
    return g;
}

void PropertyGraph::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileUnreadable, "cannot write '" + path.string() + "'");
    save(out);
}

PropertyGraph PropertyGraph::load(const std::filesystem::path& path, int max_depth) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read '" + path.string() + "'");
    return load(in, max_depth);
}

}  // namespace kgx
