#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

#include "kgx/gql.hpp"

namespace kgx::gql {

namespace {

int type_rank(const Value& v) {
    switch (v.index()) {
        case 0: return 0;                 // null
        case 1: return 1;                 // bool
        case 2: case 3: return 2;         // number
        case 4: return 3;                 // string
        case 5: return 4;                 // list
        default: return 5;                // node
    }
}

template <typename T>
int three_way(const T& a, const T& b) {
    return a < b ? -1 : (b < a ? 1 : 0);
}

std::optional<double> as_number(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::nullopt;
}

Value from_prop(const PropValue& p) {
    return std::visit([](const auto& v) -> Value { return v; }, p);
}

Value from_literal(const Literal& lit) {
    return std::visit([](const auto& v) -> Value { return v; }, lit);
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

enum class Truth { False, True, Unknown };

Truth truth(bool b) { return b ? Truth::True : Truth::False; }

Truth compare(const Value& a, CompareOp op, const Value& b) {
    if (a.index() == 0 || b.index() == 0) return Truth::Unknown;

    if (op == CompareOp::Contains) {
        const auto* needle = std::get_if<std::string>(&b);
        if (!needle) return Truth::Unknown;
        auto n = lower(*needle);
        if (const auto* s = std::get_if<std::string>(&a)) {
            return truth(lower(*s).find(n) != std::string::npos);
        }
        if (const auto* list = std::get_if<std::vector<std::string>>(&a)) {
            return truth(std::any_of(list->begin(), list->end(), [&](const std::string& s) {
                return lower(s).find(n) != std::string::npos;
            }));
        }
        return Truth::Unknown;
    }

    int cmp = 0;
    bool comparable = true;
    auto na = as_number(a);
    auto nb = as_number(b);
    if (na && nb) {
        const auto* ia = std::get_if<std::int64_t>(&a);
        const auto* ib = std::get_if<std::int64_t>(&b);
        cmp = (ia && ib) ? three_way(*ia, *ib) : three_way(*na, *nb);
    } else if (a.index() == b.index()) {
        cmp = compare_values(a, b);
    } else {
        comparable = false;
    }

    switch (op) {
        case CompareOp::Eq: return truth(comparable && cmp == 0);
        case CompareOp::Ne: return truth(!comparable || cmp != 0);
        default: break;
    }
    if (!comparable || a.index() == 5 || a.index() == 6) return Truth::Unknown;
    switch (op) {
        case CompareOp::Lt: return truth(cmp < 0);
        case CompareOp::Le: return truth(cmp <= 0);
        case CompareOp::Gt: return truth(cmp > 0);
        case CompareOp::Ge: return truth(cmp >= 0);
        default: return Truth::Unknown;
    }
}

// Compiled form: every node position gets a slot; named variables share one.
struct CompiledNode {
    std::size_t slot;
    std::optional<NodeLabel> label;
};

struct CompiledPath {
    std::vector<CompiledNode> nodes;
    std::vector<EdgePattern> edges;
};

class Executor {
public:
    Executor(const Query& q, const PropertyGraph& g, const ExecOptions& opts)
        : query_(q), graph_(g), opts_(opts) {
        for (const auto& p : q.patterns) {
            CompiledPath cp;
            cp.edges = p.edges;
            for (const auto& n : p.nodes) {
                std::size_t slot;
                if (n.variable) {
                    auto [it, inserted] = named_.emplace(*n.variable, slot_count_);
                    if (inserted) ++slot_count_;
                    slot = it->second;
                } else {
                    slot = slot_count_++;
                }
                cp.nodes.push_back({slot, n.label});
            }
            paths_.push_back(std::move(cp));
        }
        binding_.assign(slot_count_, kUnbound);
        used_edges_.resize(paths_.size());
    }

    std::vector<std::vector<NodeIndex>> run() {
        match_path(0);
        return std::move(matches_);
    }

    std::size_t slot_of(const std::string& var) const { return named_.at(var); }

private:
    static constexpr std::int64_t kUnbound = -1;

    void tick() {
        if (++work_ > opts_.max_bindings) {
            throw QueryError(QueryErrorCode::Budget,
                             "query exceeded the binding budget of " +
                                 std::to_string(opts_.max_bindings));
        }
    }

    // Returns false when `n` conflicts with the pattern; on success reports
    // whether the slot was newly bound so the caller can undo it.
    bool try_bind(const CompiledNode& cn, NodeIndex n, bool& newly_bound) {
        if (cn.label && graph_.node(n).label != *cn.label) return false;
        auto& b = binding_[cn.slot];
        if (b != kUnbound) {
            newly_bound = false;
            return b == static_cast<std::int64_t>(n);
        }
        b = n;
        newly_bound = true;
        return true;
    }

    void match_path(std::size_t pi) {
        if (pi == paths_.size()) {
            emit();
            return;
        }
        const auto& first = paths_[pi].nodes[0];
        std::vector<NodeIndex> seeds;
        if (binding_[first.slot] != kUnbound) {
            seeds.push_back(static_cast<NodeIndex>(binding_[first.slot]));
        } else if (first.label) {
            auto span = graph_.nodes_with_label(*first.label);
            seeds.assign(span.begin(), span.end());
        } else {
            seeds.resize(graph_.node_count());
            for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = static_cast<NodeIndex>(i);
        }
        for (auto n : seeds) {
            tick();
            bool fresh = false;
            if (!try_bind(first, n, fresh)) continue;
            extend(pi, 0, n);
            if (fresh) binding_[first.slot] = kUnbound;
        }
    }

    void extend(std::size_t pi, std::size_t hop, NodeIndex at) {
        if (hop == paths_[pi].edges.size()) {
            match_path(pi + 1);
            return;
        }
        walk(pi, hop, at, 1);
    }

    void walk(std::size_t pi, std::size_t hop, NodeIndex at, int length) {
        const auto& ep = paths_[pi].edges[hop];
        const auto& target = paths_[pi].nodes[hop + 1];
        auto& used = used_edges_[pi];

        auto follow = [&](EdgeIndex e, NodeIndex next) {
            if (std::find(used.begin(), used.end(), e) != used.end()) return;
            tick();
            used.push_back(e);
            if (length >= ep.hops.min) {
                bool fresh = false;
                if (try_bind(target, next, fresh)) {
                    extend(pi, hop + 1, next);
                    if (fresh) binding_[target.slot] = kUnbound;
                }
            }
            if (length < ep.hops.max) walk(pi, hop, next, length + 1);
            used.pop_back();
        };

        for (std::size_t t = 0; t < kEdgeTypeCount; ++t) {
            auto type = static_cast<EdgeType>(t);
            if (ep.type && *ep.type != type) continue;
            if (ep.direction != EdgeDirection::Left) {
                for (auto e : graph_.edges_of(at, Direction::Out, type)) follow(e, graph_.edge(e).dst);
            }
            if (ep.direction != EdgeDirection::Right) {
                for (auto e : graph_.edges_of(at, Direction::In, type)) follow(e, graph_.edge(e).src);
            }
        }
    }

    Value operand_value(const Operand& op) const {
        if (const auto* lit = std::get_if<Literal>(&op)) return from_literal(*lit);
        const auto& ref = std::get<PropertyRef>(op);
        return property(static_cast<NodeIndex>(binding_[named_.at(ref.variable)]), ref.property);
    }

    Truth eval(const Predicate& p) const {
        switch (p.kind) {
            case Predicate::Kind::Compare:
                return compare(operand_value(p.comparison.lhs), p.comparison.op,
                               operand_value(p.comparison.rhs));
            case Predicate::Kind::Not: {
                auto t = eval(p.children[0]);
                return t == Truth::Unknown ? t : truth(t == Truth::False);
            }
            case Predicate::Kind::And: {
                auto a = eval(p.children[0]);
                if (a == Truth::False) return a;
                auto b = eval(p.children[1]);
                if (b == Truth::False) return b;
                return (a == Truth::Unknown || b == Truth::Unknown) ? Truth::Unknown : Truth::True;
            }
            case Predicate::Kind::Or: {
                auto a = eval(p.children[0]);
                if (a == Truth::True) return a;
                auto b = eval(p.children[1]);
                if (b == Truth::True) return b;
                return (a == Truth::Unknown || b == Truth::Unknown) ? Truth::Unknown : Truth::False;
            }
        }
        return Truth::Unknown;
    }

    void emit() {
        if (query_.where && eval(*query_.where) != Truth::True) return;
        std::vector<NodeIndex> row(slot_count_);
        for (std::size_t i = 0; i < slot_count_; ++i) row[i] = static_cast<NodeIndex>(binding_[i]);
        matches_.push_back(std::move(row));
    }

public:
    Value property(NodeIndex n, const std::string& name) const {
        const auto& node = graph_.node(n);
        if (name == "id") return node.id;
        auto it = node.props.find(name);
        if (it == node.props.end()) return std::monostate{};
        return from_prop(it->second);
    }

private:
    const Query& query_;
    const PropertyGraph& graph_;
    const ExecOptions& opts_;
    std::vector<CompiledPath> paths_;
    std::map<std::string, std::size_t> named_;
    std::size_t slot_count_ = 0;
    std::vector<std::int64_t> binding_;
    std::vector<std::vector<EdgeIndex>> used_edges_;
    std::vector<std::vector<NodeIndex>> matches_;
    std::size_t work_ = 0;
};

bool row_less(const std::vector<Value>& a, const std::vector<Value>& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        int c = compare_values(a[i], b[i]);
        if (c != 0) return c < 0;
    }
    return a.size() < b.size();
}

bool is_aggregate(const ReturnItem& item) {
    return item.kind == ReturnItem::Kind::Count || item.kind == ReturnItem::Kind::CountDistinct;
}

}  // namespace

int compare_values(const Value& a, const Value& b) {
    int ra = type_rank(a);
    int rb = type_rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
        case 0: return 0;
        case 1: return three_way(std::get<bool>(a), std::get<bool>(b));
        case 2: {
            const auto* ia = std::get_if<std::int64_t>(&a);
            const auto* ib = std::get_if<std::int64_t>(&b);
            if (ia && ib) return three_way(*ia, *ib);
            int c = three_way(*as_number(a), *as_number(b));
            if (c != 0) return c;
            return three_way(a.index(), b.index());
        }
        case 3: return three_way(std::get<std::string>(a), std::get<std::string>(b));
        case 4:
            return three_way(std::get<std::vector<std::string>>(a),
                             std::get<std::vector<std::string>>(b));
        default: return three_way(std::get<NodeRef>(a).id, std::get<NodeRef>(b).id);
    }
}

ResultTable execute(const Query& query, const PropertyGraph& graph, const ExecOptions& options) {
    Executor exec(query, graph, options);
    auto matches = exec.run();

    ResultTable table;
    for (const auto& item : query.items) table.columns.push_back(canonical_print(item));

    auto project = [&](const std::vector<NodeIndex>& m, const ReturnItem& item) -> Value {
        auto n = m[exec.slot_of(item.variable)];
        if (item.kind == ReturnItem::Kind::Property) return exec.property(n, item.property);
        return NodeRef{graph.node(n).id};
    };

    bool aggregating = std::any_of(query.items.begin(), query.items.end(), is_aggregate);
    if (!aggregating) {
        table.rows.reserve(matches.size());
        for (const auto& m : matches) {
            std::vector<Value> row;
            row.reserve(query.items.size());
            for (const auto& item : query.items) row.push_back(project(m, item));
            table.rows.push_back(std::move(row));
        }
    } else {
        struct Group {
            std::vector<std::int64_t> counts;
            std::vector<std::set<NodeIndex>> distinct;
        };
        auto key_less = [](const std::vector<Value>& a, const std::vector<Value>& b) {
            return row_less(a, b);
        };
        std::map<std::vector<Value>, Group, decltype(key_less)> groups(key_less);
        for (const auto& m : matches) {
            std::vector<Value> key;
            for (const auto& item : query.items) {
                if (!is_aggregate(item)) key.push_back(project(m, item));
            }
            auto& g = groups[key];
            g.counts.resize(query.items.size());
            g.distinct.resize(query.items.size());
            for (std::size_t i = 0; i < query.items.size(); ++i) {
                const auto& item = query.items[i];
                if (item.kind == ReturnItem::Kind::Count) ++g.counts[i];
                if (item.kind == ReturnItem::Kind::CountDistinct) {
                    g.distinct[i].insert(m[exec.slot_of(item.variable)]);
                }
            }
        }
        bool all_aggregate = std::all_of(query.items.begin(), query.items.end(), is_aggregate);
        if (groups.empty() && all_aggregate) {
            groups[{}] = Group{std::vector<std::int64_t>(query.items.size(), 0),
                               std::vector<std::set<NodeIndex>>(query.items.size())};
        }
        for (const auto& [key, g] : groups) {
            std::vector<Value> row;
            std::size_t k = 0;
            for (std::size_t i = 0; i < query.items.size(); ++i) {
                const auto& item = query.items[i];
                if (item.kind == ReturnItem::Kind::Count) {
                    row.push_back(g.counts[i]);
                } else if (item.kind == ReturnItem::Kind::CountDistinct) {
                    row.push_back(static_cast<std::int64_t>(g.distinct[i].size()));
                } else {
                    row.push_back(key[k++]);
                }
            }
            table.rows.push_back(std::move(row));
        }
    }

    std::sort(table.rows.begin(), table.rows.end(), row_less);
    if (query.distinct) {
        auto same = [](const std::vector<Value>& a, const std::vector<Value>& b) {
            return !row_less(a, b) && !row_less(b, a);
        };
        table.rows.erase(std::unique(table.rows.begin(), table.rows.end(), same), table.rows.end());
    }
    if (query.order_by) {
        auto col = static_cast<std::size_t>(
            std::find(query.items.begin(), query.items.end(), query.order_by->item) -
            query.items.begin());
        bool desc = query.order_by->descending;
        std::stable_sort(table.rows.begin(), table.rows.end(),
                         [col, desc](const std::vector<Value>& a, const std::vector<Value>& b) {
                             int c = compare_values(a[col], b[col]);
                             return desc ? c > 0 : c < 0;
                         });
    }
    if (query.limit && table.rows.size() > static_cast<std::size_t>(*query.limit)) {
        table.rows.resize(static_cast<std::size_t>(*query.limit));
    }
    return table;
}

}  // namespace kgx::gql
