#pragma once
// Naive reference evaluator for parsed queries.
//
// Each path pattern is enumerated on its own by scanning the complete edge
// list at every hop (no adjacency index, no label index), the per-pattern
// binding sets are joined on shared variables with a nested loop, and the
// WHERE clause is evaluated with a separately written three-valued logic.
// Output is a sorted multiset of rows with cells rendered as tagged strings.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kgx/gql.hpp"

namespace kgx::testing {

using OracleRow = std::vector<std::string>;

inline std::string render_prop(const PropValue& v) {
    char buf[64];
    if (const auto* s = std::get_if<std::string>(&v)) return "s:" + *s;
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
        std::snprintf(buf, sizeof buf, "i:%lld", static_cast<long long>(*i));
        return buf;
    }
    if (const auto* d = std::get_if<double>(&v)) {
        std::snprintf(buf, sizeof buf, "d:%.17g", *d);
        return buf;
    }
    if (const auto* b = std::get_if<bool>(&v)) return *b ? "b:true" : "b:false";
    std::string out = "l:[";
    for (const auto& s : std::get<std::vector<std::string>>(v)) out += s + ",";
    return out + "]";
}

inline std::string render_value(const gql::Value& v) {
    if (v.index() == 0) return "null";
    if (const auto* n = std::get_if<gql::NodeRef>(&v)) return "node:" + n->id;
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate> || std::is_same_v<T, gql::NodeRef>) {
                return "";
            } else {
                return render_prop(PropValue(x));
            }
        },
        v);
}

inline std::vector<OracleRow> rows_of(const gql::ResultTable& t) {
    std::vector<OracleRow> out;
    for (const auto& r : t.rows) {
        OracleRow row;
        for (const auto& c : r) row.push_back(render_value(c));
        out.push_back(std::move(row));
    }
    return out;
}

class GqlOracle {
public:
    using Binding = std::map<std::string, NodeIndex>;

    GqlOracle(const gql::Query& q, const PropertyGraph& g) : q_(q), g_(g) {}

    std::vector<OracleRow> run() {
        std::vector<Binding> joined{Binding{}};
        for (const auto& p : q_.patterns) {
            auto matches = enumerate(p);
            std::vector<Binding> next;
            for (const auto& left : joined) {
                for (const auto& right : matches) {
                    bool ok = true;
                    Binding merged = left;
                    for (const auto& [var, n] : right) {
                        auto it = merged.find(var);
                        if (it != merged.end() && it->second != n) {
                            ok = false;
                            break;
                        }
                        merged[var] = n;
                    }
                    if (ok) next.push_back(std::move(merged));
                }
            }
            joined = std::move(next);
        }

        std::vector<Binding> kept;
        for (const auto& b : joined) {
            if (!q_.where || eval(*q_.where, b) == 1) kept.push_back(b);
        }
        auto rows = project(kept);
        std::sort(rows.begin(), rows.end());
        if (q_.distinct) rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        return rows;
    }

private:
    // A partial path instance: node per position plus edges used so far.
    struct Partial {
        std::vector<NodeIndex> nodes;
        std::vector<EdgeIndex> used;
    };

    bool label_ok(const gql::NodePattern& np, NodeIndex n) const {
        return !np.label || g_.node(n).label == *np.label;
    }

    std::vector<Binding> enumerate(const gql::PathPattern& p) const {
        std::vector<Partial> partials;
        for (NodeIndex n = 0; n < g_.node_count(); ++n) {
            if (label_ok(p.nodes[0], n)) partials.push_back({{n}, {}});
        }
        for (std::size_t h = 0; h < p.edges.size(); ++h) {
            const auto& ep = p.edges[h];
            std::vector<Partial> next;
            for (const auto& part : partials) {
                // every walk of length min..max from the current end node
                std::vector<std::pair<NodeIndex, std::vector<EdgeIndex>>> walks{
                    {part.nodes.back(), part.used}};
                for (int len = 1; len <= ep.hops.max; ++len) {
                    std::vector<std::pair<NodeIndex, std::vector<EdgeIndex>>> grown;
                    for (const auto& [at, used] : walks) {
                        for (EdgeIndex e = 0; e < g_.edge_count(); ++e) {
                            if (std::find(used.begin(), used.end(), e) != used.end()) continue;
                            const auto& edge = g_.edge(e);
                            if (ep.type && edge.type != *ep.type) continue;
                            std::vector<NodeIndex> ends;
                            if (ep.direction != gql::EdgeDirection::Left && edge.src == at) {
                                ends.push_back(edge.dst);
                            }
                            if (ep.direction != gql::EdgeDirection::Right && edge.dst == at) {
                                ends.push_back(edge.src);
                            }
                            for (auto end : ends) {
                                auto u = used;
                                u.push_back(e);
                                grown.emplace_back(end, std::move(u));
                            }
                        }
                    }
                    walks = std::move(grown);
                    if (len < ep.hops.min) continue;
                    for (const auto& [end, used] : walks) {
                        if (!label_ok(p.nodes[h + 1], end)) continue;
                        Partial np = part;
                        np.nodes.push_back(end);
                        np.used = used;
                        next.push_back(std::move(np));
                    }
                }
            }
            partials = std::move(next);
        }

        std::vector<Binding> out;
        for (const auto& part : partials) {
            Binding b;
            bool ok = true;
            for (std::size_t i = 0; i < p.nodes.size() && ok; ++i) {
                if (!p.nodes[i].variable) continue;
                auto [it, inserted] = b.emplace(*p.nodes[i].variable, part.nodes[i]);
                if (!inserted && it->second != part.nodes[i]) ok = false;
            }
            if (ok) out.push_back(std::move(b));
        }
        return out;
    }

    // nullopt stands for a missing value
    std::optional<PropValue> value(const gql::Operand& op, const Binding& b) const {
        if (const auto* lit = std::get_if<gql::Literal>(&op)) {
            return std::visit([](const auto& v) { return PropValue(v); }, *lit);
        }
        const auto& ref = std::get<gql::PropertyRef>(op);
        const auto& node = g_.node(b.at(ref.variable));
        if (ref.property == "id") return PropValue(node.id);
        auto it = node.props.find(ref.property);
        if (it == node.props.end()) return std::nullopt;
        return it->second;
    }

    static std::string fold(std::string s) {
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    }

    static bool is_num(const PropValue& v) {
        return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
    }

    // 0 false, 1 true, 2 unknown
    int compare(const PropValue& a, gql::CompareOp op, const PropValue& b) const {
        using gql::CompareOp;
        if (op == CompareOp::Contains) {
            if (!std::holds_alternative<std::string>(b)) return 2;
            auto needle = fold(std::get<std::string>(b));
            if (const auto* s = std::get_if<std::string>(&a)) {
                return fold(*s).find(needle) != std::string::npos ? 1 : 0;
            }
            if (const auto* l = std::get_if<std::vector<std::string>>(&a)) {
                for (const auto& s : *l) {
                    if (fold(s).find(needle) != std::string::npos) return 1;
                }
                return 0;
            }
            return 2;
        }
        int sign;
        if (is_num(a) && is_num(b)) {
            if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
                auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
                sign = x < y ? -1 : x > y ? 1 : 0;
            } else {
                auto num = [](const PropValue& v) {
                    return std::holds_alternative<double>(v)
                               ? std::get<double>(v)
                               : static_cast<double>(std::get<std::int64_t>(v));
                };
                double x = num(a), y = num(b);
                sign = x < y ? -1 : x > y ? 1 : 0;
            }
        } else if (a.index() != b.index()) {
            if (op == CompareOp::Eq) return 0;
            if (op == CompareOp::Ne) return 1;
            return 2;
        } else if (std::holds_alternative<std::vector<std::string>>(a)) {
            bool eq = a == b;
            if (op == CompareOp::Eq) return eq ? 1 : 0;
            if (op == CompareOp::Ne) return eq ? 0 : 1;
            return 2;
        } else {
            sign = a < b ? -1 : (b < a ? 1 : 0);
        }
        switch (op) {
            case CompareOp::Eq: return sign == 0;
            case CompareOp::Ne: return sign != 0;
            case CompareOp::Lt: return sign < 0;
            case CompareOp::Le: return sign <= 0;
            case CompareOp::Gt: return sign > 0;
            case CompareOp::Ge: return sign >= 0;
            default: return 2;
        }
    }

    int eval(const gql::Predicate& p, const Binding& b) const {
        using Kind = gql::Predicate::Kind;
        switch (p.kind) {
            case Kind::Compare: {
                auto l = value(p.comparison.lhs, b);
                auto r = value(p.comparison.rhs, b);
                if (!l || !r) return 2;
                return compare(*l, p.comparison.op, *r);
            }
            case Kind::Not: {
                int v = eval(p.children[0], b);
                return v == 2 ? 2 : 1 - v;
            }
            case Kind::And: {
                int x = eval(p.children[0], b), y = eval(p.children[1], b);
                if (x == 0 || y == 0) return 0;
                return (x == 2 || y == 2) ? 2 : 1;
            }
            case Kind::Or: {
                int x = eval(p.children[0], b), y = eval(p.children[1], b);
                if (x == 1 || y == 1) return 1;
                return (x == 2 || y == 2) ? 2 : 0;
            }
        }
        return 2;
    }

    std::string cell(const gql::ReturnItem& item, const Binding& b) const {
        const auto& node = g_.node(b.at(item.variable));
        if (item.kind == gql::ReturnItem::Kind::Property) {
            if (item.property == "id") return "s:" + node.id;
            auto it = node.props.find(item.property);
            return it == node.props.end() ? "null" : render_prop(it->second);
        }
        return "node:" + node.id;
    }

    std::vector<OracleRow> project(const std::vector<Binding>& bindings) const {
        using Kind = gql::ReturnItem::Kind;
        bool agg = false, all_agg = true;
        for (const auto& it : q_.items) {
            bool a = it.kind == Kind::Count || it.kind == Kind::CountDistinct;
            agg = agg || a;
            all_agg = all_agg && a;
        }
        std::vector<OracleRow> rows;
        if (!agg) {
            for (const auto& b : bindings) {
                OracleRow r;
                for (const auto& it : q_.items) r.push_back(cell(it, b));
                rows.push_back(std::move(r));
            }
            return rows;
        }
        std::map<OracleRow, std::vector<const Binding*>> groups;
        for (const auto& b : bindings) {
            OracleRow key;
            for (const auto& it : q_.items) {
                if (it.kind != Kind::Count && it.kind != Kind::CountDistinct) key.push_back(cell(it, b));
            }
            groups[key].push_back(&b);
        }
        if (groups.empty() && all_agg) groups[{}];
        for (const auto& [key, members] : groups) {
            OracleRow r;
            std::size_t k = 0;
            for (const auto& it : q_.items) {
                if (it.kind == Kind::Count) {
                    r.push_back("i:" + std::to_string(members.size()));
                } else if (it.kind == Kind::CountDistinct) {
                    std::set<NodeIndex> distinct;
                    for (const auto* m : members) distinct.insert(m->at(it.variable));
                    r.push_back("i:" + std::to_string(distinct.size()));
                } else {
                    r.push_back(key[k++]);
                }
            }
            rows.push_back(std::move(r));
        }
        return rows;
    }

    const gql::Query& q_;
    const PropertyGraph& g_;
};

inline std::vector<OracleRow> oracle_rows(const gql::Query& q, const PropertyGraph& g) {
    return GqlOracle(q, g).run();
}

}  // namespace kgx::testing
