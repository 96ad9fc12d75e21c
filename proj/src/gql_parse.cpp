#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "kgx/gql.hpp"

namespace kgx::gql {

namespace {

enum class Tok {
    Ident,
    Int,
    Float,
    String,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Dot,
    DotDot,
    Star,
    Minus,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    End,
};

struct Token {
    Tok kind;
    std::string text;  // identifier text, decoded string literal, or number spelling
    int line;
    int column;
};

constexpr std::array<std::string_view, 16> kKeywords = {
    "MATCH", "WHERE", "RETURN", "DISTINCT", "ORDER",      "BY",          "ASC",  "DESC",
    "ASCENDING", "DESCENDING", "LIMIT", "AND", "OR", "NOT", "CONTAINS", "COUNT",
};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::toupper(static_cast<unsigned char>(x)) ==
                      std::toupper(static_cast<unsigned char>(y));
           });
}

bool is_reserved(std::string_view word) {
    if (iequals(word, "TRUE") || iequals(word, "FALSE")) return true;
    return std::any_of(kKeywords.begin(), kKeywords.end(),
                       [&](std::string_view k) { return iequals(word, k); });
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            if (pos_ >= text_.size()) {
                out.push_back({Tok::End, "", line_, col_});
                return out;
            }
            out.push_back(next());
        }
    }

private:
    [[noreturn]] void fail(const std::string& msg, int line, int col) {
        throw QueryError(QueryErrorCode::Syntax, msg, line, col);
    }

    char peek(std::size_t off = 0) const {
        return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
    }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i) {
            if (text_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            advance();
        }
    }

    Token next() {
        int line = line_;
        int col = col_;
        char c = peek();
        auto simple = [&](Tok k, std::size_t len) {
            Token t{k, std::string(text_.substr(pos_, len)), line, col};
            advance(len);
            return t;
        };
        switch (c) {
            case '(': return simple(Tok::LParen, 1);
            case ')': return simple(Tok::RParen, 1);
            case '[': return simple(Tok::LBracket, 1);
            case ']': return simple(Tok::RBracket, 1);
            case ':': return simple(Tok::Colon, 1);
            case ',': return simple(Tok::Comma, 1);
            case '*': return simple(Tok::Star, 1);
            case '-': return simple(Tok::Minus, 1);
            case '=': return simple(Tok::Eq, 1);
            case '.': return peek(1) == '.' ? simple(Tok::DotDot, 2) : simple(Tok::Dot, 1);
            case '>': return peek(1) == '=' ? simple(Tok::Ge, 2) : simple(Tok::Gt, 1);
            case '<':
                if (peek(1) == '=') return simple(Tok::Le, 2);
                if (peek(1) == '>') return simple(Tok::Ne, 2);
                return simple(Tok::Lt, 1);
            case '\'':
            case '"': return string_literal(line, col);
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) return number(line, col);
        if (ident_start(c)) {
            std::size_t start = pos_;
            while (ident_char(peek())) advance();
            return {Tok::Ident, std::string(text_.substr(start, pos_ - start)), line, col};
        }
        fail(std::string("unexpected character '") + c + "'", line, col);
    }

    Token string_literal(int line, int col) {
        char quote = peek();
        advance();
        std::string value;
        while (true) {
            if (pos_ >= text_.size()) fail("unterminated string literal", line, col);
            char c = peek();
            if (c == quote) {
                advance();
                break;
            }
            if (c == '\\') {
                char e = peek(1);
                switch (e) {
                    case '\\': value += '\\'; break;
                    case '\'': value += '\''; break;
                    case '"': value += '"'; break;
                    case 'n': value += '\n'; break;
                    case 't': value += '\t'; break;
                    default: fail("invalid escape sequence", line_, col_);
                }
                advance(2);
                continue;
            }
            value += c;
            advance();
        }
        return {Tok::String, std::move(value), line, col};
    }

    Token number(int line, int col) {
        std::size_t start = pos_;
        bool is_float = false;
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            is_float = true;
            advance();
            while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        }
        if (peek() == 'e' || peek() == 'E') {
            std::size_t off = 1;
            if (peek(1) == '+' || peek(1) == '-') off = 2;
            if (std::isdigit(static_cast<unsigned char>(peek(off)))) {
                is_float = true;
                advance(off);
                while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
            }
        }
        if (ident_char(peek())) fail("malformed number", line, col);
        return {is_float ? Tok::Float : Tok::Int, std::string(text_.substr(start, pos_ - start)),
                line, col};
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Query run() {
        Query q;
        expect_keyword("MATCH");
        q.patterns.push_back(pattern());
        while (accept(Tok::Comma)) q.patterns.push_back(pattern());
        if (accept_keyword("WHERE")) q.where = or_expr();
        expect_keyword("RETURN");
        if (accept_keyword("DISTINCT")) q.distinct = true;
        q.items.push_back(return_item());
        while (accept(Tok::Comma)) q.items.push_back(return_item());
        if (is_keyword("ORDER")) {
            const auto& at = cur();
            advance();
            expect_keyword("BY");
            OrderBy ob;
            ob.item = return_item();
            if (std::find(q.items.begin(), q.items.end(), ob.item) == q.items.end()) {
                throw QueryError(QueryErrorCode::Syntax, "ORDER BY key must appear in RETURN",
                                 at.line, at.column);
            }
            if (accept_keyword("DESC") || accept_keyword("DESCENDING")) {
                ob.descending = true;
            } else if (!accept_keyword("ASC")) {
                accept_keyword("ASCENDING");
            }
            q.order_by = std::move(ob);
        }
        if (accept_keyword("LIMIT")) {
            const auto& t = cur();
            if (t.kind != Tok::Int) fail("LIMIT expects a positive integer");
            auto v = parse_int(t);
            if (v < 1) fail("LIMIT must be at least 1");
            advance();
            q.limit = v;
        }
        if (cur().kind != Tok::End) fail("unexpected '" + cur().text + "'");
        return q;
    }

private:
    const Token& cur() const { return toks_[pos_]; }
    void advance() {
        if (pos_ + 1 < toks_.size()) ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw QueryError(QueryErrorCode::Syntax, msg, cur().line, cur().column);
    }

    bool accept(Tok k) {
        if (cur().kind != k) return false;
        advance();
        return true;
    }

    void expect(Tok k, std::string_view what) {
        if (!accept(k)) {
            fail("expected " + std::string(what) +
                 (cur().kind == Tok::End ? " at end of query" : " near '" + cur().text + "'"));
        }
    }

    bool is_keyword(std::string_view kw) const {
        return cur().kind == Tok::Ident && iequals(cur().text, kw);
    }

    bool accept_keyword(std::string_view kw) {
        if (!is_keyword(kw)) return false;
        advance();
        return true;
    }

    void expect_keyword(std::string_view kw) {
        if (!accept_keyword(kw)) {
            fail("expected " + std::string(kw) +
                 (cur().kind == Tok::End ? " at end of query" : " near '" + cur().text + "'"));
        }
    }

    std::int64_t parse_int(const Token& t) const {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || p != t.text.data() + t.text.size()) {
            throw QueryError(QueryErrorCode::Syntax, "integer out of range", t.line, t.column);
        }
        return v;
    }

    std::string variable_name() {
        const auto& t = cur();
        if (t.kind != Tok::Ident) fail("expected a variable");
        if (is_reserved(t.text)) fail("'" + t.text + "' is a reserved word");
        std::string name = t.text;
        advance();
        return name;
    }

    std::string use_variable() {
        const auto& t = cur();
        int line = t.line;
        int col = t.column;
        auto name = variable_name();
        if (!bound_.contains(name)) {
            throw QueryError(QueryErrorCode::Unbound, "unbound variable '" + name + "'", line, col);
        }
        return name;
    }

    PathPattern pattern() {
        PathPattern p;
        p.nodes.push_back(node_pattern());
        while (cur().kind == Tok::Minus || cur().kind == Tok::Lt) {
            p.edges.push_back(edge_pattern());
            p.nodes.push_back(node_pattern());
        }
        return p;
    }

    NodePattern node_pattern() {
        expect(Tok::LParen, "'('");
        NodePattern n;
        if (cur().kind == Tok::Ident) {
            n.variable = variable_name();
            bound_.insert(*n.variable);
        }
        if (accept(Tok::Colon)) {
            const auto& t = cur();
            if (t.kind != Tok::Ident) fail("expected a label");
            n.label = parse_node_label(t.text);
            if (!n.label) {
                throw QueryError(QueryErrorCode::Schema, "unknown label '" + t.text + "'", t.line,
                                 t.column);
            }
            advance();
        }
        expect(Tok::RParen, "')'");
        return n;
    }

    EdgePattern edge_pattern() {
        EdgePattern e;
        bool left = accept(Tok::Lt);
        expect(Tok::Minus, "'-'");
        if (accept(Tok::LBracket)) {
            if (accept(Tok::Colon)) {
                const auto& t = cur();
                if (t.kind != Tok::Ident) fail("expected a relationship type");
                e.type = parse_edge_type(t.text);
                if (!e.type) {
                    throw QueryError(QueryErrorCode::Schema,
                                     "unknown relationship type '" + t.text + "'", t.line,
                                     t.column);
                }
                advance();
            } else if (cur().kind == Tok::Ident) {
                fail("relationship variables are not supported");
            }
            if (accept(Tok::Star)) {
                if (cur().kind != Tok::Int) fail("expected hop count after '*'");
                e.hops.min = e.hops.max = static_cast<int>(
                    std::clamp<std::int64_t>(parse_int(cur()), -1, kMaxHops + 1));
                advance();
                if (accept(Tok::DotDot)) {
                    if (cur().kind != Tok::Int) fail("expected upper hop bound");
                    e.hops.max = static_cast<int>(
                        std::clamp<std::int64_t>(parse_int(cur()), -1, kMaxHops + 1));
                    advance();
                }
                if (e.hops.min < 1 || e.hops.min > e.hops.max || e.hops.max > kMaxHops) {
                    fail("hop range must satisfy 1 <= min <= max <= " + std::to_string(kMaxHops));
                }
            }
            expect(Tok::RBracket, "']'");
        }
        expect(Tok::Minus, "'-'");
        bool right = accept(Tok::Gt);
        if (left && right) fail("relationship cannot point both ways");
        e.direction = left ? EdgeDirection::Left : right ? EdgeDirection::Right
                                                         : EdgeDirection::Undirected;
        return e;
    }

    Predicate or_expr() {
        Predicate lhs = and_expr();
        while (accept_keyword("OR")) {
            Predicate p;
            p.kind = Predicate::Kind::Or;
            p.children.push_back(std::move(lhs));
            p.children.push_back(and_expr());
            lhs = std::move(p);
        }
        return lhs;
    }

    Predicate and_expr() {
        Predicate lhs = not_expr();
        while (accept_keyword("AND")) {
            Predicate p;
            p.kind = Predicate::Kind::And;
            p.children.push_back(std::move(lhs));
            p.children.push_back(not_expr());
            lhs = std::move(p);
        }
        return lhs;
    }

    Predicate not_expr() {
        if (accept_keyword("NOT")) {
            Predicate p;
            p.kind = Predicate::Kind::Not;
            p.children.push_back(not_expr());
            return p;
        }
        if (accept(Tok::LParen)) {
            Predicate inner = or_expr();
            expect(Tok::RParen, "')'");
            return inner;
        }
        Predicate p;
        p.comparison.lhs = operand();
        p.comparison.op = compare_op();
        p.comparison.rhs = operand();
        return p;
    }

    CompareOp compare_op() {
        switch (cur().kind) {
            case Tok::Eq: advance(); return CompareOp::Eq;
            case Tok::Ne: advance(); return CompareOp::Ne;
            case Tok::Lt: advance(); return CompareOp::Lt;
            case Tok::Le: advance(); return CompareOp::Le;
            case Tok::Gt: advance(); return CompareOp::Gt;
            case Tok::Ge: advance(); return CompareOp::Ge;
            default: break;
        }
        if (accept_keyword("CONTAINS")) return CompareOp::Contains;
        fail("expected a comparison operator");
    }

    Operand operand() {
        const auto& t = cur();
        switch (t.kind) {
            case Tok::String: {
                Literal lit = t.text;
                advance();
                return lit;
            }
            case Tok::Int:
            case Tok::Float:
                return number(false);
            case Tok::Minus:
                advance();
                if (cur().kind != Tok::Int && cur().kind != Tok::Float) fail("expected a number");
                return number(true);
            case Tok::Ident:
                if (iequals(t.text, "TRUE") || iequals(t.text, "FALSE")) {
                    Literal lit = iequals(t.text, "TRUE");
                    advance();
                    return lit;
                }
                return property_ref();
            default:
                fail("expected a property or literal");
        }
    }

    Literal number(bool negative) {
        const auto& t = cur();
        if (t.kind == Tok::Int) {
            std::string spelled = (negative ? "-" : "") + t.text;
            Token signed_tok{t.kind, spelled, t.line, t.column};
            auto v = parse_int(signed_tok);
            advance();
            return v;
        }
        double v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{}) fail("number out of range");
        advance();
        return negative ? -v : v;
    }

    PropertyRef property_ref() {
        PropertyRef ref;
        ref.variable = use_variable();
        expect(Tok::Dot, "'.'");
        if (cur().kind != Tok::Ident) fail("expected a property name");
        ref.property = cur().text;
        advance();
        return ref;
    }

    ReturnItem return_item() {
        ReturnItem item;
        if (is_keyword("COUNT")) {
            advance();
            expect(Tok::LParen, "'('");
            item.kind = accept_keyword("DISTINCT") ? ReturnItem::Kind::CountDistinct
                                                   : ReturnItem::Kind::Count;
            item.variable = use_variable();
            expect(Tok::RParen, "')'");
            return item;
        }
        item.variable = use_variable();
        if (accept(Tok::Dot)) {
            if (cur().kind != Tok::Ident) fail("expected a property name");
            item.kind = ReturnItem::Kind::Property;
            item.property = cur().text;
            advance();
        }
        return item;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::set<std::string> bound_;
};

std::string quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\'': out += "\\'"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '\'';
    return out;
}

std::string print_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, p);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

void print_literal(std::ostream& os, const Literal& lit) {
    std::visit(
        [&os](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>) {
                os << (v ? "true" : "false");
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                os << v;
            } else if constexpr (std::is_same_v<T, double>) {
                os << print_double(v);
            } else {
                os << quote(v);
            }
        },
        lit);
}

void print_operand(std::ostream& os, const Operand& op) {
    if (const auto* ref = std::get_if<PropertyRef>(&op)) {
        os << ref->variable << '.' << ref->property;
    } else {
        print_literal(os, std::get<Literal>(op));
    }
}

std::string_view op_text(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "<>";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
        case CompareOp::Contains: return "CONTAINS";
    }
    return "=";
}

void print_predicate(std::ostream& os, const Predicate& p) {
    auto child = [&os](const Predicate& c) {
        bool wrap = c.kind == Predicate::Kind::And || c.kind == Predicate::Kind::Or;
        if (wrap) os << '(';
        print_predicate(os, c);
        if (wrap) os << ')';
    };
    switch (p.kind) {
        case Predicate::Kind::Compare:
            print_operand(os, p.comparison.lhs);
            os << ' ' << op_text(p.comparison.op) << ' ';
            print_operand(os, p.comparison.rhs);
            break;
        case Predicate::Kind::Not:
            os << "NOT ";
            child(p.children.at(0));
            break;
        case Predicate::Kind::And:
        case Predicate::Kind::Or:
            child(p.children.at(0));
            os << (p.kind == Predicate::Kind::And ? " AND " : " OR ");
            child(p.children.at(1));
            break;
    }
}

void print_pattern(std::ostream& os, const PathPattern& p) {
    auto node = [&os](const NodePattern& n) {
        os << '(';
        if (n.variable) os << *n.variable;
        if (n.label) os << ':' << to_string(*n.label);
        os << ')';
    };
    node(p.nodes.at(0));
    for (std::size_t i = 0; i < p.edges.size(); ++i) {
        const auto& e = p.edges[i];
        os << (e.direction == EdgeDirection::Left ? "<-[" : "-[");
        if (e.type) os << ':' << to_string(*e.type);
        if (e.hops.min != 1 || e.hops.max != 1) {
            os << '*' << e.hops.min;
            if (e.hops.max != e.hops.min) os << ".." << e.hops.max;
        }
        os << (e.direction == EdgeDirection::Right ? "]->" : "]-");
        node(p.nodes.at(i + 1));
    }
}

}  // namespace

std::string_view to_string(QueryErrorCode code) {
    switch (code) {
        case QueryErrorCode::Syntax: return "SYNTAX";
        case QueryErrorCode::Unbound: return "UNBOUND";
        case QueryErrorCode::Schema: return "SCHEMA";
        case QueryErrorCode::Budget: return "BUDGET";
    }
    return "SYNTAX";
}

QueryError::QueryError(QueryErrorCode code, const std::string& message, int line, int column)
    : std::runtime_error(line > 0 ? message + " (line " + std::to_string(line) + ", column " +
                                        std::to_string(column) + ")"
                                  : message),
      code_(code),
      line_(line),
      column_(column) {}

Query parse(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw QueryError(QueryErrorCode::Syntax, "empty query", 1, 1);
    }
    return Parser(Lexer(text).run()).run();
}

std::string canonical_print(const ReturnItem& item) {
    switch (item.kind) {
        case ReturnItem::Kind::Node: return item.variable;
        case ReturnItem::Kind::Property: return item.variable + "." + item.property;
        case ReturnItem::Kind::Count: return "COUNT(" + item.variable + ")";
        case ReturnItem::Kind::CountDistinct: return "COUNT(DISTINCT " + item.variable + ")";
    }
    return item.variable;
}

std::string canonical_print(const Query& q) {
    std::ostringstream os;
    os << "MATCH ";
    for (std::size_t i = 0; i < q.patterns.size(); ++i) {
        if (i > 0) os << ", ";
        print_pattern(os, q.patterns[i]);
    }
    if (q.where) {
        os << " WHERE ";
        print_predicate(os, *q.where);
    }
    os << " RETURN ";
    if (q.distinct) os << "DISTINCT ";
    for (std::size_t i = 0; i < q.items.size(); ++i) {
        if (i > 0) os << ", ";
        os << canonical_print(q.items[i]);
    }
    if (q.order_by) {
        os << " ORDER BY " << canonical_print(q.order_by->item);
        if (q.order_by->descending) os << " DESC";
    }
    if (q.limit) os << " LIMIT " << *q.limit;
    return os.str();
}

}  // namespace kgx::gql
