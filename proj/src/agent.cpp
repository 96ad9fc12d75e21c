#include "kgx/agent.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "kgx/error.hpp"

namespace kgx::agent {

namespace {

constexpr std::string_view kStatusNames[] = {"running", "done", "budget_exhausted", "failed"};
constexpr std::string_view kEventNames[] = {"policy_thought", "tool_call", "tool_result",
                                            "final_answer"};

[[noreturn]] void malformed(const std::string& msg) { throw Error(ErrorCode::MalformedAction, msg); }

[[noreturn]] void bad_transcript(const std::string& msg) {
    throw Error(ErrorCode::InvalidArgument, "transcript: " + msg);
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string call_id_for(std::size_t step) { return "call-" + std::to_string(step); }

json answer_json(const FinalAnswer& a) {
    json ev = json::array();
    for (const auto& c : a.evidence) ev.push_back({{"claim", c.text}, {"call_ids", c.call_ids}});
    return {{"text", a.text}, {"evidence", ev}, {"incomplete", a.incomplete}};
}

json event_json(const Event& e, bool with_elapsed) {
    json j{{"type", to_string(e.type)}, {"step", e.step}};
    switch (e.type) {
        case EventType::PolicyThought:
            j["text"] = e.text;
            break;
        case EventType::ToolCall:
            j["call_id"] = e.call.call_id;
            j["tool"] = e.call.tool_name;
            j["args"] = e.call.args;
            if (!e.rejected.is_null()) j["rejected"] = e.rejected;
            break;
        case EventType::ToolResult:
            j["result"] = e.result.to_json(with_elapsed);
            break;
        case EventType::FinalAnswer:
            j.update(answer_json(e.answer));
            break;
    }
    return j;
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) bad_transcript(std::string("missing '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad_transcript(std::string("bad '") + key + "'");
    }
}

FinalAnswer answer_from_json(const json& j) {
    FinalAnswer a;
    a.text = field<std::string>(j, "text");
    a.incomplete = field<bool>(j, "incomplete");
    for (const auto& c : field<json>(j, "evidence")) {
        a.evidence.push_back({field<std::string>(c, "claim"), field<std::vector<std::string>>(c, "call_ids")});
    }
    return a;
}

Event event_from_json(const json& j) {
    Event e;
    auto type = field<std::string>(j, "type");
    auto it = std::find(std::begin(kEventNames), std::end(kEventNames), type);
    if (it == std::end(kEventNames)) bad_transcript("unknown event type '" + type + "'");
    e.type = static_cast<EventType>(it - std::begin(kEventNames));
    e.step = field<std::size_t>(j, "step");
    switch (e.type) {
        case EventType::PolicyThought:
            e.text = field<std::string>(j, "text");
            break;
        case EventType::ToolCall:
            e.call.call_id = field<std::string>(j, "call_id");
            e.call.tool_name = field<std::string>(j, "tool");
            e.call.args = field<json>(j, "args");
            if (j.contains("rejected")) e.rejected = j["rejected"];
            break;
        case EventType::ToolResult:
            try {
                e.result = tools::ToolResult::from_json(field<json>(j, "result"));
            } catch (const json::exception& ex) {
                bad_transcript(std::string("bad tool result: ") + ex.what());
            }
            break;
        case EventType::FinalAnswer:
            e.answer = answer_from_json(j);
            break;
    }
    return e;
}

void check_keys(const json& action, std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : action.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            malformed("unexpected key '" + k + "'");
        }
    }
}

const json& require(const json& action, const char* key, json::value_t type, const char* type_name) {
    auto it = action.find(key);
    if (it == action.end()) malformed(std::string("missing '") + key + "'");
    if (it->type() != type) malformed(std::string("'") + key + "' must be " + type_name);
    return *it;
}

void finish(Session& s, FinalAnswer answer, std::size_t step) {
    Event e;
    e.type = EventType::FinalAnswer;
    e.step = step;
    e.answer = std::move(answer);
    s.transcript.push_back(std::move(e));
}

void exhaust(Session& s) {
    FinalAnswer a;
    a.incomplete = true;
    a.text = "Sorry, the step budget of " + std::to_string(s.max_steps) +
             " was used up before an answer could be completed. Partial findings follow.";
    for (const auto& e : s.transcript) {
        if (e.type == EventType::ToolResult && e.result.ok) {
            a.evidence.push_back({"Partial result from " + e.result.tool_name, {e.result.call_id}});
        }
    }
    s.status = Status::BudgetExhausted;
    finish(s, std::move(a), s.step_count);
}

void fail(Session& s, ErrorCode code, const std::string& message) {
    s.status = Status::Failed;
    s.failure = Failure{std::string(to_string(code)), message};
}

void append_pair(Session& s, tools::ToolCall call, json rejected, tools::ToolResult result) {
    Event c;
    c.type = EventType::ToolCall;
    c.step = s.step_count;
    c.call = std::move(call);
    c.rejected = std::move(rejected);
    s.transcript.push_back(std::move(c));
    Event r;
    r.type = EventType::ToolResult;
    r.step = s.step_count;
    r.result = std::move(result);
    s.transcript.push_back(std::move(r));
}

// Calls the policy on a worker thread so that a stuck policy cannot hold the
// session past the timeout. The worker owns copies of everything it touches.
json decide_with_timeout(const std::shared_ptr<Policy>& policy, PolicyRequest request,
                         std::chrono::milliseconds timeout) {
    auto task = std::make_shared<std::packaged_task<json()>>(
        [policy, req = std::move(request)] { return policy->decide(req); });
    auto fut = task->get_future();
    std::thread([task] { (*task)(); }).detach();
    if (fut.wait_for(timeout) != std::future_status::ready) {
        throw Error(ErrorCode::PolicyTimeout,
                    "policy gave no action within " + std::to_string(timeout.count()) + " ms");
    }
    return fut.get();
}

}  // namespace

std::string_view to_string(Status s) { return kStatusNames[static_cast<int>(s)]; }

std::optional<Status> parse_status(std::string_view text) {
    for (std::size_t i = 0; i < std::size(kStatusNames); ++i) {
        if (kStatusNames[i] == text) return static_cast<Status>(i);
    }
    return std::nullopt;
}

std::string_view to_string(EventType t) { return kEventNames[static_cast<int>(t)]; }

const FinalAnswer* Session::final_answer() const {
    for (const auto& e : transcript) {
        if (e.type == EventType::FinalAnswer) return &e.answer;
    }
    return nullptr;
}

std::optional<std::size_t> Session::find_call(std::string_view call_id) const {
    for (std::size_t i = 0; i < transcript.size(); ++i) {
        if (transcript[i].type == EventType::ToolCall && transcript[i].call.call_id == call_id) return i;
    }
    return std::nullopt;
}

json to_json(const Session& s, bool with_elapsed) {
    json events = json::array();
    for (const auto& e : s.transcript) events.push_back(event_json(e, with_elapsed));
    json j{{"format", kTranscriptFormat},
           {"session_id", s.session_id},
           {"user_query", s.user_query},
           {"max_steps", s.max_steps},
           {"step_count", s.step_count},
           {"status", to_string(s.status)},
           {"events", events}};
    if (s.failure) j["failure"] = {{"code", s.failure->code}, {"message", s.failure->message}};
    return j;
}

Session session_from_json(const json& j) {
    if (field<std::string>(j, "format") != kTranscriptFormat) bad_transcript("unsupported format");
    Session s;
    s.session_id = field<std::string>(j, "session_id");
    s.user_query = field<std::string>(j, "user_query");
    s.max_steps = field<std::size_t>(j, "max_steps");
    s.step_count = field<std::size_t>(j, "step_count");
    auto status = parse_status(field<std::string>(j, "status"));
    if (!status) bad_transcript("unknown status");
    s.status = *status;
    for (const auto& e : field<json>(j, "events")) s.transcript.push_back(event_from_json(e));
    if (j.contains("failure")) {
        s.failure = Failure{field<std::string>(j["failure"], "code"),
                            field<std::string>(j["failure"], "message")};
    }
    return s;
}

void AgentConfig::validate() const {
    if (max_steps < 1) throw Error(ErrorCode::InvalidConfig, "agent.max_steps must be >= 1");
    if (policy_timeout.count() <= 0) {
        throw Error(ErrorCode::InvalidConfig, "agent.policy_timeout_ms must be > 0");
    }
    if (result_char_budget < 1) {
        throw Error(ErrorCode::InvalidConfig, "agent.result_char_budget must be >= 1");
    }
}

json to_json(const PolicyRequest& r) {
    return {{"session_id", r.session_id},
            {"query", r.user_query},
            {"step", r.step},
            {"transcript", r.transcript},
            {"tools", r.manifest}};
}

PolicyRequest make_request(const Session& s, const AgentConfig& config) {
    PolicyRequest r;
    r.session_id = s.session_id;
    r.user_query = s.user_query;
    r.step = s.step_count + 1;
    r.manifest = tools::manifest();
    r.transcript = json::array();
    for (const auto& e : s.transcript) {
        json j = event_json(e, false);
        if (e.type == EventType::ToolResult && e.result.ok) {
            std::string body = e.result.payload.dump();
            if (body.size() > config.result_char_budget) {
                j["result"]["payload"] = {{"truncated_for_prompt", true},
                                          {"preview", tools::utf8_prefix(body, config.result_char_budget)}};
            }
        }
        r.transcript.push_back(std::move(j));
    }
    return r;
}

json ScriptedPolicy::decide(const PolicyRequest& request) {
    if (request.step == 0 || request.step > actions_.size()) {
        throw Error(ErrorCode::PolicyFailure,
                    "script has no action for step " + std::to_string(request.step));
    }
    return actions_[request.step - 1];
}

Script load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read script '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "script '" + path + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("actions") || !j["actions"].is_array()) {
        throw Error(ErrorCode::InvalidArgument, "script '" + path + "' needs an 'actions' array");
    }
    Script s;
    if (j.contains("query")) {
        if (!j["query"].is_string()) throw Error(ErrorCode::InvalidArgument, "script query must be a string");
        s.query = j["query"].get<std::string>();
    }
    s.actions = j["actions"].get<std::vector<json>>();
    return s;
}

ParsedAction parse_action(const json& action, const Session& s) {
    if (!action.is_object()) malformed("action must be an object");
    const auto& kind = require(action, "action", json::value_t::string, "a string");
    ParsedAction out;
    if (action.contains("thought")) {
        out.thought = require(action, "thought", json::value_t::string, "a string").get<std::string>();
    }
    if (kind == "tool_call") {
        check_keys(action, {"action", "tool", "args", "thought"});
        tools::ToolCall call;
        call.tool_name = require(action, "tool", json::value_t::string, "a string").get<std::string>();
        if (call.tool_name.empty()) malformed("'tool' must not be empty");
        call.args = require(action, "args", json::value_t::object, "an object");
        out.call = std::move(call);
        return out;
    }
    if (kind == "final_answer") {
        check_keys(action, {"action", "text", "evidence", "thought"});
        FinalAnswer a;
        a.text = require(action, "text", json::value_t::string, "a string").get<std::string>();
        if (blank(a.text)) malformed("'text' must not be blank");
        for (const auto& c : require(action, "evidence", json::value_t::array, "an array")) {
            if (!c.is_object()) malformed("evidence entries must be objects");
            check_keys(c, {"claim", "call_ids"});
            Claim claim;
            claim.text = require(c, "claim", json::value_t::string, "a string").get<std::string>();
            if (blank(claim.text)) malformed("evidence claim must not be blank");
            const auto& ids = require(c, "call_ids", json::value_t::array, "an array");
            if (ids.empty()) malformed("claim '" + claim.text + "' cites no tool call");
            for (const auto& id : ids) {
                if (!id.is_string()) malformed("call ids must be strings");
                auto sid = id.get<std::string>();
                if (!s.find_call(sid)) malformed("evidence cites unknown call '" + sid + "'");
                claim.call_ids.push_back(sid);
            }
            a.evidence.push_back(std::move(claim));
        }
        out.answer = std::move(a);
        return out;
    }
    malformed("unknown action '" + kind.get<std::string>() + "'");
}

Session start_session(std::string session_id, std::string user_query, const AgentConfig& config) {
    config.validate();
    if (blank(user_query)) throw Error(ErrorCode::InvalidArgument, "user query must not be empty");
    Session s;
    s.session_id = std::move(session_id);
    s.user_query = std::move(user_query);
    s.max_steps = config.max_steps;
    return s;
}

void step(Session& s, const std::shared_ptr<Policy>& policy, const tools::Toolbox& toolbox,
          const AgentConfig& config) {
    if (s.terminal()) {
        throw Error(ErrorCode::SessionClosed, "session '" + s.session_id + "' is " +
                                                  std::string(to_string(s.status)));
    }
    if (s.step_count >= s.max_steps) {
        exhaust(s);
        return;
    }

    json action;
    std::optional<Error> rejected;
    try {
        action = decide_with_timeout(policy, make_request(s, config), config.policy_timeout);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedAction) {
            fail(s, e.code(), e.what());
            return;
        }
        rejected = e;
    } catch (const std::exception& e) {
        fail(s, ErrorCode::PolicyFailure, e.what());
        return;
    }

    ++s.step_count;
    const std::string call_id = call_id_for(s.step_count);
    ParsedAction parsed;
    try {
        if (rejected) throw *rejected;
        parsed = parse_action(action, s);
    } catch (const Error& e) {
        tools::ToolCall call{"", json::object(), call_id};
        tools::ToolResult r;
        r.call_id = call_id;
        r.ok = false;
        r.error_code = std::string(to_string(e.code()));
        r.error_message = e.what();
        append_pair(s, std::move(call), action.is_null() ? json::object() : action, std::move(r));
        return;
    }

    if (!parsed.thought.empty()) {
        Event t;
        t.type = EventType::PolicyThought;
        t.step = s.step_count;
        t.text = parsed.thought;
        s.transcript.push_back(std::move(t));
    }
    if (parsed.answer) {
        s.status = Status::Done;
        finish(s, std::move(*parsed.answer), s.step_count);
        return;
    }
    parsed.call->call_id = call_id;
    auto result = toolbox.call(*parsed.call);
    append_pair(s, std::move(*parsed.call), nullptr, std::move(result));
}

Session run(std::string session_id, std::string user_query, const std::shared_ptr<Policy>& policy,
            const tools::Toolbox& toolbox, const AgentConfig& config) {
    Session s = start_session(std::move(session_id), std::move(user_query), config);
    while (!s.terminal()) step(s, policy, toolbox, config);
    return s;
}

ReplayReport replay(const Session& s, const tools::Toolbox& toolbox) {
    ReplayReport report;
    for (std::size_t i = 0; i < s.transcript.size(); ++i) {
        const auto& e = s.transcript[i];
        if (e.type != EventType::ToolCall || !e.rejected.is_null()) continue;
        ++report.replayed;
        auto again = toolbox.call(e.call).to_json().dump();
        bool same = i + 1 < s.transcript.size() && s.transcript[i + 1].type == EventType::ToolResult &&
                    s.transcript[i + 1].result.to_json().dump() == again;
        if (!same) report.mismatched.push_back(e.call.call_id);
    }
    return report;
}

// ---- answer document ----

namespace {

constexpr NodeLabel kChainOrder[] = {NodeLabel::Author, NodeLabel::Publication, NodeLabel::Project,
                                     NodeLabel::Concept};

int chain_rank(NodeLabel l) {
    for (int i = 0; i < 4; ++i) {
        if (kChainOrder[i] == l) return i;
    }
    return 4 + static_cast<int>(l);
}

std::string display_name(const Node& n) {
    for (const char* key : {"name", "label", "title"}) {
        auto it = n.props.find(key);
        if (it != n.props.end()) {
            if (const auto* s = std::get_if<std::string>(&it->second); s && !s->empty()) return *s;
        }
    }
    return n.id;
}

struct Extract {
    std::vector<std::string> refs;
    std::vector<std::vector<std::string>> groups;  // node ids that appear together
};

bool is_node_cell(const json& cell) {
    return cell.is_object() && cell.contains("id") && cell.contains("label") && cell["id"].is_string();
}

Extract extract(const tools::ToolResult& r) {
    Extract x;
    if (!r.ok || !r.payload.is_object()) return x;
    const auto& p = r.payload;
    if (r.tool_name == tools::kSearchGraph) {
        for (const auto& row : p.value("rows", json::array())) {
            std::vector<std::string> ids;
            std::string ref;
            for (const auto& cell : row) {
                if (!ref.empty()) ref += " | ";
                if (is_node_cell(cell)) {
                    ids.push_back(cell["id"].get<std::string>());
                    ref += ids.back();
                } else {
                    ref += cell.is_string() ? cell.get<std::string>() : cell.dump();
                }
            }
            x.refs.push_back(ref);
            x.groups.push_back(std::move(ids));
        }
    } else if (r.tool_name == tools::kSearchPublications) {
        for (const auto& h : p.value("hits", json::array())) {
            x.refs.push_back(h.value("id", ""));
            x.groups.push_back({x.refs.back()});
        }
    } else if (r.tool_name == tools::kSearchConceptsKeywords) {
        for (const auto& m : p.value("matches", json::array())) {
            x.refs.push_back(m.value("id", ""));
            x.groups.push_back({x.refs.back()});
        }
    } else if (r.tool_name == tools::kIdentifyExperts) {
        for (const auto& e : p.value("experts", json::array())) {
            std::string author = e.value("author_id", "");
            x.refs.push_back(author);
            x.groups.push_back({author});
            for (const auto& pub : e.value("publications", json::array())) {
                x.groups.push_back({author, pub.get<std::string>()});
            }
        }
    }
    return x;
}

const tools::ToolResult* result_for(const Session& s, std::string_view call_id) {
    for (const auto& e : s.transcript) {
        if (e.type == EventType::ToolResult && e.result.call_id == call_id) return &e.result;
    }
    return nullptr;
}

}  // namespace

json render_answer(const Session& s, const PropertyGraph& graph) {
    if (!s.terminal()) throw Error(ErrorCode::InvalidArgument, "session is still running");

    const FinalAnswer* answer = s.final_answer();
    std::vector<std::string> cited;
    json evidence = json::array();
    if (answer != nullptr) {
        for (const auto& claim : answer->evidence) {
            for (const auto& id : claim.call_ids) {
                const auto* r = result_for(s, id);
                json row{{"claim", claim.text}, {"call_id", id}};
                if (r != nullptr) {
                    row["tool"] = r->tool_name;
                    row["status"] = r->ok ? "ok" : "error";
                    row["rows"] = extract(*r).refs;
                } else {
                    row["tool"] = "";
                    row["status"] = "missing";
                    row["rows"] = json::array();
                }
                evidence.push_back(std::move(row));
                if (std::find(cited.begin(), cited.end(), id) == cited.end()) cited.push_back(id);
            }
        }
    } else {
        for (const auto& e : s.transcript) {
            if (e.type == EventType::ToolResult && e.result.ok) cited.push_back(e.result.call_id);
        }
    }

    std::set<NodeIndex> nodes;
    std::set<std::pair<NodeIndex, NodeIndex>> pairs;
    for (const auto& id : cited) {
        const auto* r = result_for(s, id);
        if (r == nullptr) continue;
        for (const auto& group : extract(*r).groups) {
            std::vector<NodeIndex> members;
            for (const auto& nid : group) {
                if (auto n = graph.find(nid)) members.push_back(*n);
            }
            nodes.insert(members.begin(), members.end());
            for (auto a : members) {
                for (auto b : members) {
                    if (a != b) pairs.emplace(a, b);
                }
            }
        }
    }

    auto node_less = [&](NodeIndex a, NodeIndex b) {
        const auto &na = graph.node(a), &nb = graph.node(b);
        int ra = chain_rank(na.label), rb = chain_rank(nb.label);
        return ra != rb ? ra < rb : na.id < nb.id;
    };
    std::vector<NodeIndex> ordered(nodes.begin(), nodes.end());
    std::sort(ordered.begin(), ordered.end(), node_less);

    json layers = json::array();
    json node_list = json::array();
    for (auto n : ordered) {
        const auto& node = graph.node(n);
        json entry{{"id", node.id}, {"label", to_string(node.label)}, {"name", display_name(node)}};
        if (layers.empty() || layers.back()["label"] != to_string(node.label)) {
            layers.push_back({{"label", to_string(node.label)}, {"nodes", json::array()}});
        }
        layers.back()["nodes"].push_back({{"id", node.id}, {"name", display_name(node)}});
        node_list.push_back(std::move(entry));
    }

    struct EdgeRow {
        NodeIndex src, dst;
        EdgeType type;
    };
    std::vector<EdgeRow> edges;
    for (auto [a, b] : pairs) {
        for (std::size_t t = 0; t < kEdgeTypeCount; ++t) {
            auto type = static_cast<EdgeType>(t);
            for (auto ei : graph.edges_of(a, Direction::Out, type)) {
                if (graph.edge(ei).dst == b) edges.push_back({a, b, type});
            }
        }
    }
    std::sort(edges.begin(), edges.end(), [&](const EdgeRow& x, const EdgeRow& y) {
        if (x.src != y.src) return node_less(x.src, y.src);
        if (x.dst != y.dst) return node_less(x.dst, y.dst);
        return x.type < y.type;
    });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const EdgeRow& x, const EdgeRow& y) {
                                return x.src == y.src && x.dst == y.dst && x.type == y.type;
                            }),
                edges.end());
    json edge_list = json::array();
    for (const auto& e : edges) {
        edge_list.push_back({{"src", graph.node(e.src).id},
                             {"type", to_string(e.type)},
                             {"dst", graph.node(e.dst).id}});
    }

    std::string text;
    if (answer != nullptr) {
        text = answer->text;
    } else if (s.failure) {
        text = "The session failed (" + s.failure->code + "): " + s.failure->message;
    }
    json doc{{"session_id", s.session_id},
             {"query", s.user_query},
             {"status", to_string(s.status)},
             {"incomplete", s.status != Status::Done || (answer != nullptr && answer->incomplete)},
             {"steps", s.step_count},
             {"answer", text},
             {"evidence", evidence},
             {"chain", {{"layers", layers}, {"nodes", node_list}, {"edges", edge_list}}}};
    if (s.failure) doc["failure"] = {{"code", s.failure->code}, {"message", s.failure->message}};
    return doc;
}

std::string render_text(const json& doc) {
    std::ostringstream out;
    out << "Question: " << doc.value("query", "") << "\n";
    out << "Status: " << doc.value("status", "");
    if (doc.value("incomplete", false)) out << " (incomplete)";
    out << "\n\n" << doc.value("answer", "") << "\n";
    const auto& evidence = doc.value("evidence", json::array());
    if (!evidence.empty()) {
        out << "\nEvidence:\n";
        for (const auto& e : evidence) {
            out << "  - " << e.value("claim", "") << " [" << e.value("call_id", "") << " "
                << e.value("tool", "") << ", " << e["rows"].size() << " rows]\n";
        }
    }
    const auto& chain = doc.value("chain", json::object());
    const auto& layers = chain.value("layers", json::array());
    if (!layers.empty()) {
        out << "\nChain:\n";
        for (const auto& layer : layers) {
            out << "  " << layer.value("label", "") << ":";
            bool first = true;
            for (const auto& n : layer["nodes"]) {
                out << (first ? " " : ", ") << n.value("id", "");
                if (n.value("name", "") != n.value("id", "")) out << " (" << n.value("name", "") << ")";
                first = false;
            }
            out << "\n";
        }
        for (const auto& e : chain.value("edges", json::array())) {
            out << "    " << e.value("src", "") << " -" << e.value("type", "") << "-> "
                << e.value("dst", "") << "\n";
        }
    }
    return out.str();
}

std::string render_prompt(std::string_view tmpl, const PolicyRequest& request) {
    const std::pair<std::string_view, std::string> subs[] = {
        {"{{query}}", request.user_query},
        {"{{manifest}}", request.manifest.dump(2)},
        {"{{transcript}}", request.transcript.dump(2)},
        {"{{step}}", std::to_string(request.step)},
    };
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        bool replaced = false;
        for (const auto& [key, value] : subs) {
            if (tmpl.substr(i, key.size()) == key) {
                out += value;
                i += key.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) out += tmpl[i++];
    }
    return out;
}

}  // namespace kgx::agent
