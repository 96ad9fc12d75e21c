#pragma once
// Bounded call/observe loop. A policy reads the transcript and answers with
// one action in a strict JSON notation; the engine dispatches tool calls and
// appends their results until a final answer, the step budget or a failure.

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgx/graph.hpp"
#include "kgx/tools.hpp"

namespace kgx::agent {

using json = nlohmann::json;

inline constexpr std::string_view kTranscriptFormat = "TRX1";

enum class Status { Running, Done, BudgetExhausted, Failed };
std::string_view to_string(Status s);
std::optional<Status> parse_status(std::string_view text);

enum class EventType { PolicyThought, ToolCall, ToolResult, FinalAnswer };
std::string_view to_string(EventType t);

struct Claim {
    std::string text;
    std::vector<std::string> call_ids;
};

struct FinalAnswer {
    std::string text;
    std::vector<Claim> evidence;
    bool incomplete = false;
};

struct Event {
    EventType type = EventType::PolicyThought;
    std::size_t step = 0;
    std::string text;          // PolicyThought
    tools::ToolCall call;      // ToolCall
    json rejected;             // ToolCall: the offending action when malformed, else null
    tools::ToolResult result;  // ToolResult
    FinalAnswer answer;        // FinalAnswer
};

struct Failure {
    std::string code;
    std::string message;
};

struct Session {
    std::string session_id;
    std::string user_query;
    std::vector<Event> transcript;
    std::size_t step_count = 0;
    std::size_t max_steps = 8;
    Status status = Status::Running;
    std::optional<Failure> failure;

    bool terminal() const { return status != Status::Running; }
    const FinalAnswer* final_answer() const;
    // Index of the ToolCall event with this id, if any.
    std::optional<std::size_t> find_call(std::string_view call_id) const;
};

// TRX1 serialisation. Elapsed times are left out unless asked for, so two runs
// of a scripted policy serialise to the same bytes.
json to_json(const Session& s, bool with_elapsed = false);
Session session_from_json(const json& j);  // throws Error(InvalidArgument)

struct AgentConfig {
    std::size_t max_steps = 8;
    std::chrono::milliseconds policy_timeout{60'000};
    std::size_t result_char_budget = 8'000;  // per tool result, in policy requests

    void validate() const;  // throws InvalidConfig
};

struct PolicyRequest {
    std::string session_id;
    std::string user_query;
    std::size_t step = 1;  // the step being decided, 1-based
    json transcript;       // events, tool payloads cut to the char budget
    json manifest;
};

json to_json(const PolicyRequest& r);

// Builds what a policy sees before `step`.
PolicyRequest make_request(const Session& s, const AgentConfig& config);

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string id() const = 0;
    // Returns one action. May throw Error(MalformedAction) for unusable
    // output; any other exception fails the session.
    virtual json decide(const PolicyRequest& request) = 0;
};

// Replays a fixed action list: the action for step i is actions[i-1].
class ScriptedPolicy : public Policy {
public:
    explicit ScriptedPolicy(std::vector<json> actions) : actions_(std::move(actions)) {}
    std::string id() const override { return "scripted"; }
    json decide(const PolicyRequest& request) override;
    const std::vector<json>& actions() const { return actions_; }

private:
    std::vector<json> actions_;
};

struct Script {
    std::string query;  // may be empty
    std::vector<json> actions;
};

// {"query": "...", "actions": [...]}; throws FileUnreadable / InvalidArgument.
Script load_script(const std::string& path);

struct ParsedAction {
    std::string thought;
    std::optional<tools::ToolCall> call;  // call_id left empty
    std::optional<FinalAnswer> answer;
};

// Action notation:
//   {"action": "tool_call", "tool": str, "args": {...}, "thought"?: str}
//   {"action": "final_answer", "text": str,
//    "evidence": [{"claim": str, "call_ids": [str, ...]}], "thought"?: str}
// Evidence must cite tool calls already in the transcript. Throws
// Error(MalformedAction).
ParsedAction parse_action(const json& action, const Session& s);

// Throws InvalidArgument for a blank query.
Session start_session(std::string session_id, std::string user_query, const AgentConfig& config);

// Advances a running session by one policy action. Throws SessionClosed when
// the session is already terminal; every other failure is recorded.
void step(Session& s, const std::shared_ptr<Policy>& policy, const tools::Toolbox& toolbox,
          const AgentConfig& config);

Session run(std::string session_id, std::string user_query, const std::shared_ptr<Policy>& policy,
            const tools::Toolbox& toolbox, const AgentConfig& config = {});

struct ReplayReport {
    std::size_t replayed = 0;
    std::vector<std::string> mismatched;  // call ids
    bool ok() const { return mismatched.empty(); }
};

// Re-executes every dispatched call and compares against the recorded result.
ReplayReport replay(const Session& s, const tools::Toolbox& toolbox);

// Answer document: text, status, an evidence table (claim, call, row refs)
// and the chain of nodes and edges the cited results touched. Throws
// InvalidArgument for a running session.
json render_answer(const Session& s, const PropertyGraph& graph);
std::string render_text(const json& document);

// Replaces {{query}}, {{manifest}}, {{transcript}} and {{step}}.
std::string render_prompt(std::string_view tmpl, const PolicyRequest& request);

}  // namespace kgx::agent
