#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kgx/agent.hpp"
#include "support/fixture.hpp"

using json = nlohmann::json;
using kgx::testing::ScratchDir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') {
            q += "'\\''";
        } else {
            q += c;
        }
    }
    return q + "'";
}

// Runs the CLI with `args` (already shell-quoted) and captures both streams.
Run kgx_cli(const ScratchDir& dir, const std::string& args, const std::string& env = "") {
    auto out = dir / "stdout.txt";
    auto err = dir / "stderr.txt";
    std::string cmd = env + " " + quote(KGX_CLI) + " " + args + " >" + quote(out.string()) + " 2>" +
                      quote(err.string());
    int status = std::system(cmd.c_str());
    Run r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string fixture(const std::string& name) {
    return quote((kgx::testing::fixture_dir() / name).string());
}

std::string ingest_args(const fs::path& out) {
    return "ingest --corpus " + fixture("corpus.jsonl") + " --thesaurus " + fixture("thesaurus.jsonl") +
           " --projects " + fixture("projects.jsonl") + " --out " + quote(out.string());
}

std::size_t count_lines_starting(const std::string& text, const std::string& prefix) {
    std::istringstream in(text);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind(prefix, 0) == 0) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("ingest writes a snapshot once") {
    ScratchDir dir("cli-ingest");
    auto snap = dir / "kb.snap";
    auto first = kgx_cli(dir, ingest_args(snap));
    CHECK(first.exit_code == 0);
    CHECK(first.out.find("Total nodes            66") != std::string::npos);
    CHECK(first.out.find("Total edges           109") != std::string::npos);
    REQUIRE(fs::exists(snap));
    auto bytes = slurp(snap);

    auto again = kgx_cli(dir, ingest_args(snap));
    CHECK(again.exit_code == 1);
    CHECK(again.err.find("--force") != std::string::npos);
    CHECK(slurp(snap) == bytes);

    auto forced = kgx_cli(dir, ingest_args(snap) + " --force");
    CHECK(forced.exit_code == 0);
    CHECK(slurp(snap) == bytes);

    auto missing = kgx_cli(dir, "ingest --corpus " + fixture("corpus.jsonl") + " --thesaurus " +
                                    quote((dir / "nope.jsonl").string()) + " --out " +
                                    quote((dir / "other.snap").string()));
    CHECK(missing.exit_code == 1);
    CHECK(missing.err.find("nope.jsonl") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "other.snap"));

    CHECK(kgx_cli(dir, "ingest --corpus x").exit_code == 2);
}

TEST_CASE("ask reproduces the golden answer") {
    ScratchDir dir("cli-ask");
    auto snap = dir / "kb.snap";
    REQUIRE(kgx_cli(dir, ingest_args(snap)).exit_code == 0);
    std::string base = "ask --snapshot " + quote(snap.string()) + " --policy " +
                       quote("scripted:" + (kgx::testing::fixture_dir() / "climate_adaptation_script.json").string());

    auto golden = json::parse(slurp(kgx::testing::fixture_dir() / "climate_adaptation_answer.json"));
    auto as_json = kgx_cli(dir, base + " --json");
    CHECK(as_json.exit_code == 0);
    CHECK(json::parse(as_json.out) == golden);

    auto as_text = kgx_cli(dir, base + " --trace");
    CHECK(as_text.exit_code == 0);
    CHECK(count_lines_starting(as_text.out, "[trace] call-") == 3);
    CHECK(as_text.out.find(kgx::agent::render_text(golden)) != std::string::npos);

    auto bad_policy = kgx_cli(dir, "ask --snapshot " + quote(snap.string()) + " --policy oracle:x 'q'");
    CHECK(bad_policy.exit_code == 2);
    CHECK(kgx_cli(dir, "ask --snapshot " + quote(snap.string()) + " 'q'").exit_code == 2);
    CHECK(kgx_cli(dir, base + " --max-steps 0").exit_code == 2);

    // a script that runs dry fails the session
    {
        std::ofstream(dir / "short.json") << R"({"query": "q", "actions": []})";
    }
    auto failed = kgx_cli(dir, "ask --snapshot " + quote(snap.string()) + " --policy " +
                                   quote("scripted:" + (dir / "short.json").string()));
    CHECK(failed.exit_code == 1);
    CHECK(failed.err.find("POLICY_FAILURE") != std::string::npos);

    auto budget = kgx_cli(dir, base + " --max-steps 2 --json");
    CHECK(budget.exit_code == 0);
    auto partial = json::parse(budget.out);
    CHECK(partial["status"] == "budget_exhausted");
    CHECK(partial["incomplete"] == true);
}

TEST_CASE("tool, stats, config and usage errors") {
    ScratchDir dir("cli-misc");
    auto snap = dir / "kb.snap";
    REQUIRE(kgx_cli(dir, ingest_args(snap)).exit_code == 0);
    std::string s = " --snapshot " + quote(snap.string());

    auto ok = kgx_cli(dir, "tool SearchConceptsKeywords --args '{\"query\": \"zoonoses\"}'" + s);
    CHECK(ok.exit_code == 0);
    CHECK(json::parse(ok.out)["payload"]["matches"][0]["id"] == "c:zoonoses");

    auto bad_args = kgx_cli(dir, "tool SearchPublications --args '{\"query\": \"x\", \"k\": 0}'" + s);
    CHECK(bad_args.exit_code == 1);
    CHECK(json::parse(bad_args.out)["error"]["code"] == "ARG_SCHEMA");
    CHECK(kgx_cli(dir, "tool SearchPublications --args '{oops'" + s).exit_code == 2);
    CHECK(kgx_cli(dir, "tool Teleport" + s).exit_code == 1);

    auto stats = kgx_cli(dir, "stats" + s);
    CHECK(stats.exit_code == 0);
    CHECK(stats.out.find("Total nodes            66") != std::string::npos);

    {
        std::ofstream(dir / "kgx.json") << R"({"data": {"snapshot": "kb.snap"}})";
        std::ofstream(dir / "broken.json") << R"({"agent": {"max_steps": -1}})";
    }
    auto via_env = kgx_cli(dir, "stats", "KGX_CONFIG=" + quote((dir / "kgx.json").string()));
    CHECK(via_env.exit_code == 0);
    auto broken = kgx_cli(dir, "stats --config " + quote((dir / "broken.json").string()));
    CHECK(broken.exit_code == 1);
    CHECK(broken.err.find("'agent.max_steps'") != std::string::npos);

    auto no_snapshot = kgx_cli(dir, "stats --snapshot " + quote((dir / "absent.snap").string()));
    CHECK(no_snapshot.exit_code == 1);

    CHECK(kgx_cli(dir, "").exit_code == 2);
    CHECK(kgx_cli(dir, "frobnicate").exit_code == 2);
    CHECK(kgx_cli(dir, "serve --port 70000").exit_code == 2);
}
