#include <doctest.h>

#include <random>
#include <set>

#include "kgx/error.hpp"
#include "kgx/tools.hpp"
#include "support/fixture.hpp"
#include "support/gql_oracle.hpp"
#include "support/retrieval_oracle.hpp"

using namespace kgx;
using namespace kgx::tools;
using kgx::testing::FixtureEngine;

namespace {

ToolResult run(const Toolbox& tb, std::string_view tool, json args, std::string id = "c1") {
    return tb.call(ToolCall{std::string(tool), std::move(args), std::move(id)});
}

std::set<std::vector<std::string>> node_rows(const json& payload) {
    std::set<std::vector<std::string>> out;
    for (const auto& row : payload["rows"]) {
        std::vector<std::string> r;
        for (const auto& cell : row) r.push_back(cell["id"].get<std::string>());
        out.insert(r);
    }
    return out;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no kgx::Error thrown");
    return ErrorCode::Timeout;
}

// A toolbox over an arbitrary graph with a one-chunk index.
struct SmallEngine {
    PropertyGraph graph;
    std::unique_ptr<retrieval::HybridIndex> index;
    retrieval::OverlapReranker reranker;
    std::unique_ptr<Toolbox> toolbox;

    void finish(ToolConfig config = {}) {
        index = std::make_unique<retrieval::HybridIndex>(
            std::vector<retrieval::Chunk>{retrieval::make_chunk("x", "placeholder")},
            std::make_shared<retrieval::HashingEmbedder>());
        toolbox = std::make_unique<Toolbox>(graph, *index, reranker, config);
    }
};

}  // namespace

TEST_CASE("manifest and argument validation") {
    auto m = manifest();
    REQUIRE(m.size() == 4);
    std::set<std::string> names;
    for (const auto& t : m) names.insert(t["name"].get<std::string>());
    CHECK(names == std::set<std::string>{"SearchGraph", "SearchPublications",
                                         "SearchConceptsKeywords", "IdentifyExperts"});
    const auto& pubs = m[1];
    CHECK(pubs["name"] == "SearchPublications");
    CHECK(pubs["arguments"][1]["name"] == "k");
    CHECK(pubs["arguments"][1]["minimum"] == 1);
    CHECK(pubs["arguments"][1]["maximum"] == 50);
    CHECK(pubs["arguments"][1]["required"] == false);

    auto v = validate_args("SearchPublications", {{"query", "soil"}});
    CHECK(v["k"] == 10);
    auto bad = [](std::string_view tool, json args) {
        return code_of([&] { validate_args(tool, args); });
    };
    CHECK(bad("SearchPublications", {{"query", "soil"}, {"k", 0}}) == ErrorCode::InvalidArgument);
    CHECK(bad("SearchPublications", {{"query", "soil"}, {"k", 51}}) == ErrorCode::InvalidArgument);
    CHECK(bad("SearchPublications", {{"query", "soil"}, {"k", 2.5}}) == ErrorCode::InvalidArgument);
    CHECK(bad("SearchPublications", {{"query", 3}}) == ErrorCode::InvalidArgument);
    CHECK(bad("SearchPublications", {{"query", "  "}}) == ErrorCode::InvalidArgument);
    CHECK(bad("SearchPublications", json::object()) == ErrorCode::InvalidArgument);
    CHECK(bad("SearchPublications", {{"query", "x"}, {"extra", 1}}) == ErrorCode::InvalidArgument);
    CHECK(bad("SearchPublications", json::array()) == ErrorCode::InvalidArgument);
    CHECK(bad("IdentifyExperts", {{"topic", "x"}}) == ErrorCode::InvalidArgument);
    CHECK(bad("DeleteEverything", json::object()) == ErrorCode::UnknownTool);
}

TEST_CASE("SearchGraph on the fixture") {
    FixtureEngine eng;
    const std::string q =
        "MATCH (a:Author)-[:AUTHORED]->(p:Publication)-[:FUNDED_BY]->(j:Project) "
        "WHERE p.title CONTAINS 'climate change adaptation' RETURN a, p, j";
    auto r = run(eng.toolbox, kSearchGraph, {{"query", q}});
    REQUIRE(r.ok);
    CHECK_FALSE(r.truncated);
    CHECK(r.payload["columns"] == json::array({"a", "p", "j"}));

    // hand-enumerated from data/fixture
    std::set<std::vector<std::string>> expected = {
        {"auth:dupont", "pub:001", "ANR-CLIMADAPT"},  {"auth:martin", "pub:001", "ANR-CLIMADAPT"},
        {"auth:martin", "pub:002", "ANR-CLIMADAPT"},  {"auth:martin", "pub:002", "H2020-AGROFOR"},
        {"auth:bernard", "pub:002", "ANR-CLIMADAPT"}, {"auth:bernard", "pub:002", "H2020-AGROFOR"},
        {"auth:bernard", "pub:003", "H2020-AGROFOR"}, {"auth:leroy", "pub:003", "H2020-AGROFOR"},
    };
    CHECK(node_rows(r.payload) == expected);
    CHECK(r.payload["row_count"] == 8);

    // and the naive enumeration oracle agrees
    auto oracle = kgx::testing::oracle_rows(gql::parse(q), eng.kb.graph);
    std::set<std::vector<std::string>> from_oracle;
    for (auto row : oracle) {
        for (auto& cell : row) cell = cell.substr(5);  // strip "node:"
        from_oracle.insert(row);
    }
    CHECK(from_oracle == expected);

    const auto& cell = r.payload["rows"][0][0];
    CHECK(cell["label"] == "Author");
    CHECK(cell["props"].contains("name"));
}

TEST_CASE("SearchGraph maps query errors to results") {
    FixtureEngine eng;
    auto syntax = run(eng.toolbox, kSearchGraph, {{"query", "MATCH (a:Author RETURN a"}});
    CHECK_FALSE(syntax.ok);
    CHECK(syntax.error_code == "SYNTAX");
    CHECK(syntax.payload.is_null());
    CHECK(run(eng.toolbox, kSearchGraph, {{"query", "MATCH (a:Wizard) RETURN a"}}).error_code == "SCHEMA");
    CHECK(run(eng.toolbox, kSearchGraph, {{"query", "MATCH (a) RETURN b"}}).error_code == "UNBOUND");

    ToolConfig tight;
    tight.exec.max_bindings = 10;
    FixtureEngine small(tight);
    CHECK(run(small.toolbox, kSearchGraph, {{"query", "MATCH (a), (b) RETURN a, b"}}).error_code ==
          "BUDGET");
}

TEST_CASE("SearchGraph row budget") {
    SmallEngine eng;
    for (int i = 0; i < 100; ++i) eng.graph.add_node(NodeLabel::Author, "a" + std::to_string(i));
    eng.finish();
    auto r = run(*eng.toolbox, kSearchGraph, {{"query", "MATCH (a:Author), (b:Author) RETURN a, b"}});
    REQUIRE(r.ok);
    CHECK(r.truncated);
    CHECK(r.payload["rows"].size() == 500);
    CHECK(r.payload["row_count"] == 10000);
    CHECK(r.to_json()["truncated"] == true);
}

TEST_CASE("SearchPublications matches the pipeline oracle") {
    FixtureEngine eng;
    std::vector<std::string> ids, texts;
    for (const auto& c : eng.kb.chunks) {
        ids.push_back(c.chunk_id);
        texts.push_back(c.text);
    }
    for (std::string q : {"climate change adaptation strategies", "zoonoses", "soil carbon",
                          "avian influenza in wild birds", "cheese", "drought crop yields"}) {
        CAPTURE(q);
        auto r = run(eng.toolbox, kSearchPublications, {{"query", q}, {"k", 5}});
        REQUIRE(r.ok);
        auto expected = kgx::testing::hybrid_oracle(ids, texts, q, 5, 50);
        const auto& hits = r.payload["hits"];
        REQUIRE(hits.size() == expected.size());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i]["id"] == expected[i].id);
            CHECK(std::abs(hits[i]["score"].get<double>() - expected[i].score) < 1e-12);
            CHECK(hits[i]["rank"] == i + 1);
        }
    }

    auto r = run(eng.toolbox, kSearchPublications, {{"query", "climate change adaptation strategies"}, {"k", 3}});
    const auto& top = r.payload["hits"][0];
    CHECK(top["id"] == "pub:001");
    CHECK(top["title"] == "Climate change adaptation strategies for smallholder farming systems");
    CHECK(top["authors"].size() == 2);
    CHECK(top["year"] == 2021);
    CHECK(r.payload["weak_results"] == false);
    std::string excerpt = top["excerpt"];
    CHECK(eng.index.chunk("pub:001")->text.rfind(excerpt, 0) == 0);
    CHECK(excerpt.size() <= 300);

    auto weak = run(eng.toolbox, kSearchPublications, {{"query", "qwertyuiop zxcvbnm"}});
    REQUIRE(weak.ok);
    CHECK(weak.payload["weak_results"] == true);

    auto zero = run(eng.toolbox, kSearchPublications, {{"query", "soil"}, {"k", 0}});
    CHECK_FALSE(zero.ok);
    CHECK(zero.error_code == "ARG_SCHEMA");
}

TEST_CASE("excerpt is cut on code points") {
    CHECK(utf8_prefix("abc", 2) == "ab");
    CHECK(utf8_prefix("été", 2) == "ét");
    CHECK(utf8_prefix("", 5).empty());
    std::string long_text(400, 'x');
    CHECK(utf8_prefix(long_text, 300).size() == 300);
}

TEST_CASE("SearchConceptsKeywords") {
    CHECK(label_match_score({"zoonoses"}, "Zoonoses") == 1.0);
    CHECK(label_match_score({"climate"}, "climate change") == 0.8);
    CHECK(label_match_score({"change"}, "climate change") == doctest::Approx(0.5));
    CHECK(label_match_score({"cheese"}, "climate change") == 0.0);

    FixtureEngine eng;
    auto r = run(eng.toolbox, kSearchConceptsKeywords, {{"query", "zoonoses"}});
    REQUIRE(r.ok);
    const auto& m = r.payload["matches"];
    REQUIRE(!m.empty());
    CHECK(m[0]["id"] == "c:zoonoses");
    CHECK(m[0]["score"] == 1.0);
    CHECK(m[0]["kind"] == "Concept");

    // alternate label matches with the same score
    auto alt = run(eng.toolbox, kSearchConceptsKeywords, {{"query", "Soil organic carbon"}});
    CHECK(alt.payload["matches"][0]["id"] == "c:soil-carbon");
    CHECK(alt.payload["matches"][0]["score"] == 1.0);

    // concept and keyword 'agroforestry' tie; the concept comes first
    auto tie = run(eng.toolbox, kSearchConceptsKeywords, {{"query", "agroforestry"}});
    const auto& t = tie.payload["matches"];
    REQUIRE(t.size() >= 2);
    CHECK(t[0]["kind"] == "Concept");
    CHECK(t[1]["kind"] == "Keyword");
    CHECK(t[1]["id"] == "kw:agroforestry");
    CHECK(t[0]["score"] == t[1]["score"]);

    SmallEngine small;
    small.graph.add_node(NodeLabel::Keyword, "kw:climate-change", {{"label", std::string("climate change")}});
    small.finish();
    auto p = run(*small.toolbox, kSearchConceptsKeywords, {{"query", "climate"}});
    REQUIRE(p.payload["matches"].size() == 1);
    CHECK(p.payload["matches"][0]["score"] == 0.8);

    auto none = run(eng.toolbox, kSearchConceptsKeywords, {{"query", "quasar"}});
    CHECK(none.ok);
    CHECK(none.payload["matches"].empty());
    CHECK(run(eng.toolbox, kSearchConceptsKeywords, {{"query", "soil"}, {"k", 1}}).payload["matches"].size() == 1);
}

TEST_CASE("expert scoring function") {
    SUBCASE("single candidate") {
        ExpertScore s;
        s.author_id = "a";
        s.raw = {0.7, 3, 4, 100, 6, 2};
        auto out = score_experts({s}, ExpertWeights{});
        REQUIRE(out.size() == 1);
        for (double n : out[0].normalized) CHECK(n == 0.5);
        CHECK(out[0].composite == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("two authors differing only in citations") {
        ExpertScore a, b;
        a.author_id = "a";
        b.author_id = "b";
        a.raw = {0.5, 1, 2, 10, 3, 1};
        b.raw = {0.5, 1, 2, 20, 3, 1};
        auto out = score_experts({a, b}, ExpertWeights{});
        CHECK(out[0].author_id == "b");
        // 0.8 * 0.5 from the constant metrics, plus 0.2 * n4
        CHECK(out[0].composite == doctest::Approx(0.6));
        CHECK(out[1].composite == doctest::Approx(0.4));
    }
    SUBCASE("recency is inverted") {
        ExpertScore a, b;
        a.author_id = "old";
        b.author_id = "new";
        a.raw = {0, 0, 0, 0, 0, 10};
        b.raw = {0, 0, 0, 0, 0, 1};
        auto out = score_experts({a, b}, ExpertWeights{});
        CHECK(out[0].author_id == "new");
        CHECK(out[0].normalized[5] == 1.0);
        CHECK(out[1].normalized[5] == 0.0);
    }
    SUBCASE("ties break on author id") {
        ExpertScore a, b;
        a.author_id = "zed";
        b.author_id = "amy";
        auto out = score_experts({a, b}, ExpertWeights{});
        CHECK(out[0].author_id == "amy");
    }
    SUBCASE("weights must sum to one") {
        ExpertWeights w;
        w.w = {0.3, 0.15, 0.20, 0.20, 0.10, 0.10};
        CHECK(code_of([&] { w.validate(); }) == ErrorCode::InvalidConfig);
        w.w = {1.2, -0.2, 0, 0, 0, 0};
        CHECK(code_of([&] { w.validate(); }) == ErrorCode::InvalidConfig);
        ToolConfig cfg;
        cfg.weights.w = {0.5, 0.5, 0.5, 0, 0, 0};
        CHECK(code_of([&] { FixtureEngine e(cfg); }) == ErrorCode::InvalidConfig);
        ExpertWeights{}.validate();
    }
}

TEST_CASE("IdentifyExperts on the fixture") {
    FixtureEngine eng;
    json args{{"topic", "zoonoses"}, {"k", 10}, {"reference_year", 2025}};
    auto r = run(eng.toolbox, kIdentifyExperts, args);
    REQUIRE(r.ok);
    const auto& experts = r.payload["experts"];
    // relevant set {pub:004, pub:007}; composites evaluated by hand
    REQUIRE(experts.size() == 3);
    CHECK(experts[0]["author_id"] == "auth:petit");
    CHECK(experts[1]["author_id"] == "auth:moreau");
    CHECK(experts[2]["author_id"] == "auth:dupont");
    CHECK(experts[0]["composite"].get<double>() == doctest::Approx(0.875));
    CHECK(experts[1]["composite"].get<double>() == doctest::Approx(0.125 + 0.2 * 28.0 / 31.0));
    CHECK(experts[2]["composite"].get<double>() == doctest::Approx(0.225));
    CHECK(experts[0]["metrics"]["citation_sum"] == 34.0);
    CHECK(experts[0]["metrics"]["activity_span_years"] == 5.0);
    CHECK(r.payload["top_rank_cutoff"] == 10);
    CHECK(r.payload["relevant_publications"] == 2);

    // witness: every expert authored a retrieved publication
    for (const auto& e : experts) {
        auto a = *eng.kb.graph.find(e["author_id"].get<std::string>());
        std::set<std::string> authored;
        for (auto ei : eng.kb.graph.edges_of(a, Direction::Out, EdgeType::Authored)) {
            authored.insert(eng.kb.graph.node(eng.kb.graph.edge(ei).dst).id);
        }
        for (const auto& p : e["publications"]) CHECK(authored.count(p.get<std::string>()) == 1);
        CHECK(!e["publications"].empty());
    }

    auto again = run(eng.toolbox, kIdentifyExperts, args, "c1");
    CHECK(again.to_json().dump() == r.to_json().dump());

    auto k1 = run(eng.toolbox, kIdentifyExperts, {{"topic", "zoonoses"}, {"k", 1}, {"reference_year", 2025}});
    CHECK(k1.payload["experts"].size() == 1);

    auto none = run(eng.toolbox, kIdentifyExperts,
                    {{"topic", "quantum chromodynamics"}, {"reference_year", 2025}});
    CHECK_FALSE(none.ok);
    CHECK(none.error_code == "NO_RELEVANT_PUBLICATIONS");
}

TEST_CASE("tool calls never throw") {
    FixtureEngine eng;
    std::mt19937_64 rng(5);
    std::vector<json> values = {json(nullptr), json(1), json(-4), json(3.5), json("x"), json(""),
                                json::array(), json::object(), json(true), json(1000000)};
    std::vector<std::string> keys = {"query", "k", "topic", "reference_year", "bogus"};
    std::vector<std::string> tools = {"SearchGraph", "SearchPublications", "SearchConceptsKeywords",
                                      "IdentifyExperts", "Nope"};
    for (int i = 0; i < 300; ++i) {
        json args = json::object();
        int n = static_cast<int>(rng() % 4);
        for (int j = 0; j < n; ++j) args[keys[rng() % keys.size()]] = values[rng() % values.size()];
        auto tool = tools[rng() % tools.size()];
        ToolResult r;
        CHECK_NOTHROW(r = run(eng.toolbox, tool, args));
        if (!r.ok) CHECK(!r.error_code.empty());
    }
}

TEST_CASE("tool result serialisation") {
    ToolResult r;
    r.call_id = "call-1";
    r.tool_name = "SearchGraph";
    r.payload = {{"rows", json::array()}};
    r.elapsed = std::chrono::milliseconds(12);
    auto j = r.to_json();
    CHECK_FALSE(j.contains("elapsed_ms"));
    CHECK(r.to_json(true)["elapsed_ms"] == 12.0);
    auto back = ToolResult::from_json(j);
    CHECK(back.to_json().dump() == j.dump());

    ToolResult e;
    e.call_id = "c";
    e.tool_name = "X";
    e.ok = false;
    e.error_code = "UNKNOWN_TOOL";
    e.error_message = "unknown tool 'X'";
    auto ej = e.to_json();
    CHECK(ej["status"] == "error");
    CHECK(ej["error"]["code"] == "UNKNOWN_TOOL");
    CHECK(ToolResult::from_json(ej).to_json().dump() == ej.dump());
}
