// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Tolerances and time limits are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kgx/agent.hpp"
#include "kgx/error.hpp"
#include "kgx/gql.hpp"
#include "kgx/retrieval.hpp"
#include "kgx/tools.hpp"
#include "support/bm25_oracle.hpp"
#include "support/fixture.hpp"
#include "support/gql_gen.hpp"
#include "support/gql_oracle.hpp"
#include "support/random_graph.hpp"

using namespace kgx;
using json = nlohmann::json;

namespace {

constexpr double kBm25Tolerance = 1e-9;
constexpr double kRrfTolerance = 1e-12;

struct Failed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw Failed(what);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// --- label distribution ---------------------------------------------------

std::string table_distribution() {
    const std::vector<std::pair<NodeLabel, std::size_t>> published = {
        {NodeLabel::Author, 233728},   {NodeLabel::Keyword, 96588},     {NodeLabel::Publication, 38791},
        {NodeLabel::Software, 21617},  {NodeLabel::Concept, 13591},     {NodeLabel::Journal, 5563},
        {NodeLabel::Project, 3999},    {NodeLabel::Domain, 2595},       {NodeLabel::ResearchUnit, 299},
        {NodeLabel::Dataset, 240},     {NodeLabel::Region, 19}};
    const std::vector<double> expected = {56.0, 23.2, 9.3, 5.2, 3.3, 1.3, 1.0, 0.6, 0.1, 0.1, 0.0};

    LabelCounts counts{};
    for (auto [label, n] : published) counts[static_cast<std::size_t>(label)] = n;
    auto dist = label_distribution(counts);
    expect(dist.size() == expected.size(), "expected 11 labels");
    std::size_t total = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        expect(dist[i].label == published[i].first, "label order differs at " + std::to_string(i));
        expect(dist[i].percentage == expected[i],
               std::string(to_string(dist[i].label)) + " gave " + std::to_string(dist[i].percentage));
        total += dist[i].count;
    }
    expect(total == 417030, "total is " + std::to_string(total));
    return "total 417030";
}

// --- BM25 -------------------------------------------------------------------

std::string bm25_oracle() {
    std::mt19937_64 rng(20240601);
    auto corpus = testing::SyntheticCorpus::make(rng, 100, 400);
    retrieval::SparseIndex idx;
    for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
        idx.add(retrieval::make_chunk(testing::SyntheticCorpus::doc_id(i),
                                      testing::SyntheticCorpus::join(corpus.docs[i])));
    }
    testing::Bm25Oracle oracle{corpus.docs};
    double worst = 0.0;
    std::size_t pairs = 0;
    for (int q = 0; q < 200; ++q) {
        auto query = corpus.query(rng);
        for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
            double diff = std::abs(oracle.score(query, d) - idx.score(query, testing::SyntheticCorpus::doc_id(d)));
            worst = std::max(worst, diff);
            ++pairs;
        }
    }
    expect(worst <= kBm25Tolerance, "max deviation " + std::to_string(worst));
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu pairs, max deviation %.3g", pairs, worst);
    return buf;
}

// --- GQL --------------------------------------------------------------------

std::string gql_oracle() {
    std::size_t compared = 0, rows = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        auto g = testing::random_graph(rng, {.max_nodes = 200, .edge_factor = 1.5});
        expect(g.node_count() <= 200, "graph too large");
        testing::QueryGenerator gen(rng, {.max_patterns = 2,
                                          .max_edges_per_pattern = 2,
                                          .max_hops = 2,
                                          .allow_limit = false,
                                          .exotic_literals = true});
        for (int i = 0; i < 50; ++i) {
            auto text = gql::canonical_print(gen.generate());
            auto q = gql::parse(text);
            auto got = testing::rows_of(gql::execute(q, g, gql::ExecOptions{.max_bindings = 50'000'000}));
            std::sort(got.begin(), got.end());
            auto want = testing::oracle_rows(q, g);
            expect(got == want, "graph seed " + std::to_string(1000 + seed) + ": " + text);
            ++compared;
            rows += got.size();
        }
    }
    return std::to_string(compared) + " queries, " + std::to_string(rows) + " rows";
}

// --- RRF --------------------------------------------------------------------

std::vector<retrieval::RankedHit> random_list(std::mt19937_64& rng, std::vector<std::string> ids,
                                              retrieval::Channel channel) {
    std::shuffle(ids.begin(), ids.end(), rng);
    std::uniform_int_distribution<std::size_t> len(0, ids.size());
    ids.resize(len(rng));
    std::vector<retrieval::RankedHit> out;
    double score = 100.0;
    std::uniform_real_distribution<double> step(0.01, 5.0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.push_back({ids[i], score, i + 1, channel});
        score -= step(rng);
    }
    return out;
}

std::string rrf() {
    std::mt19937_64 rng(77);
    std::vector<std::string> universe;
    for (int i = 0; i < 60; ++i) universe.push_back("c" + std::to_string(i));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto s = random_list(rng, universe, retrieval::Channel::Sparse);
        auto d = random_list(rng, universe, retrieval::Channel::Dense);

        std::map<std::string, double> want;
        for (const auto& h : s) want[h.chunk_id] += 1.0 / (60.0 + static_cast<double>(h.rank));
        for (const auto& h : d) want[h.chunk_id] += 1.0 / (60.0 + static_cast<double>(h.rank));
        std::vector<std::pair<double, std::string>> order;
        for (const auto& [id, v] : want) order.emplace_back(-v, id);
        std::sort(order.begin(), order.end());

        auto fused = retrieval::fuse(s, d, universe.size());
        expect(fused.size() == want.size(), "trial " + std::to_string(trial) + ": size");
        for (std::size_t i = 0; i < fused.size(); ++i) {
            double diff = std::abs(fused[i].score - want[fused[i].chunk_id]);
            worst = std::max(worst, diff);
            expect(diff <= kRrfTolerance, "trial " + std::to_string(trial) + ": score of " + fused[i].chunk_id);
            expect(fused[i].chunk_id == order[i].second, "trial " + std::to_string(trial) + ": order");
        }

        // monotone rescaling of either channel leaves the fused list unchanged
        auto s2 = s;
        auto d2 = d;
        for (auto& h : s2) h.score = std::exp(h.score / 20.0) * 5.0 + 1.0;
        for (auto& h : d2) h.score = std::atan(h.score) * 1e-3 - 7.0;
        auto rescaled = retrieval::fuse(s2, d2, universe.size());
        expect(rescaled.size() == fused.size(), "rescaled size");
        for (std::size_t i = 0; i < fused.size(); ++i) {
            expect(rescaled[i].chunk_id == fused[i].chunk_id && rescaled[i].score == fused[i].score,
                   "trial " + std::to_string(trial) + ": rescaling changed the fused list");
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "100 pairs, max deviation %.3g", worst);
    return buf;
}

// --- scenario ---------------------------------------------------------------

std::vector<std::string> layer(const json& doc, std::size_t i, const std::string& label) {
    const auto& l = doc["chain"]["layers"][i];
    expect(l["label"] == label, "layer " + std::to_string(i) + " is " + l["label"].dump());
    std::vector<std::string> ids;
    for (const auto& n : l["nodes"]) ids.push_back(n["id"]);
    return ids;
}

std::string scenario() {
    auto dir = testing::fixture_dir();
    auto script = agent::load_script((dir / "climate_adaptation_script.json").string());
    auto golden = slurp(dir / "climate_adaptation_answer.json");

    std::string first_transcript, first_answer;
    for (int run = 0; run < 5; ++run) {
        testing::FixtureEngine eng;
        auto s = agent::run("cli", script.query, std::make_shared<agent::ScriptedPolicy>(script.actions),
                            eng.toolbox);
        expect(s.status == agent::Status::Done, "session did not finish");
        auto doc = agent::render_answer(s, eng.kb.graph);

        expect(doc["chain"]["layers"].size() == 4, "expected four layers");
        expect(layer(doc, 0, "Author") ==
                   std::vector<std::string>{"auth:bernard", "auth:dupont", "auth:leroy", "auth:martin"},
               "author layer");
        expect(layer(doc, 1, "Publication") == std::vector<std::string>{"pub:001", "pub:002", "pub:003"},
               "publication layer");
        expect(layer(doc, 2, "Project") == std::vector<std::string>{"ANR-CLIMADAPT", "H2020-AGROFOR"},
               "project layer");
        expect(layer(doc, 3, "Concept") ==
                   std::vector<std::string>{"c:agroforestry", "c:biodiversity", "c:climate-change",
                                            "c:crop-yield", "c:drought", "c:irrigation", "c:soil-carbon",
                                            "c:water-management"},
               "concept layer");
        std::map<std::string, int> edges;
        for (const auto& e : doc["chain"]["edges"]) ++edges[e["type"]];
        expect(edges == std::map<std::string, int>{{"AUTHORED", 6}, {"FUNDED_BY", 4}, {"DESCRIBES", 8}},
               "chain edge counts");
        expect(doc == json::parse(golden), "answer differs from the golden file");

        auto transcript = agent::to_json(s).dump();
        auto answer = doc.dump(2);
        if (run == 0) {
            first_transcript = transcript;
            first_answer = answer;
        } else {
            expect(transcript == first_transcript, "transcript bytes differ on run " + std::to_string(run + 1));
            expect(answer == first_answer, "answer bytes differ on run " + std::to_string(run + 1));
        }
    }
    return "5 runs, " + std::to_string(first_answer.size()) + " answer bytes";
}

// --- expert scoring ---------------------------------------------------------

std::vector<tools::ExpertScore> random_candidates(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> rel(0.0, 1.0);
    std::uniform_int_distribution<int> small(0, 20);
    std::uniform_int_distribution<int> cites(0, 500);
    std::vector<tools::ExpertScore> out;
    for (std::size_t i = 0; i < n; ++i) {
        tools::ExpertScore s;
        s.author_id = "a" + std::to_string(i);
        s.raw = {rel(rng), double(small(rng)), double(small(rng)), double(cites(rng)), double(small(rng)),
                 double(small(rng))};
        out.push_back(s);
    }
    return out;
}

std::size_t rank_of(const std::vector<tools::ExpertScore>& ranked, const std::string& id) {
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].author_id == id) return i;
    }
    throw Failed("author missing from ranking: " + id);
}

bool same_scores(const std::vector<tools::ExpertScore>& a, const std::vector<tools::ExpertScore>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].author_id != b[i].author_id || a[i].composite != b[i].composite ||
            a[i].normalized != b[i].normalized)
            return false;
    }
    return true;
}

std::string expert_properties() {
    tools::ExpertWeights weights;
    std::mt19937_64 rng(5);
    std::size_t monotone_checks = 0;
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<std::size_t> size(2, 12);
        auto cands = random_candidates(rng, size(rng));
        auto ranked = tools::score_experts(cands, weights);
        expect(same_scores(ranked, tools::score_experts(cands, weights)), "scoring is not deterministic");

        std::uniform_int_distribution<std::size_t> who(0, cands.size() - 1);
        std::uniform_int_distribution<int> bump(1, 1000);
        auto raised = cands;
        auto& target = raised[who(rng)];
        target.raw[3] += bump(rng);
        auto reranked = tools::score_experts(raised, weights);
        expect(rank_of(reranked, target.author_id) <= rank_of(ranked, target.author_id),
               "raising citations lowered " + target.author_id + " in trial " + std::to_string(trial));
        ++monotone_checks;
    }

    for (int trial = 0; trial < 50; ++trial) {
        auto one = tools::score_experts(random_candidates(rng, 1), weights);
        expect(one.size() == 1 && std::abs(one[0].composite - 0.5) < 1e-12, "single candidate is not 0.5");
    }

    weights.validate();
    auto rejects = [](std::array<double, tools::kMetricCount> w) {
        tools::ExpertWeights bad;
        bad.w = w;
        try {
            bad.validate();
        } catch (const Error& e) {
            return e.code() == ErrorCode::InvalidConfig;
        }
        return false;
    };
    expect(rejects({0.3, 0.15, 0.20, 0.20, 0.10, 0.10}), "weights summing to 1.05 accepted");
    expect(rejects({0.2, 0.15, 0.20, 0.20, 0.10, 0.10}), "weights summing to 0.95 accepted");
    expect(rejects({1.2, -0.2, 0, 0, 0, 0}), "negative weight accepted");
    bool toolbox_rejects = false;
    try {
        tools::ToolConfig cfg;
        cfg.weights.w = {0.5, 0.5, 0.5, 0, 0, 0};
        testing::FixtureEngine eng(cfg);
    } catch (const Error& e) {
        toolbox_rejects = e.code() == ErrorCode::InvalidConfig;
    }
    expect(toolbox_rejects, "toolbox accepted invalid weights");

    // end to end through the tool
    testing::FixtureEngine eng;
    json args{{"topic", "zoonoses"}, {"k", 10}, {"reference_year", 2025}};
    auto a = eng.toolbox.call({std::string(tools::kIdentifyExperts), args, "x"}).to_json().dump();
    auto b = eng.toolbox.call({std::string(tools::kIdentifyExperts), args, "x"}).to_json().dump();
    expect(a == b, "IdentifyExperts is not deterministic");
    return std::to_string(monotone_checks) + " monotonicity checks";
}

// --- ingest -----------------------------------------------------------------

std::string ingest_round_trip() {
    testing::ScratchDir dir("acceptance-ingest");
    ingest::IngestReport ra, rb;
    auto a = testing::fixture_kb(&ra);
    auto b = testing::fixture_kb(&rb);
    ingest::save(a, dir / "a.snap");
    ingest::save(b, dir / "b.snap");
    expect(slurp(dir / "a.snap") == slurp(dir / "b.snap"), "graph snapshots differ");
    expect(slurp(ingest::chunks_path(dir / "a.snap")) == slurp(ingest::chunks_path(dir / "b.snap")),
           "chunk snapshots differ");

    auto loaded = ingest::load(dir / "a.snap");
    ingest::save(loaded, dir / "c.snap");
    expect(slurp(dir / "a.snap") == slurp(dir / "c.snap"), "load then save changed the snapshot");

    for (const auto* r : {&ra, &rb}) {
        expect(r->node_counts == a.graph.label_counts(), "report node counts differ from the store");
        std::array<std::size_t, kEdgeTypeCount> edges{};
        for (EdgeIndex e = 0; e < a.graph.edge_count(); ++e) ++edges[static_cast<std::size_t>(a.graph.edge(e).type)];
        expect(r->edge_counts == edges, "report edge counts differ from the store");
        expect(r->total_nodes() == a.graph.node_count() && r->total_edges() == a.graph.edge_count(),
               "report totals differ from the store");
    }
    expect(loaded.graph.label_counts() == a.graph.label_counts(), "loaded counts differ");
    return std::to_string(a.graph.node_count()) + " nodes, " + std::to_string(a.graph.edge_count()) + " edges";
}

struct Criterion {
    const char* name;
    std::function<std::string()> check;
    double limit_seconds;  // 0 means no limit
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"label distribution reproduces the published percentages", table_distribution, 1.0},
        {"BM25 matches the formula oracle", bm25_oracle, 10.0},
        {"GQL executor matches the enumeration oracle", gql_oracle, 60.0},
        {"RRF scores and rescaling invariance", rrf, 0.0},
        {"multi-hop scenario chain is exact and stable", scenario, 5.0},
        {"expert scoring properties", expert_properties, 5.0},
        {"ingest round trip is bytewise identical", ingest_round_trip, 0.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.check();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ok && c.limit_seconds > 0 && seconds >= c.limit_seconds) {
            ok = false;
            detail += "; over the time limit";
        }
        char timing[64];
        if (c.limit_seconds > 0) {
            std::snprintf(timing, sizeof timing, "%.3fs, limit %.0fs", seconds, c.limit_seconds);
        } else {
            std::snprintf(timing, sizeof timing, "%.3fs", seconds);
        }
        std::printf("%s  %s (%s) [%s]\n", ok ? "PASS" : "FAIL", c.name, detail.c_str(), timing);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
