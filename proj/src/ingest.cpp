#include "kgx/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kgx/binary_io.hpp"
#include "kgx/error.hpp"

namespace kgx::ingest {

using nlohmann::json;

namespace {

constexpr std::string_view kChunksMagic = "KGC1";

[[noreturn]] void bad_field(std::string_view field, std::string_view what) {
    throw Error(ErrorCode::InvalidRecord,
                "field '" + std::string(field) + "' " + std::string(what));
}

const json* member(const json& obj, std::string_view key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string required_string(const json& obj, std::string_view key, bool allow_empty = false) {
    const json* v = member(obj, key);
    if (v == nullptr) bad_field(key, "is missing");
    if (!v->is_string()) bad_field(key, "must be a string");
    auto s = v->get<std::string>();
    if (!allow_empty && s.empty()) bad_field(key, "must not be empty");
    return s;
}

std::optional<std::string> optional_string(const json& obj, std::string_view key) {
    const json* v = member(obj, key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) bad_field(key, "must be a string");
    return v->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, std::string_view key) {
    std::vector<std::string> out;
    const json* v = member(obj, key);
    if (v == nullptr) return out;
    if (!v->is_array()) bad_field(key, "must be a list of strings");
    for (const auto& item : *v) {
        if (!item.is_string() || item.get_ref<const std::string&>().empty()) {
            bad_field(key, "must contain only non-empty strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

json parse_object(std::string_view line) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidRecord, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw Error(ErrorCode::InvalidRecord, "line is not a JSON object");
    return obj;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read '" + path.string() + "'");
    return in;
}

bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string join_tokens(std::string_view text, char sep) {
    std::string out;
    for (const auto& t : retrieval::tokenize(text)) {
        if (!out.empty()) out += sep;
        out += t;
    }
    return out;
}

bool phrase_at(const std::vector<std::string>& text, std::size_t pos,
               const std::vector<std::string>& phrase) {
    if (pos + phrase.size() > text.size()) return false;
    return std::equal(phrase.begin(), phrase.end(), text.begin() + static_cast<std::ptrdiff_t>(pos));
}

bool contains_phrase(const std::vector<std::string>& text,
                     const std::vector<std::string>& phrase) {
    if (phrase.empty()) return false;
    for (std::size_t i = 0; i + phrase.size() <= text.size(); ++i) {
        if (phrase_at(text, i, phrase)) return true;
    }
    return false;
}

std::string domain_id_checked(const Thesaurus& th, const std::string& concept_id) {
    const auto* e = th.find(concept_id);
    if (e == nullptr || e->is_domain) {
        throw Error(ErrorCode::InvalidRecord, "unknown concept '" + concept_id + "'");
    }
    return th.root_domain(concept_id);
}

// One record's worth of graph mutations, checked before anything is applied.
struct Plan {
    struct PlannedNode {
        NodeLabel label;
        std::string id;
        PropMap props;
    };
    struct PlannedEdge {
        std::string src;
        std::string dst;
        EdgeType type;
    };
    std::vector<PlannedNode> nodes;
    std::vector<PlannedEdge> edges;

    void node(NodeLabel label, std::string id, PropMap props = {}) {
        nodes.push_back({label, std::move(id), std::move(props)});
    }
    void edge(std::string src, std::string dst, EdgeType type) {
        edges.push_back({std::move(src), std::move(dst), type});
    }
};

class Populator {
public:
    Populator(KnowledgeBase& kb, IngestReport& report) : kb_(kb), report_(report) {}

    void check(const Plan& plan) const {
        std::unordered_map<std::string_view, NodeLabel> planned;
        for (const auto& n : plan.nodes) {
            auto [it, inserted] = planned.emplace(n.id, n.label);
            if (!inserted && it->second != n.label) conflict(n.id, it->second, n.label);
            if (const Node* existing = kb_.graph.find_node(n.id)) {
                if (existing->label != n.label) conflict(n.id, existing->label, n.label);
            }
        }
    }

    void apply(const Plan& plan) {
        for (const auto& n : plan.nodes) {
            if (kb_.graph.find(n.id)) continue;
            kb_.graph.add_node(n.label, n.id, n.props);
            ++report_.node_counts[static_cast<std::size_t>(n.label)];
        }
        for (const auto& e : plan.edges) {
            std::size_t before = kb_.graph.edge_count();
            kb_.graph.add_edge(e.src, e.dst, e.type);
            if (kb_.graph.edge_count() != before) {
                ++report_.edge_counts[static_cast<std::size_t>(e.type)];
            }
        }
    }

private:
    [[noreturn]] static void conflict(const std::string& id, NodeLabel have, NodeLabel want) {
        throw Error(ErrorCode::DuplicateId, "id '" + id + "' is used by a " +
                                                std::string(to_string(have)) + " node, not a " +
                                                std::string(to_string(want)) + " node");
    }

    KnowledgeBase& kb_;
    IngestReport& report_;
};

Plan plan_thesaurus(const Thesaurus& th) {
    Plan plan;
    for (const auto& e : th.entries()) {
        PropMap props{{"label", e.preferred_label}};
        if (!e.alternate_labels.empty()) props.emplace("alt_labels", e.alternate_labels);
        plan.node(e.is_domain ? NodeLabel::Domain : NodeLabel::Concept, e.concept_id,
                  std::move(props));
    }
    for (const auto& e : th.entries()) {
        if (!e.is_domain) plan.edge(e.concept_id, th.root_domain(e.concept_id), EdgeType::InDomain);
    }
    return plan;
}

Plan plan_projects(const std::vector<ProjectEntry>& projects, const Thesaurus& th,
                   const ConceptMatcher& matcher) {
    Plan plan;
    std::set<std::string_view> seen;
    for (const auto& p : projects) {
        if (!seen.insert(p.id).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate project '" + p.id + "'");
        }
        PropMap props;
        if (!p.title.empty()) props.emplace("title", p.title);
        plan.node(NodeLabel::Project, p.id, std::move(props));
        std::set<std::string> concepts;
        for (const auto& c : p.concepts) {
            domain_id_checked(th, c);
            concepts.insert(c);
        }
        for (auto& c : matcher.match(p.title + "\n\n" + p.description)) concepts.insert(std::move(c));
        for (const auto& c : concepts) plan.edge(p.id, c, EdgeType::Describes);
    }
    return plan;
}

Plan plan_record(const PublicationRecord& r, const ConceptMatcher& matcher,
                 const retrieval::Chunk& chunk) {
    Plan plan;
    PropMap props{{"title", r.title},
                  {"year", static_cast<std::int64_t>(r.year)},
                  {"citations_count", r.citations_count},
                  {"open_access", r.open_access}};
    if (r.doi) props.emplace("doi", *r.doi);
    plan.node(NodeLabel::Publication, r.id, std::move(props));

    for (const auto& a : r.authors) {
        plan.node(NodeLabel::Author, a.author_id, PropMap{{"name", a.name}});
        plan.edge(a.author_id, r.id, EdgeType::Authored);
    }
    for (const auto& kw : r.keywords) {
        std::string id = keyword_node_id(kw);
        if (id.empty()) continue;
        plan.node(NodeLabel::Keyword, id, PropMap{{"label", kw}});
        plan.edge(r.id, id, EdgeType::HasKeyword);
    }
    if (r.journal) {
        std::string id = journal_node_id(*r.journal);
        if (!id.empty()) {
            plan.node(NodeLabel::Journal, id, PropMap{{"name", *r.journal}});
            plan.edge(r.id, id, EdgeType::PublishedIn);
        }
    }
    for (const auto& p : r.projects) {
        plan.node(NodeLabel::Project, p);
        plan.edge(r.id, p, EdgeType::FundedBy);
    }
    for (const auto& s : r.software) {
        plan.node(NodeLabel::Software, s);
        plan.edge(r.id, s, EdgeType::UsesSoftware);
    }
    for (const auto& d : r.datasets) {
        plan.node(NodeLabel::Dataset, d);
        plan.edge(r.id, d, EdgeType::UsesDataset);
    }
    for (const auto& u : r.research_units) {
        PropMap uprops;
        if (!u.name.empty()) uprops.emplace("name", u.name);
        plan.node(NodeLabel::ResearchUnit, u.unit_id, std::move(uprops));
        if (!u.region.empty()) {
            std::string region = region_node_id(u.region);
            if (!region.empty()) {
                plan.node(NodeLabel::Region, region, PropMap{{"name", u.region}});
                plan.edge(u.unit_id, region, EdgeType::LocatedIn);
            }
        }
        for (const auto& a : r.authors) plan.edge(a.author_id, u.unit_id, EdgeType::AffiliatedWith);
    }
    for (const auto& c : matcher.match(chunk.text)) plan.edge(r.id, c, EdgeType::MentionsConcept);
    return plan;
}

}  // namespace

// ---------------------------------------------------------------- records

PublicationRecord parse_record(std::string_view json_line) {
    json obj = parse_object(json_line);
    PublicationRecord r;
    r.id = required_string(obj, "id");
    r.doi = optional_string(obj, "doi");
    r.title = required_string(obj, "title", true);
    r.abstract = optional_string(obj, "abstract").value_or("");
    r.introduction = optional_string(obj, "introduction");
    r.conclusion = optional_string(obj, "conclusion");
    r.journal = optional_string(obj, "journal");
    r.keywords = string_list(obj, "keywords");
    r.projects = string_list(obj, "projects");
    r.software = string_list(obj, "software");
    r.datasets = string_list(obj, "datasets");

    if (const json* authors = member(obj, "authors")) {
        if (!authors->is_array()) bad_field("authors", "must be a list");
        for (const auto& a : *authors) {
            if (!a.is_object()) bad_field("authors", "entries must be objects");
            AuthorRef ref;
            ref.author_id = required_string(a, "author_id");
            ref.name = optional_string(a, "name").value_or(ref.author_id);
            r.authors.push_back(std::move(ref));
        }
    }
    if (const json* units = member(obj, "research_units")) {
        if (!units->is_array()) bad_field("research_units", "must be a list");
        for (const auto& u : *units) {
            if (!u.is_object()) bad_field("research_units", "entries must be objects");
            UnitRef ref;
            ref.unit_id = required_string(u, "unit_id");
            ref.name = optional_string(u, "name").value_or("");
            ref.region = optional_string(u, "region").value_or("");
            r.research_units.push_back(std::move(ref));
        }
    }

    const json* year = member(obj, "year");
    if (year == nullptr) bad_field("year", "is missing");
    if (!year->is_number_integer()) bad_field("year", "must be an integer");
    auto y = year->get<std::int64_t>();
    if (y < 1900 || y > 2100) bad_field("year", "must lie in [1900, 2100]");
    r.year = static_cast<int>(y);

    if (const json* c = member(obj, "citations_count")) {
        if (!c->is_number_integer()) bad_field("citations_count", "must be an integer");
        r.citations_count = c->get<std::int64_t>();
        if (r.citations_count < 0) bad_field("citations_count", "must be non-negative");
    }
    if (const json* oa = member(obj, "open_access")) {
        if (!oa->is_boolean()) bad_field("open_access", "must be a boolean");
        r.open_access = oa->get<bool>();
    }
    return r;
}

Corpus read_corpus(std::istream& in, const CorpusOptions& options) {
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0, nonblank = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        ++nonblank;
        try {
            auto r = parse_record(line);
            bool in_window = !options.years ||
                             (r.year >= options.years->first && r.year <= options.years->last);
            if (!in_window || (options.open_access_only && !r.open_access)) {
                ++corpus.filtered;
                continue;
            }
            corpus.records.push_back(std::move(r));
        } catch (const Error& e) {
            std::string id;
            try {
                auto obj = json::parse(line);
                if (obj.is_object() && obj.contains("id") && obj["id"].is_string()) {
                    id = obj["id"].get<std::string>();
                }
            } catch (const json::exception&) {
            }
            corpus.errors.push_back({lineno, id, std::string(to_string(e.code())),
                                     "line " + std::to_string(lineno) + ": " + e.what()});
        }
    }
    if (nonblank > 0 && corpus.errors.size() == nonblank) {
        throw Error(ErrorCode::AllRecordsInvalid,
                    "none of the " + std::to_string(nonblank) + " records is valid; first: " +
                        corpus.errors.front().message);
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options) {
    auto in = open_input(path);
    return read_corpus(in, options);
}

retrieval::Chunk build_chunk(const PublicationRecord& record) {
    if (record.title.empty()) {
        throw Error(ErrorCode::EmptyContent, "publication '" + record.id + "' has an empty title");
    }
    std::string text = record.title;
    for (const auto* section : {&record.abstract}) {
        if (!section->empty()) text += "\n\n" + *section;
    }
    for (const auto* section : {&record.introduction, &record.conclusion}) {
        if (*section && !(*section)->empty()) text += "\n\n" + **section;
    }
    return retrieval::make_chunk(record.id, std::move(text));
}

// ---------------------------------------------------------------- thesaurus

Thesaurus::Thesaurus(std::vector<ThesaurusEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.concept_id.empty()) {
            throw Error(ErrorCode::InvalidThesaurus, "entry " + std::to_string(i + 1) + " has no id");
        }
        if (e.preferred_label.empty()) {
            throw Error(ErrorCode::InvalidThesaurus, "'" + e.concept_id + "' has no preferred label");
        }
        if (!by_id_.emplace(e.concept_id, i).second) {
            throw Error(ErrorCode::InvalidThesaurus, "duplicate entry '" + e.concept_id + "'");
        }
    }
    for (const auto& e : entries_) {
        if (!e.broader) continue;
        if (e.is_domain) {
            throw Error(ErrorCode::InvalidThesaurus,
                        "domain '" + e.concept_id + "' must not have a broader entry");
        }
        if (by_id_.count(*e.broader) == 0) {
            throw Error(ErrorCode::InvalidThesaurus,
                        "'" + e.concept_id + "' refers to unknown broader entry '" + *e.broader + "'");
        }
    }

    // Walk each broader chain once; a revisit inside the current walk is a cycle.
    enum class Mark { None, Active, Done };
    std::vector<Mark> mark(entries_.size(), Mark::None);
    for (std::size_t start = 0; start < entries_.size(); ++start) {
        std::vector<std::size_t> path;
        std::size_t cur = start;
        while (mark[cur] == Mark::None) {
            mark[cur] = Mark::Active;
            path.push_back(cur);
            if (!entries_[cur].broader) break;
            cur = by_id_.at(*entries_[cur].broader);
            if (mark[cur] == Mark::Active) {
                std::string chain;
                auto from = std::find(path.begin(), path.end(), cur);
                for (auto it = from; it != path.end(); ++it) chain += entries_[*it].concept_id + " -> ";
                chain += entries_[cur].concept_id;
                throw Error(ErrorCode::CycleDetected, "broader cycle: " + chain);
            }
        }
        for (auto i : path) mark[i] = Mark::Done;
    }

    for (const auto& e : entries_) {
        if (e.is_domain) continue;
        const ThesaurusEntry* cur = &e;
        while (cur->broader) cur = &entries_[by_id_.at(*cur->broader)];
        if (!cur->is_domain) {
            throw Error(ErrorCode::InvalidThesaurus,
                        "'" + e.concept_id + "' has no domain among its broader entries");
        }
        root_.emplace(e.concept_id, cur->concept_id);
    }
}

const ThesaurusEntry* Thesaurus::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

const std::string& Thesaurus::root_domain(std::string_view concept_id) const {
    auto it = root_.find(std::string(concept_id));
    if (it == root_.end()) {
        throw Error(ErrorCode::InvalidArgument, "'" + std::string(concept_id) + "' is not a concept");
    }
    return it->second;
}

Thesaurus read_thesaurus(std::istream& in) {
    std::vector<ThesaurusEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        try {
            json obj = parse_object(line);
            ThesaurusEntry e;
            e.concept_id = required_string(obj, "concept_id");
            e.preferred_label = required_string(obj, "preferred_label");
            e.alternate_labels = string_list(obj, "alternate_labels");
            e.broader = optional_string(obj, "broader");
            if (const json* d = member(obj, "is_domain")) {
                if (!d->is_boolean()) bad_field("is_domain", "must be a boolean");
                e.is_domain = d->get<bool>();
            }
            entries.push_back(std::move(e));
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidThesaurus,
                        "thesaurus line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return Thesaurus(std::move(entries));
}

Thesaurus load_thesaurus(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_thesaurus(in);
}

std::vector<ProjectEntry> read_projects(std::istream& in) {
    std::vector<ProjectEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        try {
            json obj = parse_object(line);
            ProjectEntry p;
            p.id = required_string(obj, "id");
            p.title = optional_string(obj, "title").value_or("");
            p.description = optional_string(obj, "description").value_or("");
            p.concepts = string_list(obj, "concepts");
            out.push_back(std::move(p));
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidRecord,
                        "projects line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ProjectEntry> load_projects(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_projects(in);
}

// ---------------------------------------------------------------- matching

ConceptMatcher::ConceptMatcher(const Thesaurus& thesaurus) {
    for (const auto& e : thesaurus.entries()) {
        if (e.is_domain) continue;
        std::vector<std::string_view> labels{e.preferred_label};
        for (const auto& a : e.alternate_labels) labels.push_back(a);
        for (auto label : labels) {
            auto tokens = retrieval::tokenize(label);
            if (tokens.empty()) continue;
            auto first = tokens.front();
            by_first_token_[first].push_back({std::move(tokens), e.concept_id});
        }
    }
}

std::vector<std::string> ConceptMatcher::match(std::string_view text) const {
    auto tokens = retrieval::tokenize(text);
    std::set<std::string> found;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto it = by_first_token_.find(tokens[i]);
        if (it == by_first_token_.end()) continue;
        for (const auto& phrase : it->second) {
            if (phrase_at(tokens, i, phrase.tokens)) found.insert(phrase.concept_id);
        }
    }
    return {found.begin(), found.end()};
}

std::string keyword_node_id(std::string_view keyword) {
    auto norm = join_tokens(keyword, '-');
    return norm.empty() ? norm : "kw:" + norm;
}

std::string journal_node_id(std::string_view journal) {
    auto norm = join_tokens(journal, '-');
    return norm.empty() ? norm : "journal:" + norm;
}

std::string region_node_id(std::string_view region) {
    auto norm = join_tokens(region, '-');
    return norm.empty() ? norm : "region:" + norm;
}

// ---------------------------------------------------------------- populate

std::size_t IngestReport::total_nodes() const {
    std::size_t n = 0;
    for (auto c : node_counts) n += c;
    return n;
}

std::size_t IngestReport::total_edges() const {
    std::size_t n = 0;
    for (auto c : edge_counts) n += c;
    return n;
}

IngestReport populate(KnowledgeBase& kb, const std::vector<PublicationRecord>& records,
                      const Thesaurus& thesaurus, const std::vector<ProjectEntry>& projects) {
    if (!kb.graph.empty() || !kb.chunks.empty()) {
        throw Error(ErrorCode::AlreadyPopulated, "knowledge base is already populated");
    }
    IngestReport report;
    Populator populator(kb, report);
    ConceptMatcher matcher(thesaurus);

    Plan th_plan = plan_thesaurus(thesaurus);
    Plan proj_plan = plan_projects(projects, thesaurus, matcher);
    populator.check(th_plan);
    populator.apply(th_plan);
    populator.check(proj_plan);
    populator.apply(proj_plan);

    std::size_t index = 0;
    for (const auto& r : records) {
        ++index;
        try {
            if (kb.graph.find(r.id)) {
                throw Error(ErrorCode::DuplicateId, "publication id '" + r.id + "' already ingested");
            }
            auto chunk = build_chunk(r);
            Plan plan = plan_record(r, matcher, chunk);
            populator.check(plan);
            populator.apply(plan);
            kb.chunks.push_back(std::move(chunk));
            ++report.records_ingested;
        } catch (const Error& e) {
            report.errors.push_back({0, r.id, std::string(to_string(e.code())),
                                     "record " + std::to_string(index) + " ('" + r.id +
                                         "'): " + e.what()});
        }
    }
    return report;
}

std::vector<std::string> unwitnessed_concept_links(const KnowledgeBase& kb,
                                                   const Thesaurus& thesaurus) {
    std::unordered_map<std::string_view, const retrieval::Chunk*> chunk_of;
    for (const auto& c : kb.chunks) chunk_of.emplace(c.chunk_id, &c);
    std::vector<std::string> missing;
    for (EdgeIndex e : kb.graph.edges_sorted()) {
        const auto& edge = kb.graph.edge(e);
        if (edge.type != EdgeType::MentionsConcept) continue;
        const auto& pub = kb.graph.node(edge.src).id;
        const auto& concept_id = kb.graph.node(edge.dst).id;
        bool witnessed = false;
        auto it = chunk_of.find(pub);
        const auto* entry = thesaurus.find(concept_id);
        if (it != chunk_of.end() && entry != nullptr) {
            auto text = retrieval::tokenize(it->second->text);
            witnessed = contains_phrase(text, retrieval::tokenize(entry->preferred_label));
            for (const auto& alt : entry->alternate_labels) {
                witnessed = witnessed || contains_phrase(text, retrieval::tokenize(alt));
            }
        }
        if (!witnessed) missing.push_back(pub + " -> " + concept_id);
    }
    return missing;
}

// ---------------------------------------------------------------- persistence

std::filesystem::path chunks_path(const std::filesystem::path& snapshot) {
    auto p = snapshot;
    p += ".chunks";
    return p;
}

void write_chunks(std::ostream& out, const std::vector<retrieval::Chunk>& chunks) {
    binary::write_magic(out, kChunksMagic);
    binary::write_uint<std::uint64_t>(out, chunks.size());
    for (const auto& c : chunks) {
        binary::write_string(out, c.chunk_id);
        binary::write_string(out, c.text);
    }
}

std::vector<retrieval::Chunk> read_chunks(std::istream& in) {
    binary::expect_magic(in, kChunksMagic, "chunk file");
    auto n = binary::read_uint<std::uint64_t>(in);
    std::vector<retrieval::Chunk> chunks;
    for (std::uint64_t i = 0; i < n; ++i) {
        auto id = binary::read_string(in);
        auto text = binary::read_string(in);
        chunks.push_back(retrieval::make_chunk(std::move(id), std::move(text)));
    }
    return chunks;
}

void save(const KnowledgeBase& kb, const std::filesystem::path& snapshot) {
    kb.graph.save(snapshot);
    std::ofstream out(chunks_path(snapshot), std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::FileUnreadable, "cannot write '" + chunks_path(snapshot).string() + "'");
    }
    write_chunks(out, kb.chunks);
    if (!out) throw Error(ErrorCode::FileUnreadable, "write to '" + chunks_path(snapshot).string() + "' failed");
}

KnowledgeBase load(const std::filesystem::path& snapshot, int max_depth) {
    KnowledgeBase kb;
    kb.graph = PropertyGraph::load(snapshot, max_depth);
    auto in = open_input(chunks_path(snapshot));
    kb.chunks = read_chunks(in);
    for (const auto& c : kb.chunks) {
        const Node* n = kb.graph.find_node(c.chunk_id);
        if (n == nullptr || n->label != NodeLabel::Publication) {
            throw Error(ErrorCode::SnapshotFormat,
                        "chunk '" + c.chunk_id + "' has no publication in the snapshot");
        }
    }
    return kb;
}

}  // namespace kgx::ingest
