#pragma once
// Knowledge base construction from line-delimited JSON files: publication
// records, a thesaurus (Domain/Concept hierarchy) and optional project
// descriptions. Produces the property graph plus one retrieval chunk per
// publication.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgx/graph.hpp"
#include "kgx/retrieval.hpp"

namespace kgx::ingest {

struct AuthorRef {
    std::string author_id;
    std::string name;
};

struct UnitRef {
    std::string unit_id;
    std::string name;
    std::string region;  // may be empty
};

struct PublicationRecord {
    std::string id;
    std::optional<std::string> doi;
    std::string title;
    std::string abstract;
    std::optional<std::string> introduction;
    std::optional<std::string> conclusion;
    std::vector<AuthorRef> authors;
    std::vector<std::string> keywords;
    std::optional<std::string> journal;
    std::vector<std::string> projects;
    std::vector<std::string> software;
    std::vector<std::string> datasets;
    std::vector<UnitRef> research_units;
    int year = 0;
    std::int64_t citations_count = 0;
    bool open_access = false;
};

struct RecordError {
    std::size_t line = 0;  // 1-based; 0 when not tied to a file line
    std::string record_id;
    std::string code;
    std::string message;
};

struct YearWindow {
    int first;
    int last;
};

struct CorpusOptions {
    std::optional<YearWindow> years;
    bool open_access_only = false;
};

struct Corpus {
    std::vector<PublicationRecord> records;  // file order
    std::vector<RecordError> errors;
    std::size_t filtered = 0;  // valid but outside the configured window
};

// Throws InvalidRecord naming the offending field.
PublicationRecord parse_record(std::string_view json_line);

// Malformed lines go to Corpus::errors. Throws FileUnreadable, or
// AllRecordsInvalid when there were lines but none parsed.
Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options = {});
Corpus read_corpus(std::istream& in, const CorpusOptions& options = {});

// title, abstract, introduction, conclusion joined by blank lines, absent
// sections skipped. Throws EmptyContent for an empty title.
retrieval::Chunk build_chunk(const PublicationRecord& record);

struct ThesaurusEntry {
    std::string concept_id;
    std::string preferred_label;
    std::vector<std::string> alternate_labels;
    std::optional<std::string> broader;
    bool is_domain = false;
};

class Thesaurus {
public:
    Thesaurus() = default;
    // Validates ids, parents and acyclicity. Throws InvalidThesaurus or
    // CycleDetected (message lists the chain).
    explicit Thesaurus(std::vector<ThesaurusEntry> entries);

    const std::vector<ThesaurusEntry>& entries() const { return entries_; }
    const ThesaurusEntry* find(std::string_view id) const;
    // Domain at the top of the broader chain of a concept.
    const std::string& root_domain(std::string_view concept_id) const;
    bool empty() const { return entries_.empty(); }

private:
    std::vector<ThesaurusEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::string> root_;
};

Thesaurus load_thesaurus(const std::filesystem::path& path);
Thesaurus read_thesaurus(std::istream& in);

struct ProjectEntry {
    std::string id;
    std::string title;
    std::string description;
    std::vector<std::string> concepts;  // explicit concept ids
};

std::vector<ProjectEntry> load_projects(const std::filesystem::path& path);
std::vector<ProjectEntry> read_projects(std::istream& in);

// Case-insensitive, token-boundary phrase matcher over concept labels.
class ConceptMatcher {
public:
    explicit ConceptMatcher(const Thesaurus& thesaurus);

    // Distinct concept ids whose preferred or alternate label occurs in the
    // text, sorted.
    std::vector<std::string> match(std::string_view text) const;

private:
    struct Phrase {
        std::vector<std::string> tokens;
        std::string concept_id;
    };
    std::unordered_map<std::string, std::vector<Phrase>> by_first_token_;
};

std::string keyword_node_id(std::string_view keyword);
std::string journal_node_id(std::string_view journal);
std::string region_node_id(std::string_view region);

struct IngestReport {
    LabelCounts node_counts{};
    std::array<std::size_t, kEdgeTypeCount> edge_counts{};
    std::vector<RecordError> errors;
    std::size_t records_ingested = 0;
    std::size_t filtered = 0;

    std::size_t total_nodes() const;
    std::size_t total_edges() const;
    std::vector<LabelShare> distribution() const { return label_distribution(node_counts); }
};

struct KnowledgeBase {
    PropertyGraph graph;
    std::vector<retrieval::Chunk> chunks;  // record order
};

// Requires an empty knowledge base (AlreadyPopulated otherwise). Records that
// fail are reported and skipped without touching the graph.
IngestReport populate(KnowledgeBase& kb, const std::vector<PublicationRecord>& records,
                      const Thesaurus& thesaurus, const std::vector<ProjectEntry>& projects = {});

// MENTIONS_CONCEPT edges whose label cannot be found again in the chunk text,
// as "publication -> concept" strings. Empty on a consistent base.
std::vector<std::string> unwitnessed_concept_links(const KnowledgeBase& kb,
                                                   const Thesaurus& thesaurus);

// Graph snapshot at `path`, chunks at `path` + ".chunks".
std::filesystem::path chunks_path(const std::filesystem::path& snapshot);
void save(const KnowledgeBase& kb, const std::filesystem::path& snapshot);
KnowledgeBase load(const std::filesystem::path& snapshot,
                   int max_depth = PropertyGraph::kDefaultMaxDepth);
void write_chunks(std::ostream& out, const std::vector<retrieval::Chunk>& chunks);
std::vector<retrieval::Chunk> read_chunks(std::istream& in);

}  // namespace kgx::ingest
