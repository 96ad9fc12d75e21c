#pragma once
// Shared access to the shipped fixture corpus.

#include <unistd.h>

#include <filesystem>
#include <memory>

#include "kgx/ingest.hpp"
#include "kgx/tools.hpp"

namespace kgx::testing {

inline std::filesystem::path fixture_dir() {
    return std::filesystem::path(KGX_SOURCE_DIR) / "data" / "fixture";
}

inline ingest::KnowledgeBase fixture_kb(ingest::IngestReport* report = nullptr) {
    auto dir = fixture_dir();
    auto corpus = ingest::load_corpus(dir / "corpus.jsonl");
    auto thesaurus = ingest::load_thesaurus(dir / "thesaurus.jsonl");
    auto projects = ingest::load_projects(dir / "projects.jsonl");
    ingest::KnowledgeBase kb;
    auto r = ingest::populate(kb, corpus.records, thesaurus, projects);
    if (report != nullptr) *report = std::move(r);
    return kb;
}

// Fixture knowledge base with indexes and tools over it.
struct FixtureEngine {
    ingest::KnowledgeBase kb;
    retrieval::HybridIndex index;
    retrieval::OverlapReranker reranker;
    tools::Toolbox toolbox;

    explicit FixtureEngine(tools::ToolConfig config = {})
        : kb(fixture_kb()),
          index(kb.chunks, std::make_shared<retrieval::HashingEmbedder>()),
          toolbox(kb.graph, index, reranker, config) {}
};

// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() /
                ("kgx-" + name + "-" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace kgx::testing
