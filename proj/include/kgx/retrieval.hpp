#pragma once
// Hybrid text retrieval over publication chunks: BM25 inverted index, exact
// dense scan with a pluggable embedder, reciprocal rank fusion and a pluggable
// reranker. Indexes are built once and are read-only afterwards.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgx::retrieval {

// Lowercased maximal runs of Unicode letters/digits. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

struct Chunk {
    std::string chunk_id;
    std::string text;
    std::size_t token_count = 0;
};

Chunk make_chunk(std::string chunk_id, std::string text);

enum class Channel { Sparse, Dense, Fused, Reranked };
std::string_view to_string(Channel channel);

struct RankedHit {
    std::string chunk_id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based
    Channel channel = Channel::Sparse;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

class SparseIndex {
public:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };

    explicit SparseIndex(Bm25Params params = {}) : params_(params) {}

    void add(const Chunk& chunk);

    // Sum over query terms (repeats counted per occurrence) of
    // idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl)),
    // idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)).
    double score(std::span<const std::string> query_terms, std::string_view chunk_id) const;

    // Chunks sharing at least one term with the query, best first, ties by
    // chunk id. Throws EmptyIndex.
    std::vector<RankedHit> search(std::span<const std::string> query_terms, std::size_t k) const;
    std::vector<RankedHit> search(std::string_view query, std::size_t k) const;

    std::size_t size() const { return doc_ids_.size(); }
    double avgdl() const;
    double idf(const std::string& term) const;
    std::size_t doc_length(std::string_view chunk_id) const;
    std::span<const Posting> postings(const std::string& term) const;
    const std::string& doc_id(std::uint32_t doc) const { return doc_ids_[doc]; }
    const Bm25Params& params() const { return params_; }

private:
    double term_weight(double idf, std::uint32_t tf, std::size_t dl, double avgdl) const;
    std::uint32_t doc_index(std::string_view chunk_id) const;

    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::size_t> doc_lengths_;
    std::unordered_map<std::string, std::uint32_t> doc_by_id_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::size_t total_length_ = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    // Unit-length vector. Throws ZeroContent for text without tokens and
    // ProviderError when a remote provider fails.
    virtual std::vector<float> embed(std::string_view text) const = 0;
};

// Signed feature hashing of tokens (FNV-1a 64) into `dimension` buckets,
// then L2 normalisation.
class HashingEmbedder final : public Embedder {
public:
    static constexpr std::size_t kDefaultDimension = 256;

    explicit HashingEmbedder(std::size_t dimension = kDefaultDimension) : dim_(dimension) {}

    std::string id() const override { return "hashing-" + std::to_string(dim_); }
    std::size_t dimension() const override { return dim_; }
    std::vector<float> embed(std::string_view text) const override;

private:
    std::size_t dim_;
};

class DenseIndex {
public:
    explicit DenseIndex(std::shared_ptr<const Embedder> embedder);

    void add(const Chunk& chunk);
    void add_vector(std::string chunk_id, std::vector<float> unit_vector);

    // Exact scan; cosine = dot product of unit vectors. Ties by chunk id.
    std::vector<RankedHit> search(std::string_view query, std::size_t k) const;
    std::vector<RankedHit> search_vector(std::span<const float> query, std::size_t k) const;

    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return dim_; }
    const std::string& embedder_id() const { return embedder_id_; }
    std::span<const float> vector(std::size_t i) const {
        return {vectors_.data() + i * dim_, dim_};
    }

private:
    std::shared_ptr<const Embedder> embedder_;
    std::string embedder_id_;
    std::size_t dim_;
    std::vector<std::string> ids_;
    std::vector<float> vectors_;  // row-major, one row per chunk
};

inline constexpr double kDefaultRrfConstant = 60.0;

// Reciprocal rank fusion: score(c) = sum over lists of 1/(constant + rank).
// Inputs must carry ranks 1..n. Ties by chunk id.
std::vector<RankedHit> fuse(std::span<const RankedHit> sparse, std::span<const RankedHit> dense,
                            std::size_t k, double rrf_constant = kDefaultRrfConstant);

class Reranker {
public:
    virtual ~Reranker() = default;
    virtual std::string id() const = 0;
    // One score per text. Throws Error(RerankerUnavailable) on failure.
    virtual std::vector<double> score(std::string_view query,
                                      std::span<const std::string> texts) const = 0;
};

// |query terms ∩ chunk terms| / |query terms|
class OverlapReranker final : public Reranker {
public:
    std::string id() const override { return "term-overlap"; }
    std::vector<double> score(std::string_view query,
                              std::span<const std::string> texts) const override;
};

struct RerankOutcome {
    std::vector<RankedHit> hits;
    bool fallback = false;  // reranker failed, fused order kept
    std::string fallback_reason;
};

inline constexpr std::size_t kDefaultPoolSize = 50;

// Reorders candidates by reranker score, ties by incoming (fused) score then
// chunk id. texts[i] belongs to candidates[i].
RerankOutcome rerank(const Reranker& reranker, std::string_view query,
                     std::span<const RankedHit> candidates, std::span<const std::string> texts,
                     std::size_t k, std::size_t pool_limit = kDefaultPoolSize);

struct HybridConfig {
    Bm25Params bm25;
    double rrf_constant = kDefaultRrfConstant;
    std::size_t pool_size = kDefaultPoolSize;
};

// Chunk store plus both indexes: sparse and dense top-pool, fused, reranked.
class HybridIndex {
public:
    HybridIndex(std::vector<Chunk> chunks, std::shared_ptr<const Embedder> embedder,
                HybridConfig config = {});

    RerankOutcome search(std::string_view query, std::size_t k, const Reranker& reranker,
                         std::size_t pool = 0) const;

    const Chunk* chunk(std::string_view chunk_id) const;
    std::span<const Chunk> chunks() const { return chunks_; }
    const SparseIndex& sparse() const { return sparse_; }
    const DenseIndex& dense() const { return dense_; }
    const HybridConfig& config() const { return config_; }

private:
    std::vector<Chunk> chunks_;
    std::unordered_map<std::string, std::size_t> by_id_;
    HybridConfig config_;
    SparseIndex sparse_;
    DenseIndex dense_;
};

}  // namespace kgx::retrieval
