#include "kgx/retrieval.hpp"

#include <locale.h>
#include <wctype.h>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "kgx/error.hpp"

namespace kgx::retrieval {

namespace {

locale_t utf8_locale() {
    static const locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
        if (l == nullptr) l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(nullptr));
        return l;
    }();
    return loc;
}

// Decodes one code point; returns 0 length for a malformed sequence.
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) {
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char c = byte(i);
    std::size_t len;
    if (c < 0x80) {
        cp = c;
        return 1;
    } else if ((c & 0xE0) == 0xC0) {
        cp = c & 0x1F;
        len = 2;
    } else if ((c & 0xF0) == 0xE0) {
        cp = c & 0x0F;
        len = 3;
    } else if ((c & 0xF8) == 0xF0) {
        cp = c & 0x07;
        len = 4;
    } else {
        return 0;
    }
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        if ((byte(i + k) & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
    return len;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool is_word_char(char32_t cp, locale_t loc) {
    if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
    if (loc == nullptr) return false;
    return iswalnum_l(static_cast<wint_t>(cp), loc) != 0;
}

char32_t to_lower(char32_t cp, locale_t loc) {
    if (cp < 0x80) return static_cast<char32_t>(std::tolower(static_cast<int>(cp)));
    if (loc == nullptr) return cp;
    return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
}

void sort_hits(std::vector<RankedHit>& hits) {
    std::sort(hits.begin(), hits.end(), [](const RankedHit& a, const RankedHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk_id < b.chunk_id;
    });
}

void truncate_and_rank(std::vector<RankedHit>& hits, std::size_t k, Channel channel) {
    if (hits.size() > k) hits.resize(k);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        hits[i].rank = i + 1;
        hits[i].channel = channel;
    }
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    locale_t loc = utf8_locale();
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = 0;
        std::size_t len = decode_utf8(text, i, cp);
        if (len == 0) {
            len = 1;
            cp = U' ';
        }
        if (is_word_char(cp, loc)) {
            encode_utf8(to_lower(cp, loc), current);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
        i += len;
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Chunk make_chunk(std::string chunk_id, std::string text) {
    Chunk c{std::move(chunk_id), std::move(text), 0};
    c.token_count = tokenize(c.text).size();
    return c;
}

std::string_view to_string(Channel channel) {
    switch (channel) {
        case Channel::Sparse: return "sparse";
        case Channel::Dense: return "dense";
        case Channel::Fused: return "fused";
        case Channel::Reranked: return "reranked";
    }
    return "?";
}

// ---------------------------------------------------------------- sparse

void SparseIndex::add(const Chunk& chunk) {
    if (doc_by_id_.count(chunk.chunk_id) != 0) {
        throw Error(ErrorCode::DuplicateId, "duplicate chunk id '" + chunk.chunk_id + "'");
    }
    auto doc = static_cast<std::uint32_t>(doc_ids_.size());
    auto tokens = tokenize(chunk.text);
    std::unordered_map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) postings_[term].push_back({doc, count});
    doc_ids_.push_back(chunk.chunk_id);
    doc_lengths_.push_back(tokens.size());
    doc_by_id_.emplace(chunk.chunk_id, doc);
    total_length_ += tokens.size();
}

double SparseIndex::avgdl() const {
    if (doc_ids_.empty()) return 0.0;
    return static_cast<double>(total_length_) / static_cast<double>(doc_ids_.size());
}

double SparseIndex::idf(const std::string& term) const {
    auto it = postings_.find(term);
    double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    double n = static_cast<double>(doc_ids_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::uint32_t SparseIndex::doc_index(std::string_view chunk_id) const {
    auto it = doc_by_id_.find(std::string(chunk_id));
    if (it == doc_by_id_.end()) {
        throw Error(ErrorCode::UnknownChunk, "unknown chunk '" + std::string(chunk_id) + "'");
    }
    return it->second;
}

std::size_t SparseIndex::doc_length(std::string_view chunk_id) const {
    return doc_lengths_[doc_index(chunk_id)];
}

std::span<const SparseIndex::Posting> SparseIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

double SparseIndex::term_weight(double idf, std::uint32_t tf, std::size_t dl,
                                double avg) const {
    double f = static_cast<double>(tf);
    double norm = 1.0 - params_.b + params_.b * static_cast<double>(dl) / avg;
    return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

double SparseIndex::score(std::span<const std::string> query_terms,
                          std::string_view chunk_id) const {
    std::uint32_t doc = doc_index(chunk_id);
    double avg = avgdl();
    double total = 0.0;
    for (const auto& term : query_terms) {
        auto plist = postings(term);
        auto it = std::lower_bound(plist.begin(), plist.end(), doc,
                                   [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (it == plist.end() || it->doc != doc) continue;
        total += term_weight(idf(term), it->tf, doc_lengths_[doc], avg);
    }
    return total;
}

std::vector<RankedHit> SparseIndex::search(std::span<const std::string> query_terms,
                                           std::size_t k) const {
    if (doc_ids_.empty()) throw Error(ErrorCode::EmptyIndex, "sparse index is empty");
    double avg = avgdl();
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& term : query_terms) {
        auto plist = postings(term);
        if (plist.empty()) continue;
        double w = idf(term);
        for (const auto& p : plist) acc[p.doc] += term_weight(w, p.tf, doc_lengths_[p.doc], avg);
    }
    std::vector<RankedHit> hits;
    hits.reserve(acc.size());
    for (const auto& [doc, s] : acc) {
        if (s > 0.0) hits.push_back({doc_ids_[doc], s, 0, Channel::Sparse});
    }
    sort_hits(hits);
    truncate_and_rank(hits, k, Channel::Sparse);
    return hits;
}

std::vector<RankedHit> SparseIndex::search(std::string_view query, std::size_t k) const {
    auto terms = tokenize(query);
    return search(terms, k);
}

// ---------------------------------------------------------------- dense

std::vector<float> HashingEmbedder::embed(std::string_view text) const {
    std::vector<double> acc(dim_, 0.0);
    for (const auto& token : tokenize(text)) {
        std::uint64_t h = fnv1a64(token);
        double sign = ((h >> 63) & 1U) != 0 ? -1.0 : 1.0;
        acc[h % dim_] += sign;
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    if (norm == 0.0) {
        throw Error(ErrorCode::ZeroContent, "text has no embeddable content");
    }
    norm = std::sqrt(norm);
    std::vector<float> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

DenseIndex::DenseIndex(std::shared_ptr<const Embedder> embedder)
    : embedder_(std::move(embedder)),
      embedder_id_(embedder_->id()),
      dim_(embedder_->dimension()) {}

void DenseIndex::add(const Chunk& chunk) {
    add_vector(chunk.chunk_id, embedder_->embed(chunk.text));
}

void DenseIndex::add_vector(std::string chunk_id, std::vector<float> unit_vector) {
    if (unit_vector.size() != dim_) {
        throw Error(ErrorCode::ProviderError,
                    "embedding dimension " + std::to_string(unit_vector.size()) +
                        " does not match index dimension " + std::to_string(dim_));
    }
    ids_.push_back(std::move(chunk_id));
    vectors_.insert(vectors_.end(), unit_vector.begin(), unit_vector.end());
}

std::vector<RankedHit> DenseIndex::search(std::string_view query, std::size_t k) const {
    if (ids_.empty()) throw Error(ErrorCode::EmptyIndex, "dense index is empty");
    auto q = embedder_->embed(query);
    return search_vector(q, k);
}

std::vector<RankedHit> DenseIndex::search_vector(std::span<const float> query,
                                                 std::size_t k) const {
    if (ids_.empty()) throw Error(ErrorCode::EmptyIndex, "dense index is empty");
    if (query.size() != dim_) {
        throw Error(ErrorCode::ProviderError, "query embedding has wrong dimension");
    }
    std::vector<RankedHit> hits;
    hits.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const float* row = vectors_.data() + i * dim_;
        double dot = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            dot += static_cast<double>(row[j]) * static_cast<double>(query[j]);
        }
        hits.push_back({ids_[i], dot, 0, Channel::Dense});
    }
    sort_hits(hits);
    truncate_and_rank(hits, k, Channel::Dense);
    return hits;
}

// ---------------------------------------------------------------- fusion

std::vector<RankedHit> fuse(std::span<const RankedHit> sparse, std::span<const RankedHit> dense,
                            std::size_t k, double rrf_constant) {
    std::unordered_map<std::string, double> scores;
    auto accumulate = [&](std::span<const RankedHit> list, const char* name) {
        std::unordered_set<std::string_view> seen;
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i].rank != i + 1 || !seen.insert(list[i].chunk_id).second) {
                throw Error(ErrorCode::InvalidArgument,
                            std::string(name) + " ranking is not a 1..n permutation");
            }
            scores[list[i].chunk_id] += 1.0 / (rrf_constant + static_cast<double>(list[i].rank));
        }
    };
    accumulate(sparse, "sparse");
    accumulate(dense, "dense");
    std::vector<RankedHit> hits;
    hits.reserve(scores.size());
    for (auto& [id, s] : scores) hits.push_back({id, s, 0, Channel::Fused});
    sort_hits(hits);
    truncate_and_rank(hits, k, Channel::Fused);
    return hits;
}

// ---------------------------------------------------------------- rerank

std::vector<double> OverlapReranker::score(std::string_view query,
                                           std::span<const std::string> texts) const {
    auto qv = tokenize(query);
    std::unordered_set<std::string> q(qv.begin(), qv.end());
    std::vector<double> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (q.empty()) {
            out.push_back(0.0);
            continue;
        }
        auto tv = tokenize(text);
        std::unordered_set<std::string> t(tv.begin(), tv.end());
        std::size_t shared = 0;
        for (const auto& term : q) shared += t.count(term);
        out.push_back(static_cast<double>(shared) / static_cast<double>(q.size()));
    }
    return out;
}

RerankOutcome rerank(const Reranker& reranker, std::string_view query,
                     std::span<const RankedHit> candidates, std::span<const std::string> texts,
                     std::size_t k, std::size_t pool_limit) {
    std::size_t n = std::min({candidates.size(), texts.size(), pool_limit});
    RerankOutcome out;
    std::vector<double> scores;
    try {
        scores = reranker.score(query, texts.first(n));
        if (scores.size() != n) {
            throw Error(ErrorCode::RerankerUnavailable,
                        "reranker returned " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(n) + " candidates");
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::RerankerUnavailable && e.code() != ErrorCode::ProviderError) {
            throw;
        }
        out.fallback = true;
        out.fallback_reason = e.what();
        out.hits.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n));
        truncate_and_rank(out.hits, k, Channel::Fused);
        return out;
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (candidates[a].score != candidates[b].score) {
            return candidates[a].score > candidates[b].score;
        }
        return candidates[a].chunk_id < candidates[b].chunk_id;
    });
    for (std::size_t i : order) {
        out.hits.push_back({candidates[i].chunk_id, scores[i], 0, Channel::Reranked});
    }
    truncate_and_rank(out.hits, k, Channel::Reranked);
    return out;
}

// ---------------------------------------------------------------- hybrid

HybridIndex::HybridIndex(std::vector<Chunk> chunks, std::shared_ptr<const Embedder> embedder,
                         HybridConfig config)
    : chunks_(std::move(chunks)),
      config_(config),
      sparse_(config.bm25),
      dense_(std::move(embedder)) {
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        sparse_.add(chunks_[i]);
        dense_.add(chunks_[i]);
        by_id_.emplace(chunks_[i].chunk_id, i);
    }
}

const Chunk* HybridIndex::chunk(std::string_view chunk_id) const {
    auto it = by_id_.find(std::string(chunk_id));
    return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

RerankOutcome HybridIndex::search(std::string_view query, std::size_t k, const Reranker& reranker,
                                  std::size_t pool) const {
    if (chunks_.empty()) throw Error(ErrorCode::EmptyIndex, "no chunks indexed");
    if (pool == 0) pool = config_.pool_size;
    pool = std::max(pool, k);
    auto sparse_hits = sparse_.search(query, pool);
    auto dense_hits = dense_.search(query, pool);
    auto fused = fuse(sparse_hits, dense_hits, pool, config_.rrf_constant);
    std::vector<std::string> texts;
    texts.reserve(fused.size());
    for (const auto& h : fused) texts.push_back(chunk(h.chunk_id)->text);
    return rerank(reranker, query, fused, texts, k, pool);
}

}  // namespace kgx::retrieval
