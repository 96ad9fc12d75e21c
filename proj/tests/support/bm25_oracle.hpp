#pragma once
// Straight-from-formula BM25 over raw token lists. Recounts df, tf and avgdl
// from scratch on every call; no index structures are shared with the engine.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace kgx::testing {

struct Bm25Oracle {
    std::vector<std::vector<std::string>> docs;
    double k1 = 1.2;
    double b = 0.75;

    double score(const std::vector<std::string>& query, std::size_t doc) const {
        double n = static_cast<double>(docs.size());
        double total_len = 0;
        for (const auto& d : docs) total_len += static_cast<double>(d.size());
        double avgdl = total_len / n;
        double dl = static_cast<double>(docs[doc].size());
        double s = 0.0;
        for (const auto& t : query) {
            double tf = static_cast<double>(std::count(docs[doc].begin(), docs[doc].end(), t));
            if (tf == 0) continue;
            double df = 0;
            for (const auto& d : docs) df += std::find(d.begin(), d.end(), t) != d.end() ? 1 : 0;
            double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        return s;
    }
};

// Zipf-ish synthetic vocabulary so that df varies widely across terms.
struct SyntheticCorpus {
    std::vector<std::string> vocab;
    std::vector<std::vector<std::string>> docs;

    static SyntheticCorpus make(std::mt19937_64& rng, std::size_t n_docs, std::size_t vocab_size) {
        SyntheticCorpus c;
        for (std::size_t i = 0; i < vocab_size; ++i) c.vocab.push_back("w" + std::to_string(i));
        std::vector<double> weights;
        for (std::size_t i = 0; i < vocab_size; ++i) weights.push_back(1.0 / static_cast<double>(i + 1));
        std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
        std::uniform_int_distribution<int> len(1, 60);
        for (std::size_t d = 0; d < n_docs; ++d) {
            std::vector<std::string> doc;
            int l = len(rng);
            for (int i = 0; i < l; ++i) doc.push_back(c.vocab[word(rng)]);
            c.docs.push_back(std::move(doc));
        }
        return c;
    }

    std::vector<std::string> query(std::mt19937_64& rng) const {
        std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
        std::uniform_int_distribution<int> len(1, 6);
        std::vector<std::string> q;
        int l = len(rng);
        for (int i = 0; i < l; ++i) {
            // occasional out-of-vocabulary term
            q.push_back(pick(rng) % 17 == 0 ? "zz" + std::to_string(i) : vocab[pick(rng)]);
        }
        return q;
    }

    static std::string join(const std::vector<std::string>& toks) {
        std::string s;
        for (const auto& t : toks) s += (s.empty() ? "" : " ") + t;
        return s;
    }

    static std::string doc_id(std::size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "d%03zu", i);
        return buf;
    }
};

}  // namespace kgx::testing
