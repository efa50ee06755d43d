#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tablerag/corpus.hpp"
#include "tablerag/error.hpp"

namespace tablerag {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

class EmbedderPort {
public:
    virtual ~EmbedderPort() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

class RerankerPort {
public:
    virtual ~RerankerPort() = default;
    /// One relevance score per candidate, higher is better.
    virtual std::vector<double> score(const std::string& query,
                                      const std::vector<std::string>& candidates) = 0;
};

/// Deterministic offline embedder: tokens hashed into a fixed-dimension
/// bag-of-words vector, L2-normalized. Same text always yields the same
/// vector, on any platform.
class HashingEmbedder : public EmbedderPort {
public:
    explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

    EmbeddingVector embed_one(const std::string& text);

private:
    std::size_t dim_;
};

/// Reranker backed by an embedder: score = cosine(query, candidate).
class EmbeddingReranker : public RerankerPort {
public:
    explicit EmbeddingReranker(std::shared_ptr<EmbedderPort> embedder)
        : embedder_(std::move(embedder)) {}
    std::vector<double> score(const std::string& query,
                              const std::vector<std::string>& candidates) override;

private:
    std::shared_ptr<EmbedderPort> embedder_;
};

struct RetrievalHit {
    std::string chunk_id;
    double score = 0.0;
    enum class Stage { recall, rerank } stage = Stage::recall;
};

struct RetrievalSet {
    std::string query;
    std::vector<RetrievalHit> recall_hits;
    std::vector<RetrievalHit> rerank_hits;
    bool degraded = false;  // reranker failed, fell back to recall order
};

struct IndexEntry {
    std::string chunk_id;
    EmbeddingVector vector;
};

/// Exhaustive-scan vector index. Immutable once built; concurrent reads are
/// safe.
class VectorIndex {
public:
    static VectorIndex build(const CorpusStore& store, EmbedderPort& embedder);

    std::size_t size() const { return entries_.size(); }
    const std::vector<IndexEntry>& entries() const { return entries_; }

    /// Top-N by cosine similarity, descending, ties broken by ascending
    /// chunk_id.
    std::vector<RetrievalHit> recall(const std::string& query, std::size_t n,
                                     EmbedderPort& embedder) const;

    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path);

private:
    std::vector<IndexEntry> entries_;
};

/// Top-k by reranker score over recall hits. On reranker failure the recall
/// order is kept, truncated to k, and `degraded` is set on the result.
std::vector<RetrievalHit> rerank(const std::string& query,
                                 const std::vector<RetrievalHit>& hits,
                                 const CorpusStore& store, std::size_t k,
                                 RerankerPort& reranker, bool* degraded = nullptr);

struct HttpPortConfig {
    std::string endpoint;  // e.g. http://host:port/embed
    std::string api_key_env;
    int timeout_seconds = 30;
};

/// Remote embedder: POST {"texts": [...]} -> {"vectors": [[...]...]}.
class HttpEmbedder : public EmbedderPort {
public:
    explicit HttpEmbedder(HttpPortConfig config) : config_(std::move(config)) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    HttpPortConfig config_;
};

/// Remote reranker: POST {"query":..., "candidates": [...]} -> {"scores": [...]}.
class HttpReranker : public RerankerPort {
public:
    explicit HttpReranker(HttpPortConfig config) : config_(std::move(config)) {}
    std::vector<double> score(const std::string& query,
                              const std::vector<std::string>& candidates) override;

private:
    HttpPortConfig config_;
};

}  // namespace tablerag
