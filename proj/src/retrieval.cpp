#include "tablerag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace tablerag {

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dim() != v.dim()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "cosine: dim " + std::to_string(u.dim()) + " vs " + std::to_string(v.dim()));
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.dim(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        throw Error(ErrorKind::ZeroVector, "cosine: zero vector");
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace {

// FNV-1a, pinned here so index files stay stable across platforms.
std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

EmbeddingVector HashingEmbedder::embed_one(const std::string& text) {
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    for (const auto& token : whitespace_tokenize(lowercase(text))) {
        v.values[fnv1a(token) % dim_] += 1.0;
    }
    double norm = 0.0;
    for (double x : v.values) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v.values) x /= norm;
    } else {
        v.values[0] = 1.0;  // empty text still needs a valid direction
    }
    return v;
}

std::vector<EmbeddingVector> HashingEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

std::vector<double> EmbeddingReranker::score(const std::string& query,
                                             const std::vector<std::string>& candidates) {
    std::vector<std::string> texts;
    texts.reserve(candidates.size() + 1);
    texts.push_back(query);
    for (const auto& c : candidates) texts.push_back(c);
    auto vectors = embedder_->embed(texts);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (std::size_t i = 1; i < vectors.size(); ++i) {
        scores.push_back(cosine(vectors[0], vectors[i]));
    }
    return scores;
}

VectorIndex VectorIndex::build(const CorpusStore& store, EmbedderPort& embedder) {
    VectorIndex index;
    if (store.chunks.empty()) return index;
    std::vector<std::string> texts;
    texts.reserve(store.chunks.size());
    for (const auto& c : store.chunks) texts.push_back(c.text);
    auto vectors = embedder.embed(texts);
    if (vectors.size() != store.chunks.size()) {
        throw Error(ErrorKind::EmbedderFailure, "embedder returned wrong count");
    }
    std::size_t dim = vectors.empty() ? 0 : vectors[0].dim();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].dim() != dim) {
            throw Error(ErrorKind::EmbedderFailure, "embedder returned non-uniform dims");
        }
        index.entries_.push_back({store.chunks[i].chunk_id, std::move(vectors[i])});
    }
    return index;
}

std::vector<RetrievalHit> VectorIndex::recall(const std::string& query, std::size_t n,
                                              EmbedderPort& embedder) const {
    std::vector<RetrievalHit> hits;
    if (entries_.empty() || n == 0) return hits;
    auto qv = embedder.embed({query});
    if (qv.size() != 1) {
        throw Error(ErrorKind::EmbedderFailure, "embedder returned wrong count for query");
    }
    hits.reserve(entries_.size());
    for (const auto& e : entries_) {
        hits.push_back({e.chunk_id, cosine(qv[0], e.vector), RetrievalHit::Stage::recall});
    }
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk_id < b.chunk_id;
    });
    if (hits.size() > n) hits.resize(n);
    return hits;
}

std::vector<RetrievalHit> rerank(const std::string& query,
                                 const std::vector<RetrievalHit>& hits,
                                 const CorpusStore& store, std::size_t k,
                                 RerankerPort& reranker, bool* degraded) {
    if (degraded) *degraded = false;
    std::vector<RetrievalHit> out;
    if (hits.empty() || k == 0) return out;

    std::vector<std::string> texts;
    texts.reserve(hits.size());
    for (const auto& h : hits) {
        const Chunk* c = store.find_chunk(h.chunk_id);
        texts.push_back(c ? c->text : "");
    }

    std::vector<double> scores;
    try {
        scores = reranker.score(query, texts);
        if (scores.size() != hits.size()) {
            throw Error(ErrorKind::RerankerFailure, "reranker returned wrong count");
        }
    } catch (const std::exception&) {
        // Degrade to recall order rather than aborting the query.
        if (degraded) *degraded = true;
        out = hits;
        if (out.size() > k) out.resize(k);
        for (auto& h : out) h.stage = RetrievalHit::Stage::rerank;
        return out;
    }

    out = hits;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].score = scores[i];
        out[i].stage = RetrievalHit::Stage::rerank;
    }
    std::sort(out.begin(), out.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk_id < b.chunk_id;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

void VectorIndex::save(const std::string& path) const {
    std::ofstream out(path);
    for (const auto& e : entries_) {
        nlohmann::ordered_json j{{"chunk_id", e.chunk_id}, {"vector", e.vector.values}};
        out << j.dump() << "\n";
    }
}

VectorIndex VectorIndex::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::StoreNotFound, "index file not found: " + path);
    }
    VectorIndex index;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        IndexEntry e;
        e.chunk_id = j.at("chunk_id");
        e.vector.values = j.at("vector").get<std::vector<double>>();
        index.entries_.push_back(std::move(e));
    }
    return index;
}

// --- HTTP ports ---

namespace {

nlohmann::json http_post_json(const HttpPortConfig& config, const nlohmann::json& body) {
    auto scheme_end = config.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::ConfigError, "bad endpoint: " + config.endpoint);
    }
    auto path_start = config.endpoint.find('/', scheme_end + 3);
    std::string host = config.endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : config.endpoint.substr(path_start);

    httplib::Client client(host);
    client.set_read_timeout(config.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        if (const char* key = std::getenv(config.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw Error(ErrorKind::TransportError,
                    "HTTP request to " + config.endpoint + " failed" +
                        (res ? " with status " + std::to_string(res->status) : ""));
    }
    return nlohmann::json::parse(res->body);
}

}  // namespace

std::vector<EmbeddingVector> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    auto response = http_post_json(config_, nlohmann::json{{"texts", texts}});
    std::vector<EmbeddingVector> out;
    for (const auto& v : response.at("vectors")) {
        out.push_back({v.get<std::vector<double>>()});
    }
    return out;
}

std::vector<double> HttpReranker::score(const std::string& query,
                                        const std::vector<std::string>& candidates) {
    auto response =
        http_post_json(config_, nlohmann::json{{"query", query}, {"candidates", candidates}});
    return response.at("scores").get<std::vector<double>>();
}

}  // namespace tablerag
