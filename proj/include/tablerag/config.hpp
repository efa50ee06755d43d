#pragma once

#include <optional>
#include <string>

#include "tablerag/corpus.hpp"
#include "tablerag/llm.hpp"
#include "tablerag/reasoner.hpp"
#include "tablerag/retrieval.hpp"

namespace tablerag {

/// Operator-facing configuration. Defaults equal the reference constants:
/// recall 30, rerank 3, chunks of 1000 tokens with 200 overlap, at most 5
/// iterations.
struct AppConfig {
    std::string corpus_dir;
    std::string out_dir = "tablerag_store";

    std::size_t recall_n = 30;
    std::size_t rerank_k = 3;
    ChunkParams chunking{1000, 200};
    int max_iterations = 5;
    std::size_t workers = 1;

    AblationFlags ablation;

    ProviderConfig main_provider;
    std::optional<ProviderConfig> judge_provider;  // defaults to main
    std::optional<HttpPortConfig> embedder;        // defaults to hashing embedder
    std::optional<HttpPortConfig> reranker;        // defaults to embedding reranker

    std::optional<std::string> scripted_transcript;  // path to a JSONL transcript

    void validate() const;

    /// Merges values from a JSON config file; fields absent in the file
    /// keep their current values.
    void merge_file(const std::string& path);

    /// Reads provider overrides from the environment
    /// (TABLERAG_ENDPOINT, TABLERAG_MODEL, TABLERAG_API_KEY and the
    /// per-role TABLERAG_JUDGE_* variants).
    void merge_env();
};

}  // namespace tablerag
