#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablerag/corpus.hpp"
#include "tablerag/llm.hpp"
#include "tablerag/retrieval.hpp"
#include "tablerag/table_store.hpp"

namespace tablerag {

struct SubQuery {
    int index = 1;  // 1-based iteration number
    std::string text;
};

struct IterationRecord {
    SubQuery subquery;
    RetrievalSet retrieval;
    std::vector<TableSchema> schema_set;  // deduplicated by table, hit order
    std::optional<std::string> sql;
    std::optional<SqlExecResult> exec_result;
    std::string answer;  // a_t
    std::string nl2sql_prompt;
    std::string compose_prompt;
};

enum class TraceStatus { answered, max_iterations_exceeded, refused, transport_failed };

const char* to_string(TraceStatus status);

struct Trace {
    std::string query;
    std::string seed_table_content;
    std::optional<TableSchema> seed_schema;
    std::string decompose_prompt;
    std::vector<IterationRecord> iterations;
    std::optional<std::string> final_answer;
    TraceStatus status = TraceStatus::transport_failed;
    bool protocol_violation = false;  // corrective re-prompt was needed
    std::string error;                // populated on transport failure
    std::chrono::milliseconds wall_time{0};

    nlohmann::ordered_json to_json() const;
};

struct AblationFlags {
    bool no_context_decomposition = false;
    bool no_sql = false;
    bool no_text_retrieval = false;
};

struct ReasonerConfig {
    std::size_t recall_n = 30;
    std::size_t rerank_k = 3;
    int max_iterations = 5;
    int max_retries = 3;
    SqlExecRequest sql_defaults;  // timeout / max_rows budget per statement
};

/// The step outcome of the decomposer: either one more subquery or the
/// final answer.
struct NextAction {
    enum class Kind { subquery, final_answer } kind;
    std::string text;
    std::string tool_call_id;  // set for subqueries
};

/// Seam over SQL execution; tests wrap it with call recorders.
using SqlExecFn = std::function<SqlExecResult(const SqlExecRequest&)>;

/// S^t: the deduplicated image of the rerank hits under the chunk->schema
/// map, in hit order. Prose hits contribute nothing.
std::vector<TableSchema> schema_set(const CorpusStore& store,
                                    const std::vector<RetrievalHit>& rerank_hits);

/// Online iterative loop: seed context once, then alternate decomposition
/// and subquery resolution until the decomposer emits the answer marker or
/// the iteration cap is hit.
class Reasoner {
public:
    Reasoner(const CorpusStore& store, const VectorIndex& index,
             std::shared_ptr<EmbedderPort> embedder, std::shared_ptr<RerankerPort> reranker,
             std::shared_ptr<ChatProvider> provider, SqlExecFn sql_exec,
             ReasonerConfig config = {}, AblationFlags flags = {},
             Gateway::SleepFn sleep = nullptr);

    Trace run(const std::string& query);

    /// Top-1 reranked table chunk and its schema; falls back to the top-1
    /// chunk with no schema when nothing table-origin is reranked.
    std::pair<std::string, std::optional<TableSchema>> seed_context(const std::string& query);

    NextAction decompose_step(std::vector<ChatMessage>& conversation, Trace& trace);

    IterationRecord solve_subquery(const SubQuery& subquery,
                                   const std::optional<TableSchema>& seed_schema);

private:
    RetrievalSet retrieve(const std::string& query);
    std::vector<TableSchema> schema_set_for(const RetrievalSet& retrieval,
                                            const std::optional<TableSchema>& seed_schema) const;

    const CorpusStore& store_;
    const VectorIndex& index_;
    std::shared_ptr<EmbedderPort> embedder_;
    std::shared_ptr<RerankerPort> reranker_;
    Gateway gateway_;
    SqlExecFn sql_exec_;
    ReasonerConfig config_;
    AblationFlags flags_;
};

void write_trace(const Trace& trace, const std::string& path);

}  // namespace tablerag
