#include "tablerag/reasoner.hpp"

#include <fstream>
#include <set>

#include "tablerag/prompts.hpp"

namespace tablerag {

const char* to_string(TraceStatus status) {
    switch (status) {
        case TraceStatus::answered: return "answered";
        case TraceStatus::max_iterations_exceeded: return "max_iterations_exceeded";
        case TraceStatus::refused: return "refused";
        case TraceStatus::transport_failed: return "transport_failed";
    }
    return "unknown";
}

Reasoner::Reasoner(const CorpusStore& store, const VectorIndex& index,
                   std::shared_ptr<EmbedderPort> embedder,
                   std::shared_ptr<RerankerPort> reranker,
                   std::shared_ptr<ChatProvider> provider, SqlExecFn sql_exec,
                   ReasonerConfig config, AblationFlags flags, Gateway::SleepFn sleep)
    : store_(store),
      index_(index),
      embedder_(std::move(embedder)),
      reranker_(std::move(reranker)),
      gateway_(std::move(provider), config.max_retries, std::move(sleep)),
      sql_exec_(std::move(sql_exec)),
      config_(config),
      flags_(flags) {}

RetrievalSet Reasoner::retrieve(const std::string& query) {
    RetrievalSet set;
    set.query = query;
    set.recall_hits = index_.recall(query, config_.recall_n, *embedder_);
    set.rerank_hits =
        rerank(query, set.recall_hits, store_, config_.rerank_k, *reranker_, &set.degraded);
    return set;
}

std::pair<std::string, std::optional<TableSchema>> Reasoner::seed_context(
    const std::string& query) {
    if (flags_.no_context_decomposition) return {"", std::nullopt};
    auto set = retrieve(query);
    if (set.rerank_hits.empty()) return {"", std::nullopt};
    for (const auto& hit : set.rerank_hits) {
        if (const TableSchema* schema = store_.schema_for_chunk(hit.chunk_id)) {
            const Chunk* chunk = store_.find_chunk(hit.chunk_id);
            return {chunk ? chunk->text : "", *schema};
        }
    }
    const Chunk* top = store_.find_chunk(set.rerank_hits.front().chunk_id);
    return {top ? top->text : "", std::nullopt};
}

NextAction Reasoner::decompose_step(std::vector<ChatMessage>& conversation, Trace& trace) {
    std::vector<ToolSpec> tools{solve_subquery_tool()};
    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatMessage reply = gateway_.chat(conversation, tools);
        conversation.push_back(reply);
        if (reply.tool_call) {
            std::string subquery = reply.tool_call->arguments.value("subquery", "");
            if (!subquery.empty()) {
                return {NextAction::Kind::subquery, subquery, reply.tool_call->id};
            }
        } else if (auto answer = prompts::parse_answer_marker(reply.content)) {
            return {NextAction::Kind::final_answer, *answer, ""};
        }
        // Content without the answer marker: one corrective re-prompt.
        trace.protocol_violation = true;
        conversation.push_back(ChatMessage::user_msg(prompts::decompose_format_reminder()));
    }
    throw Error(ErrorKind::ProtocolViolation,
                "decomposer violated the tool/answer protocol twice");
}

std::vector<TableSchema> schema_set(const CorpusStore& store,
                                    const std::vector<RetrievalHit>& rerank_hits) {
    std::vector<TableSchema> schemas;
    std::set<std::string> seen;
    for (const auto& hit : rerank_hits) {
        auto it = store.schema_map.find(hit.chunk_id);
        if (it == store.schema_map.end()) continue;
        if (!seen.insert(it->second).second) continue;
        auto sit = store.schemas.find(it->second);
        if (sit != store.schemas.end()) schemas.push_back(sit->second);
    }
    return schemas;
}

std::vector<TableSchema> Reasoner::schema_set_for(
    const RetrievalSet& retrieval, const std::optional<TableSchema>& seed_schema) const {
    if (flags_.no_text_retrieval) {
        std::vector<TableSchema> schemas;
        if (seed_schema) schemas.push_back(*seed_schema);
        return schemas;
    }
    return schema_set(store_, retrieval.rerank_hits);
}

IterationRecord Reasoner::solve_subquery(const SubQuery& subquery,
                                         const std::optional<TableSchema>& seed_schema) {
    IterationRecord record;
    record.subquery = subquery;
    record.retrieval.query = subquery.text;

    if (!flags_.no_text_retrieval) {
        record.retrieval = retrieve(subquery.text);
    }
    record.schema_set = schema_set_for(record.retrieval, seed_schema);

    if (!record.schema_set.empty() && !flags_.no_sql) {
        record.nl2sql_prompt = prompts::nl2sql(record.schema_set, subquery.text);
        ChatMessage reply = gateway_.chat({ChatMessage::user_msg(record.nl2sql_prompt)});
        record.sql = prompts::extract_sql(reply.content);

        SqlExecRequest req = config_.sql_defaults;
        req.sql = *record.sql;
        // Errors flow into composition; the SQL path never aborts the
        // iteration.
        record.exec_result = sql_exec_(req);
    }

    std::vector<std::string> chunk_texts;
    if (!flags_.no_text_retrieval) {
        for (const auto& hit : record.retrieval.rerank_hits) {
            if (const Chunk* chunk = store_.find_chunk(hit.chunk_id)) {
                chunk_texts.push_back(chunk->text);
            }
        }
    }
    std::optional<std::string> exec_markdown;
    if (record.exec_result) exec_markdown = record.exec_result->to_markdown();
    record.compose_prompt = prompts::compose(chunk_texts, record.schema_set, record.sql,
                                             exec_markdown, subquery.text);
    ChatMessage reply = gateway_.chat({ChatMessage::user_msg(record.compose_prompt)});
    record.answer = reply.content;
    return record;
}

Trace Reasoner::run(const std::string& query) {
    Trace trace;
    trace.query = query;
    auto started = std::chrono::steady_clock::now();
    auto finish = [&](TraceStatus status) {
        trace.status = status;
        trace.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        return trace;
    };

    try {
        auto [seed_content, seed_schema] = seed_context(query);
        trace.seed_table_content = seed_content;
        trace.seed_schema = seed_schema;
        trace.decompose_prompt = prompts::decompose(seed_content, query);

        std::vector<ChatMessage> conversation{ChatMessage::user_msg(trace.decompose_prompt)};
        while (true) {
            NextAction action = decompose_step(conversation, trace);
            if (action.kind == NextAction::Kind::final_answer) {
                trace.final_answer = action.text;
                return finish(TraceStatus::answered);
            }
            if (static_cast<int>(trace.iterations.size()) >= config_.max_iterations) {
                // A further subquery would exceed the cap.
                return finish(TraceStatus::max_iterations_exceeded);
            }
            SubQuery subquery{static_cast<int>(trace.iterations.size()) + 1, action.text};
            IterationRecord record = solve_subquery(subquery, seed_schema);
            conversation.push_back(
                ChatMessage::tool_result(action.tool_call_id, record.answer));
            trace.iterations.push_back(std::move(record));
        }
    } catch (const Error& e) {
        trace.error = e.what();
        if (e.kind() == ErrorKind::ProtocolViolation) {
            return finish(TraceStatus::refused);
        }
        return finish(TraceStatus::transport_failed);
    }
}

// --- serialization ---

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json schema_json(const TableSchema& schema) {
    return ordered_json::parse(schema.to_json());
}

ordered_json hits_json(const std::vector<RetrievalHit>& hits) {
    ordered_json arr = ordered_json::array();
    for (const auto& h : hits) {
        arr.push_back({{"chunk_id", h.chunk_id},
                       {"score", h.score},
                       {"stage", h.stage == RetrievalHit::Stage::recall ? "recall" : "rerank"}});
    }
    return arr;
}

ordered_json exec_json(const SqlExecResult& r) {
    return ordered_json{{"status", r.ok() ? "ok" : "error"},
                        {"columns", r.columns},
                        {"rows", r.rows},
                        {"truncated", r.truncated},
                        {"error_message", r.error_message}};
}

}  // namespace

ordered_json Trace::to_json() const {
    ordered_json j;
    j["query"] = query;
    j["status"] = to_string(status);
    j["final_answer"] = final_answer ? ordered_json(*final_answer) : ordered_json(nullptr);
    j["seed_table_content"] = seed_table_content;
    j["seed_schema"] = seed_schema ? schema_json(*seed_schema) : ordered_json(nullptr);
    j["decompose_prompt"] = decompose_prompt;
    j["protocol_violation"] = protocol_violation;
    j["error"] = error;
    j["iterations"] = ordered_json::array();
    for (const auto& it : iterations) {
        ordered_json ji;
        ji["index"] = it.subquery.index;
        ji["subquery"] = it.subquery.text;
        ji["recall_hits"] = hits_json(it.retrieval.recall_hits);
        ji["rerank_hits"] = hits_json(it.retrieval.rerank_hits);
        ji["retrieval_degraded"] = it.retrieval.degraded;
        ji["schema_set"] = ordered_json::array();
        for (const auto& s : it.schema_set) ji["schema_set"].push_back(schema_json(s));
        ji["sql"] = it.sql ? ordered_json(*it.sql) : ordered_json(nullptr);
        ji["exec_result"] = it.exec_result ? exec_json(*it.exec_result) : ordered_json(nullptr);
        ji["nl2sql_prompt"] = it.nl2sql_prompt;
        ji["compose_prompt"] = it.compose_prompt;
        ji["answer"] = it.answer;
        j["iterations"].push_back(std::move(ji));
    }
    j["wall_time_ms"] = wall_time.count();
    return j;
}

void write_trace(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    out << trace.to_json().dump(2) << "\n";
}

}  // namespace tablerag
