#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablerag/llm.hpp"
#include "tablerag/reasoner.hpp"

namespace tablerag {

struct DatasetRecord {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::vector<std::string> table_refs;
    std::vector<std::string> doc_refs;
    enum class SourceKind { single_source, multi_source } source_kind = SourceKind::single_source;
    // HeteQA passthrough fields.
    std::optional<std::string> sql_query;
    std::optional<std::string> sql;
    std::optional<std::string> sql_ans;
    // Optional per-record scripted transcript paths (deterministic eval
    // fixtures), relative to the dataset file.
    std::optional<std::string> transcript;
    std::optional<std::string> judge_transcript;
};

struct JudgeVerdict {
    int score = 0;  // 0 or 1
    std::string raw_response;
};

struct EvalReport {
    double accuracy_overall = 0.0;
    double accuracy_single_source = 0.0;
    double accuracy_multi_source = 0.0;
    // Iteration buckets: 1-2 / 3-4 / exactly 5 / >5-or-unfinished. The
    // header notes that the middle buckets differ from overlapping
    // "3-5 steps" phrasing by pinning 5 to its own bucket.
    std::size_t bucket_lt3 = 0;
    std::size_t bucket_3_4 = 0;
    std::size_t bucket_exactly5 = 0;
    std::size_t bucket_gt5_or_unfinished = 0;
    std::size_t reasoning_failures = 0;
    std::size_t task_incompletions = 0;

    struct PerRecord {
        std::string id;
        int score = 0;
        std::string predicted;
        TraceStatus status = TraceStatus::transport_failed;
        std::size_t iterations = 0;
        bool sql_error = false;           // any iteration's SQL execution errored
        bool protocol_violation = false;  // decomposer needed a format re-prompt
    };
    std::vector<PerRecord> records;

    nlohmann::ordered_json to_json() const;
    std::string summary() const;
};

/// Parses a HeteQA-shaped JSONL dataset and checks that referenced table
/// and document files exist under `corpus_root`. Pass an empty root to
/// skip the existence check.
std::vector<DatasetRecord> load_dataset(const std::string& path,
                                        const std::string& corpus_root);

inline constexpr const char* kUnansweredAnswer = "[UNANSWERED]";

/// Binary LLM-as-judge verdict. "[UNANSWERED]" predictions score 0 without
/// a judge call; an unparseable verdict gets one re-ask, then 0.
JudgeVerdict judge(const std::string& question, const std::string& gold,
                   const std::string& predicted, Gateway& gateway);

/// Produces a trace for one question; the harness clones providers per
/// record so traces can run in parallel.
using TraceFn = std::function<Trace(const DatasetRecord&)>;
using JudgeFn = std::function<JudgeVerdict(const DatasetRecord&, const std::string& predicted)>;

EvalReport run_eval(const std::vector<DatasetRecord>& dataset, const TraceFn& trace_fn,
                    const JudgeFn& judge_fn, std::size_t workers = 1);

}  // namespace tablerag
