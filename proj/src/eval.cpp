#include "tablerag/eval.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "tablerag/prompts.hpp"

namespace fs = std::filesystem;

namespace tablerag {

std::vector<DatasetRecord> load_dataset(const std::string& path,
                                        const std::string& corpus_root) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::SchemaViolation, "dataset file not found: " + path);
    }
    std::vector<DatasetRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::SchemaViolation,
                        "dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        DatasetRecord r;
        r.id = j.value("id", "line" + std::to_string(line_no));
        r.question = j.value("question", "");
        r.gold_answer = j.value("answer", "");
        if (r.question.empty() || r.gold_answer.empty()) {
            throw Error(ErrorKind::SchemaViolation,
                        "dataset line " + std::to_string(line_no) +
                            ": question and answer are required");
        }
        if (j.contains("table")) {
            if (j["table"].is_array()) {
                r.table_refs = j["table"].get<std::vector<std::string>>();
            } else {
                r.table_refs.push_back(j["table"].get<std::string>());
            }
        }
        if (j.contains("docs")) r.doc_refs = j["docs"].get<std::vector<std::string>>();
        r.source_kind = r.doc_refs.empty() ? DatasetRecord::SourceKind::single_source
                                           : DatasetRecord::SourceKind::multi_source;
        if (j.contains("sql_query")) r.sql_query = j["sql_query"].get<std::string>();
        if (j.contains("sql")) r.sql = j["sql"].get<std::string>();
        if (j.contains("sql_ans")) r.sql_ans = j["sql_ans"].get<std::string>();
        if (j.contains("transcript")) r.transcript = j["transcript"].get<std::string>();
        if (j.contains("judge_transcript")) {
            r.judge_transcript = j["judge_transcript"].get<std::string>();
        }

        if (!corpus_root.empty()) {
            for (const auto& ref : r.table_refs) {
                if (!fs::exists(fs::path(corpus_root) / ref)) {
                    throw Error(ErrorKind::MissingReference,
                                "dataset line " + std::to_string(line_no) +
                                    ": missing table file " + ref);
                }
            }
            for (const auto& ref : r.doc_refs) {
                if (!fs::exists(fs::path(corpus_root) / ref)) {
                    throw Error(ErrorKind::MissingReference,
                                "dataset line " + std::to_string(line_no) +
                                    ": missing document file " + ref);
                }
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

namespace {

std::optional<int> parse_rating(const std::string& response) {
    static const std::regex pattern(R"(Rating:\s*\[\[([01])\]\])");
    std::smatch m;
    if (std::regex_search(response, m, pattern)) {
        return m[1].str() == "1" ? 1 : 0;
    }
    return std::nullopt;
}

}  // namespace

JudgeVerdict judge(const std::string& question, const std::string& gold,
                   const std::string& predicted, Gateway& gateway) {
    if (predicted == kUnansweredAnswer) {
        return {0, ""};
    }
    std::vector<ChatMessage> messages{
        ChatMessage::user_msg(prompts::judge(question, gold, predicted))};
    ChatMessage reply = gateway.chat(messages);
    if (auto score = parse_rating(reply.content)) {
        return {*score, reply.content};
    }
    // One re-ask with the format requirement restated, then score 0.
    messages.push_back(reply);
    messages.push_back(ChatMessage::user_msg(
        "Your previous output did not match the required format. Output exactly one line: "
        "Rating: [[0]] or Rating: [[1]]"));
    ChatMessage retry = gateway.chat(messages);
    if (auto score = parse_rating(retry.content)) {
        return {*score, retry.content};
    }
    return {0, retry.content};
}

EvalReport run_eval(const std::vector<DatasetRecord>& dataset, const TraceFn& trace_fn,
                    const JudgeFn& judge_fn, std::size_t workers) {
    EvalReport report;
    report.records.resize(dataset.size());
    if (dataset.empty()) return report;
    workers = std::max<std::size_t>(1, std::min(workers, dataset.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= dataset.size()) break;
            const DatasetRecord& rec = dataset[i];
            EvalReport::PerRecord& out = report.records[i];
            out.id = rec.id;
            Trace trace;
            try {
                trace = trace_fn(rec);
            } catch (const std::exception& e) {
                trace.status = TraceStatus::transport_failed;
                trace.error = e.what();
            }
            out.status = trace.status;
            out.iterations = trace.iterations.size();
            out.protocol_violation = trace.protocol_violation;
            for (const auto& it : trace.iterations) {
                if (it.exec_result && !it.exec_result->ok()) out.sql_error = true;
            }
            out.predicted = trace.final_answer ? *trace.final_answer : kUnansweredAnswer;
            try {
                out.score = judge_fn(rec, out.predicted).score;
            } catch (const std::exception&) {
                out.score = 0;
            }
        }
    };

    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // Single-threaded reduction.
    std::size_t single_n = 0, multi_n = 0, single_correct = 0, multi_correct = 0, correct = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& rec = dataset[i];
        const auto& out = report.records[i];
        correct += out.score;
        if (rec.source_kind == DatasetRecord::SourceKind::single_source) {
            ++single_n;
            single_correct += out.score;
        } else {
            ++multi_n;
            multi_correct += out.score;
        }
        bool finished = out.status == TraceStatus::answered;
        if (!finished) {
            ++report.bucket_gt5_or_unfinished;
        } else if (out.iterations <= 2) {
            ++report.bucket_lt3;
        } else if (out.iterations <= 4) {
            ++report.bucket_3_4;
        } else if (out.iterations == 5) {
            ++report.bucket_exactly5;
        } else {
            ++report.bucket_gt5_or_unfinished;
        }
        if (out.status == TraceStatus::refused ||
            out.status == TraceStatus::max_iterations_exceeded ||
            out.status == TraceStatus::transport_failed) {
            ++report.task_incompletions;
        }
        if (finished && out.score == 0 && (out.sql_error || out.protocol_violation)) {
            ++report.reasoning_failures;
        }
    }
    report.accuracy_overall = static_cast<double>(correct) / dataset.size();
    report.accuracy_single_source =
        single_n ? static_cast<double>(single_correct) / single_n : 0.0;
    report.accuracy_multi_source = multi_n ? static_cast<double>(multi_correct) / multi_n : 0.0;
    return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["note"] =
        "iteration buckets are 1-2 / 3-4 / exactly 5 / >5-or-unfinished; the 3-4 bucket "
        "excludes 5-step runs, which get their own bucket";
    j["accuracy"] = {{"overall", accuracy_overall},
                     {"single_source", accuracy_single_source},
                     {"multi_source", accuracy_multi_source}};
    j["iteration_buckets"] = {{"lt3", bucket_lt3},
                              {"3_4", bucket_3_4},
                              {"exactly5", bucket_exactly5},
                              {"gt5_or_unfinished", bucket_gt5_or_unfinished}};
    j["error_categories"] = {{"reasoning_failure", reasoning_failures},
                             {"task_incompletion", task_incompletions}};
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        j["records"].push_back({{"id", r.id},
                                {"score", r.score},
                                {"predicted", r.predicted},
                                {"status", to_string(r.status)},
                                {"iterations", r.iterations}});
    }
    return j;
}

std::string EvalReport::summary() const {
    std::ostringstream out;
    out << "records: " << records.size() << "\n"
        << "accuracy overall: " << accuracy_overall
        << " (single-source: " << accuracy_single_source
        << ", multi-source: " << accuracy_multi_source << ")\n"
        << "iteration buckets (1-2 / 3-4 / 5 / >5-or-unfinished): " << bucket_lt3 << " / "
        << bucket_3_4 << " / " << bucket_exactly5 << " / " << bucket_gt5_or_unfinished << "\n"
        << "reasoning failures: " << reasoning_failures
        << ", task incompletions: " << task_incompletions << "\n";
    return out.str();
}

}  // namespace tablerag
