// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Criterion 10 needs a live chat endpoint and only runs when
// TABLERAG_ACCEPT_NETWORK=1 is set.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "tablerag/config.hpp"
#include "tablerag/eval.hpp"
#include "tablerag/prompts.hpp"
#include "tablerag/reasoner.hpp"

using namespace tablerag;

namespace {

const std::string kFixtures = FIXTURES_DIR;
int failures = 0;

void report(int criterion, const std::string& label, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << label;
    if (!ok && !detail.empty()) std::cout << " -- " << detail;
    std::cout << "\n";
    if (!ok) ++failures;
}

void run(int criterion, const std::string& label, const std::function<void()>& body) {
    try {
        body();
        report(criterion, label, true);
    } catch (const std::exception& e) {
        report(criterion, label, false, e.what());
    }
}

void require(bool cond, const std::string& message) {
    if (!cond) throw std::runtime_error(message);
}

struct Fixture {
    CorpusStore store;
    VectorIndex index;
    std::shared_ptr<HashingEmbedder> embedder = std::make_shared<HashingEmbedder>(256);
    std::shared_ptr<EmbeddingReranker> reranker;
    std::shared_ptr<TableStore> db = std::make_shared<TableStore>(":memory:");
    int sql_calls = 0;

    Fixture() {
        std::vector<Table> csv_tables;
        auto docs = read_corpus_dir(kFixtures + "/corpus", &csv_tables);
        store = build_corpus(docs, csv_tables);
        index = VectorIndex::build(store, *embedder);
        reranker = std::make_shared<EmbeddingReranker>(embedder);
        db->ingest_all(store);
    }

    Reasoner reasoner(std::shared_ptr<ChatProvider> provider, AblationFlags flags = {}) {
        return Reasoner(
            store, index, embedder, reranker, std::move(provider),
            [this](const SqlExecRequest& req) {
                ++sql_calls;
                return db->execute_readonly(req);
            },
            {}, flags, [](std::chrono::milliseconds) {});
    }
};

std::shared_ptr<ScriptedProvider> transcript(const std::string& name) {
    return std::make_shared<ScriptedProvider>(
        ScriptedProvider::from_jsonl_file(kFixtures + "/transcripts/" + name));
}

class EndlessDecomposer : public ChatProvider {
public:
    ChatMessage complete(const std::vector<ChatMessage>& messages,
                         const std::vector<ToolSpec>&) override {
        switch (classify_prompt(messages)) {
            case PromptKind::decompose:
                return ChatMessage::assistant_tool_call(
                    {"call_x", "solve_subquery", nlohmann::json{{"subquery", "again"}}});
            case PromptKind::nl2sql:
                return ChatMessage::assistant_msg("SELECT 1");
            default:
                return ChatMessage::assistant_msg("partial");
        }
    }
    bool retryable() const override { return false; }
};

std::string trace_fingerprint(Trace trace) {
    auto j = trace.to_json();
    // wall time is the one intentionally non-deterministic field
    j.erase("wall_time_ms");
    return j.dump(2);
}

// --- criteria ---

void criterion1_recall_oracle() {
    auto started = std::chrono::steady_clock::now();
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> count_dist(1, 100), words(0, 40), len(1, 12);
    HashingEmbedder embedder(64);
    for (int round = 0; round < 50; ++round) {
        CorpusStore store;
        int n = count_dist(rng);
        for (int i = 0; i < n; ++i) {
            Chunk c;
            c.chunk_id = "c" + std::to_string(i);
            int l = len(rng);
            for (int w = 0; w < l; ++w) c.text += "tok" + std::to_string(words(rng)) + " ";
            c.origin = {ChunkOrigin::Kind::text_document, "d"};
            store.chunks.push_back(std::move(c));
        }
        auto index = VectorIndex::build(store, embedder);
        std::string query = "tok1 tok2 tok3 tok4";
        auto got = index.recall(query, 30, embedder);

        auto qv = embedder.embed_one(query);
        std::vector<RetrievalHit> expected;
        for (const auto& e : index.entries()) {
            expected.push_back({e.chunk_id, cosine(qv, e.vector), RetrievalHit::Stage::recall});
        }
        std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.chunk_id < b.chunk_id;
        });
        if (expected.size() > 30) expected.resize(30);
        require(got.size() == expected.size(), "recall size mismatch");
        for (std::size_t i = 0; i < got.size(); ++i) {
            require(got[i].chunk_id == expected[i].chunk_id, "recall order diverges from oracle");
            require(std::abs(got[i].score - expected[i].score) < 1e-12, "recall score mismatch");
        }
    }
    auto elapsed = std::chrono::steady_clock::now() - started;
    require(elapsed < std::chrono::seconds(5), "runtime budget exceeded");
}

void criterion2_chunk_geometry() {
    auto started = std::chrono::steady_clock::now();
    std::mt19937 rng(23);
    std::uniform_int_distribution<std::size_t> total_dist(0, 5000);
    for (int i = 0; i < 300; ++i) {
        std::size_t total = total_dist(rng);
        ChunkParams params{1000, 200};
        auto spans = chunk_spans(total, params);
        if (total == 0) {
            require(spans.empty(), "empty stream must produce no spans");
            continue;
        }
        require(spans.front().first == 0 && spans.back().second == total,
                "spans must cover the stream");
        for (std::size_t s = 0; s < spans.size(); ++s) {
            require(spans[s].second > spans[s].first, "empty span");
            require(spans[s].second - spans[s].first <= params.chunk_size, "oversized span");
            if (s + 1 < spans.size()) {
                require(spans[s].second - spans[s].first == params.chunk_size,
                        "non-final chunk must be full-size");
                require(spans[s].second >= spans[s + 1].first, "gap between spans");
                if (s + 2 < spans.size()) {
                    require(spans[s + 1].first - spans[s].first ==
                                params.chunk_size - params.overlap,
                            "stride must be size - overlap");
                }
            }
        }
        // materialized chunks carry matching ids and spans
        std::string text;
        for (std::size_t t = 0; t < std::min<std::size_t>(total, 50); ++t) {
            text += "w" + std::to_string(t) + " ";
        }
        auto chunks = chunk_text(text, {ChunkOrigin::Kind::text_document, "d"}, "d", {10, 3});
        for (std::size_t k = 0; k < chunks.size(); ++k) {
            require(chunks[k].chunk_id == "d#" + std::to_string(k), "chunk id scheme");
            require(chunks[k].span_end > chunks[k].span_start, "chunk span invariant");
        }
    }
    auto elapsed = std::chrono::steady_clock::now() - started;
    require(elapsed < std::chrono::seconds(2), "runtime budget exceeded");
}

void criterion3_schema_map() {
    auto started = std::chrono::steady_clock::now();
    // two tables plus prose, small chunks so both tables span several chunks
    RawDocument doc{"mix", "",
                    "Some prose before any table appears in the document.\n"
                    "\n"
                    "# First Table\n"
                    "| a | b |\n| --- | --- |\n| 1 | 2 |\n| 3 | 4 |\n| 5 | 6 |\n"
                    "\n"
                    "Prose between the two tables, for good measure.\n"
                    "\n"
                    "# Second Table\n"
                    "| x | y |\n| --- | --- |\n| p | q |\n| r | s |\n| u | v |\n"};
    BuildParams params;
    params.chunking = {12, 3};
    auto store = build_corpus({doc}, {}, params);
    require(store.tables.size() == 2, "expected two tables");

    // totality + functionality of the chunk->schema map over table chunks
    std::size_t table_chunks = 0;
    for (const auto& c : store.chunks) {
        if (c.origin.is_table()) {
            ++table_chunks;
            auto it = store.schema_map.find(c.chunk_id);
            require(it != store.schema_map.end(), "table chunk missing from schema map");
            require(it->second == c.origin.id, "schema map must point at the origin table");
            require(store.schemas.count(it->second) == 1, "mapped schema must exist");
        } else {
            require(store.schema_map.count(c.chunk_id) == 0, "prose chunk mapped to a schema");
        }
    }
    require(table_chunks >= 4, "fixture should force multi-chunk tables");
    require(store.schema_map.size() == table_chunks, "map domain must be the table chunks");

    // S^t equals brute-force first-occurrence dedup on random rerank subsets
    std::mt19937 rng(31);
    for (int round = 0; round < 20; ++round) {
        std::vector<Chunk> shuffled = store.chunks;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::size_t take = 1 + rng() % shuffled.size();
        std::vector<RetrievalHit> hits;
        for (std::size_t i = 0; i < take; ++i) {
            hits.push_back({shuffled[i].chunk_id, 1.0 - 0.01 * i, RetrievalHit::Stage::rerank});
        }
        auto got = schema_set(store, hits);

        std::vector<std::string> expected_ids;
        for (const auto& hit : hits) {
            const Chunk* chunk = store.find_chunk(hit.chunk_id);
            if (!chunk->origin.is_table()) continue;
            if (std::find(expected_ids.begin(), expected_ids.end(), chunk->origin.id) ==
                expected_ids.end()) {
                expected_ids.push_back(chunk->origin.id);
            }
        }
        require(got.size() == expected_ids.size(), "schema set size diverges from oracle");
        for (std::size_t i = 0; i < got.size(); ++i) {
            require(got[i].table_name == store.schemas.at(expected_ids[i]).table_name,
                    "schema set order diverges from oracle");
        }
    }
    auto elapsed = std::chrono::steady_clock::now() - started;
    require(elapsed < std::chrono::seconds(1), "runtime budget exceeded");
}

void criterion4_sql_guard() {
    auto started = std::chrono::steady_clock::now();
    Table t;
    t.table_id = "guarded";
    t.name = "guarded";
    t.column_names = {"a"};
    t.rows = {{"1"}, {"2"}};
    TableStore db(":memory:");
    db.ingest_table(t);
    long long baseline = db.total_changes();

    const char* verbs[] = {"INSERT INTO guarded VALUES ('x')", "UPDATE guarded SET a = 0",
                           "DELETE FROM guarded",              "DROP TABLE guarded",
                           "ALTER TABLE guarded ADD COLUMN b", "CREATE TABLE other (c)"};
    std::mt19937 rng(41);
    for (int i = 0; i < 1000; ++i) {
        std::string sql = verbs[rng() % 6];
        switch (rng() % 5) {
            case 0:
                for (auto& c : sql) {
                    c = static_cast<char>((rng() & 1) ? std::toupper((unsigned char)c)
                                                      : std::tolower((unsigned char)c));
                }
                break;
            case 1: sql = " \t\r\n" + sql; break;
            case 2: sql = "-- lead comment\n" + sql; break;
            case 3: sql = "/* lead */ " + sql + ";"; break;
            case 4: sql = "SELECT a FROM guarded; " + sql; break;
        }
        auto result = db.execute_readonly({sql});
        require(!result.ok(), "write statement slipped through: " + sql);
    }
    require(db.total_changes() == baseline, "engine mutated by a rejected statement");
    require(db.execute_readonly({"SELECT COUNT(*) FROM guarded"}).rows[0][0] == "2",
            "data changed");
    require(db.execute_readonly({"WITH w AS (SELECT a FROM guarded) SELECT COUNT(*) FROM w"})
                .ok(),
            "WITH ... SELECT must pass");
    auto elapsed = std::chrono::steady_clock::now() - started;
    require(elapsed < std::chrono::seconds(5), "runtime budget exceeded");
}

void criterion5_worked_example() {
    Fixture fx;
    SqlExecRequest req{
        "SELECT Title FROM List_of_Australian_films_of_2012_0 WHERE Genre = 'Comedy' AND "
        "Release_month BETWEEN 7 AND 12 ORDER BY Cast_count DESC LIMIT 1"};
    auto result = fx.db->execute_readonly(req);
    require(result.ok(), "annotated SQL failed: " + result.error_message);
    require(result.rows.size() == 1 && result.rows[0].size() == 1, "expected a 1x1 result");
    require(result.rows[0][0] == "Kath & Kimderella",
            "got '" + result.rows[0][0] + "' instead of 'Kath & Kimderella'");
}

void criterion6_iteration_cap() {
    Fixture fx;
    auto trace = fx.reasoner(std::make_shared<EndlessDecomposer>()).run("endless question");
    require(trace.status == TraceStatus::max_iterations_exceeded,
            std::string("status was ") + to_string(trace.status));
    require(trace.iterations.size() == 5, "expected exactly 5 iterations");

    DatasetRecord rec;
    rec.id = "endless";
    rec.question = "endless question";
    rec.gold_answer = "n/a";
    auto report = run_eval(
        {rec},
        [&](const DatasetRecord&) {
            Fixture inner;
            return inner.reasoner(std::make_shared<EndlessDecomposer>()).run("endless question");
        },
        [](const DatasetRecord&, const std::string&) { return JudgeVerdict{0, ""}; }, 1);
    require(report.bucket_gt5_or_unfinished == 1, "capped run must land in the >5/unfinished bucket");
    require(report.task_incompletions == 1, "capped run must count as task incompletion");
}

void criterion7_determinism() {
    const std::string query =
        "Who wrote and starred in the comedy film that had the highest number of cast "
        "members among Australian comedies released between July and December 2012?";
    Fixture fx1, fx2;
    auto first = fx1.reasoner(transcript("golden_ask.jsonl")).run(query);
    auto second = fx2.reasoner(transcript("golden_ask.jsonl")).run(query);
    require(first.status == TraceStatus::answered, "golden run did not answer");
    require(*first.final_answer == "Riley, Turner, and Magda Szubanski",
            "frozen answer diverged: " + *first.final_answer);
    require(trace_fingerprint(first) == trace_fingerprint(second),
            "trace JSON differs between two identical runs");

    auto dataset = load_dataset(kFixtures + "/dataset/sample.jsonl", kFixtures + "/corpus");
    Fixture shared;
    auto trace_fn = [&](const DatasetRecord& rec) {
        auto provider = std::make_shared<ScriptedProvider>(
            ScriptedProvider::from_jsonl_file(kFixtures + "/dataset/" + *rec.transcript));
        Fixture local;
        return local.reasoner(provider).run(rec.question);
    };
    auto judge_fn = [&](const DatasetRecord& rec, const std::string& predicted) {
        Gateway gateway(std::make_shared<ScriptedProvider>(ScriptedProvider::from_jsonl_file(
                            kFixtures + "/dataset/" + *rec.judge_transcript)),
                        0, [](std::chrono::milliseconds) {});
        return judge(rec.question, rec.gold_answer, predicted, gateway);
    };
    auto serial = run_eval(dataset, trace_fn, judge_fn, 1);
    auto parallel = run_eval(dataset, trace_fn, judge_fn, 4);
    require(serial.to_json().dump(2) == parallel.to_json().dump(2),
            "eval report differs between 1 and 4 workers");
}

void criterion8_ablation_purity() {
    // --no-sql: nothing crosses the SQL seam
    Fixture fx;
    AblationFlags no_sql;
    no_sql.no_sql = true;
    auto provider = std::make_shared<ScriptedProvider>(ScriptedProvider::from_jsonl(
        R"({"kind": "decompose", "tool_call": {"id": "c1", "name": "solve_subquery", "arguments": {"subquery": "largest cast comedy July December 2012"}}}
{"kind": "compose", "response": "Kath & Kimderella"}
{"kind": "decompose", "response": "<Answer>: Kath & Kimderella"})"));
    auto trace = fx.reasoner(provider, no_sql).run("largest cast comedy?");
    require(trace.status == TraceStatus::answered, "no-sql run did not answer");
    require(fx.sql_calls == 0, "SQL seam was crossed under --no-sql");
    for (const auto& it : trace.iterations) {
        require(!it.sql.has_value() && !it.exec_result.has_value(),
                "SQL artifacts recorded under --no-sql");
    }

    // --no-text-retrieval: compose prompts carry no retrieved chunk text
    Fixture fx2;
    AblationFlags no_text;
    no_text.no_text_retrieval = true;
    auto provider2 = std::make_shared<ScriptedProvider>(ScriptedProvider::from_jsonl(
        R"({"kind": "decompose", "tool_call": {"id": "c1", "name": "solve_subquery", "arguments": {"subquery": "largest cast comedy July December 2012"}}}
{"kind": "nl2sql", "response": "SELECT Title FROM List_of_Australian_films_of_2012_0 WHERE Genre = 'Comedy' AND Release_month BETWEEN 7 AND 12 ORDER BY Cast_count DESC LIMIT 1"}
{"kind": "compose", "response": "Kath & Kimderella"}
{"kind": "decompose", "response": "<Answer>: Kath & Kimderella"})"));
    auto trace2 = fx2.reasoner(provider2, no_text)
                      .run("Which comedy film released between July and December 2012 had "
                           "the largest cast?");
    require(trace2.status == TraceStatus::answered, "no-text-retrieval run did not answer");
    require(!trace2.iterations.empty(), "expected at least one iteration");
    for (const auto& it : trace2.iterations) {
        require(it.retrieval.rerank_hits.empty(), "retrieval ran under --no-text-retrieval");
        for (const auto& chunk : fx2.store.chunks) {
            require(it.compose_prompt.find(chunk.text) == std::string::npos,
                    "chunk text leaked into a compose prompt");
        }
    }
}

void criterion9_judge_and_report() {
    auto gw = [&](const std::string& name) {
        return Gateway(std::make_shared<ScriptedProvider>(ScriptedProvider::from_jsonl_file(
                           kFixtures + "/transcripts/" + name)),
                       0, [](std::chrono::milliseconds) {});
    };
    auto g1 = gw("judge_1.jsonl");
    require(judge("q", "gold", "pred", g1).score == 1, "Rating: [[1]] must score 1");
    auto g0 = gw("judge_0.jsonl");
    require(judge("q", "gold", "pred", g0).score == 0, "Rating: [[0]] must score 0");
    auto gr = gw("judge_reask_1.jsonl");
    require(judge("q", "gold", "pred", gr).score == 1, "re-ask must recover the verdict");
    auto gb = gw("judge_bad.jsonl");
    require(judge("q", "gold", "pred", gb).score == 0, "double parse failure must score 0");

    auto dataset = load_dataset(kFixtures + "/dataset/sample.jsonl", kFixtures + "/corpus");
    auto trace_fn = [&](const DatasetRecord& rec) {
        auto provider = std::make_shared<ScriptedProvider>(
            ScriptedProvider::from_jsonl_file(kFixtures + "/dataset/" + *rec.transcript));
        Fixture local;
        return local.reasoner(provider).run(rec.question);
    };
    auto judge_fn = [&](const DatasetRecord& rec, const std::string& predicted) {
        Gateway gateway(std::make_shared<ScriptedProvider>(ScriptedProvider::from_jsonl_file(
                            kFixtures + "/dataset/" + *rec.judge_transcript)),
                        0, [](std::chrono::milliseconds) {});
        return judge(rec.question, rec.gold_answer, predicted, gateway);
    };
    auto report = run_eval(dataset, trace_fn, judge_fn, 2);
    require(report.accuracy_overall == 0.6, "overall accuracy != hand-tallied 0.6");
    require(report.accuracy_single_source == 0.5, "single-source accuracy != 0.5");
    require(report.accuracy_multi_source == 1.0, "multi-source accuracy != 1.0");
    require(report.bucket_lt3 == 8 && report.bucket_3_4 == 0 && report.bucket_exactly5 == 1 &&
                report.bucket_gt5_or_unfinished == 1,
            "iteration buckets diverge from hand tally");
    require(report.reasoning_failures == 0 && report.task_incompletions == 1,
            "error categories diverge from hand tally");
}

void criterion10_live_smoke() {
    AppConfig config;
    config.merge_env();
    require(!config.main_provider.endpoint.empty(), "TABLERAG_ENDPOINT not configured");
    Fixture fx;
    auto dataset = load_dataset(kFixtures + "/dataset/sample.jsonl", kFixtures + "/corpus");
    auto provider = std::make_shared<HttpChatProvider>(config.main_provider);
    auto trace_fn = [&](const DatasetRecord& rec) {
        Reasoner reasoner(
            fx.store, fx.index, fx.embedder, fx.reranker, provider,
            [&](const SqlExecRequest& req) { return fx.db->execute_readonly(req); });
        return reasoner.run(rec.question);
    };
    Gateway judge_gateway(provider, config.main_provider.max_retries);
    auto judge_fn = [&](const DatasetRecord& rec, const std::string& predicted) {
        return judge(rec.question, rec.gold_answer, predicted, judge_gateway);
    };
    auto report = run_eval(dataset, trace_fn, judge_fn, 1);
    std::size_t correct = 0;
    for (const auto& r : report.records) correct += r.score;
    require(correct >= 1, "live eval produced no correct answers");
}

}  // namespace

int main() {
    run(1, "recall equals the exhaustive cosine oracle", criterion1_recall_oracle);
    run(2, "chunk geometry properties hold", criterion2_chunk_geometry);
    run(3, "chunk->schema map and S^t construction", criterion3_schema_map);
    run(4, "SQL guard rejects 1000 fuzzed writes with zero mutations", criterion4_sql_guard);
    run(5, "worked example SQL returns 'Kath & Kimderella'", criterion5_worked_example);
    run(6, "iteration cap stops at 5 and lands in the unfinished bucket",
        criterion6_iteration_cap);
    run(7, "golden trace and eval report are deterministic", criterion7_determinism);
    run(8, "ablation flags keep their paths pure", criterion8_ablation_purity);
    run(9, "judge parsing and fixture report match the hand tally", criterion9_judge_and_report);
    const char* net = std::getenv("TABLERAG_ACCEPT_NETWORK");
    if (net && std::string(net) == "1") {
        run(10, "live eval smoke over the bundled records", criterion10_live_smoke);
    } else {
        std::cout << "SKIP criterion 10: live eval smoke (set TABLERAG_ACCEPT_NETWORK=1 and "
                     "TABLERAG_ENDPOINT to run; environment-dependent)\n";
    }
    return failures == 0 ? 0 : 1;
}
