#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tablerag/config.hpp"
#include "tablerag/corpus.hpp"
#include "tablerag/eval.hpp"
#include "tablerag/llm.hpp"
#include "tablerag/reasoner.hpp"
#include "tablerag/retrieval.hpp"
#include "tablerag/table_store.hpp"

namespace fs = std::filesystem;
using namespace tablerag;

namespace {

struct Runtime {
    CorpusStore store;
    VectorIndex index;
    std::unique_ptr<TableStore> db;
    std::shared_ptr<EmbedderPort> embedder;
    std::shared_ptr<RerankerPort> reranker;
};

std::shared_ptr<EmbedderPort> make_embedder(const AppConfig& config) {
    if (config.embedder) return std::make_shared<HttpEmbedder>(*config.embedder);
    return std::make_shared<HashingEmbedder>();
}

std::shared_ptr<RerankerPort> make_reranker(const AppConfig& config,
                                            std::shared_ptr<EmbedderPort> embedder) {
    if (config.reranker) return std::make_shared<HttpReranker>(*config.reranker);
    return std::make_shared<EmbeddingReranker>(std::move(embedder));
}

std::shared_ptr<ChatProvider> make_provider(const AppConfig& config) {
    if (config.scripted_transcript) {
        return std::make_shared<ScriptedProvider>(
            ScriptedProvider::from_jsonl_file(*config.scripted_transcript));
    }
    if (config.main_provider.endpoint.empty()) {
        throw Error(ErrorKind::ConfigError,
                    "no provider configured; pass --provider-endpoint or --scripted");
    }
    return std::make_shared<HttpChatProvider>(config.main_provider);
}

Runtime load_runtime(const AppConfig& config) {
    Runtime rt;
    rt.store = load_corpus(config.out_dir);
    rt.index = VectorIndex::load((fs::path(config.out_dir) / "index.jsonl").string());
    rt.db = std::make_unique<TableStore>((fs::path(config.out_dir) / "tablerag.db").string());
    rt.embedder = make_embedder(config);
    rt.reranker = make_reranker(config, rt.embedder);
    return rt;
}

ReasonerConfig reasoner_config(const AppConfig& config) {
    ReasonerConfig rc;
    rc.recall_n = config.recall_n;
    rc.rerank_k = config.rerank_k;
    rc.max_iterations = config.max_iterations;
    rc.max_retries = config.main_provider.max_retries;
    return rc;
}

int cmd_build(AppConfig& config) {
    config.validate();
    std::vector<Table> csv_tables;
    auto docs = read_corpus_dir(config.corpus_dir, &csv_tables);
    if (docs.empty() && csv_tables.empty()) {
        std::cerr << "warning: 0 documents found in " << config.corpus_dir << "\n";
    }
    BuildParams params;
    params.chunking = config.chunking;
    CorpusStore store = build_corpus(docs, csv_tables, params);
    for (const auto& w : store.warnings) {
        std::cerr << "warning: " << w.doc_id << ": " << w.message << "\n";
    }
    fs::create_directories(config.out_dir);
    save_corpus(store, config.out_dir);

    auto embedder = make_embedder(config);
    VectorIndex index = VectorIndex::build(store, *embedder);
    index.save((fs::path(config.out_dir) / "index.jsonl").string());

    fs::remove(fs::path(config.out_dir) / "tablerag.db");
    TableStore db((fs::path(config.out_dir) / "tablerag.db").string());
    db.ingest_all(store);

    std::cout << "built store: " << docs.size() << " documents, " << store.tables.size()
              << " tables, " << store.chunks.size() << " chunks -> " << config.out_dir << "\n";
    return 0;
}

int cmd_ask(AppConfig& config, const std::string& question, const std::string& trace_out) {
    config.validate();
    Runtime rt = load_runtime(config);
    auto provider = make_provider(config);
    TableStore* db = rt.db.get();
    Reasoner reasoner(
        rt.store, rt.index, rt.embedder, rt.reranker, provider,
        [db](const SqlExecRequest& req) { return db->execute_readonly(req); },
        reasoner_config(config), config.ablation);

    Trace trace = reasoner.run(question);
    std::string path = trace_out.empty()
                           ? (fs::path(config.out_dir) / "trace.json").string()
                           : trace_out;
    write_trace(trace, path);

    if (trace.status == TraceStatus::answered) {
        std::cout << *trace.final_answer << "\n";
        return 0;
    }
    std::cout << "UNANSWERED (" << to_string(trace.status) << ")\n";
    return trace.status == TraceStatus::transport_failed ? 2 : 0;
}

int cmd_eval(AppConfig& config, const std::string& dataset_path,
             const std::string& corpus_root) {
    config.validate();
    auto dataset = load_dataset(dataset_path, corpus_root);
    Runtime rt = load_runtime(config);

    fs::create_directories(fs::path(config.out_dir) / "traces");
    TableStore* db = rt.db.get();
    auto rc = reasoner_config(config);

    fs::path dataset_dir = fs::path(dataset_path).parent_path();
    TraceFn trace_fn = [&](const DatasetRecord& rec) {
        // Per-record transcript overrides the global one; scripted
        // providers are never shared across records.
        std::shared_ptr<ChatProvider> provider;
        if (rec.transcript) {
            provider = std::make_shared<ScriptedProvider>(
                ScriptedProvider::from_jsonl_file((dataset_dir / *rec.transcript).string()));
        } else {
            provider = make_provider(config);
        }
        Reasoner reasoner(
            rt.store, rt.index, rt.embedder, rt.reranker, provider,
            [db](const SqlExecRequest& req) { return db->execute_readonly(req); }, rc,
            config.ablation);
        Trace trace = reasoner.run(rec.question);
        write_trace(trace, (fs::path(config.out_dir) / "traces" / (rec.id + ".json")).string());
        return trace;
    };
    JudgeFn judge_fn = [&](const DatasetRecord& rec, const std::string& predicted) {
        auto judge_config = config.judge_provider ? *config.judge_provider
                                                  : config.main_provider;
        std::shared_ptr<ChatProvider> provider;
        if (rec.judge_transcript) {
            provider = std::make_shared<ScriptedProvider>(ScriptedProvider::from_jsonl_file(
                (dataset_dir / *rec.judge_transcript).string()));
        } else if (config.scripted_transcript) {
            provider = std::make_shared<ScriptedProvider>(
                ScriptedProvider::from_jsonl_file(*config.scripted_transcript));
        } else {
            provider = std::make_shared<HttpChatProvider>(judge_config);
        }
        Gateway gateway(provider, judge_config.max_retries);
        return judge(rec.question, rec.gold_answer, predicted, gateway);
    };

    EvalReport report = run_eval(dataset, trace_fn, judge_fn, config.workers);
    {
        std::ofstream out(fs::path(config.out_dir) / "eval_report.json");
        out << report.to_json().dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(config.out_dir) / "eval_report.txt");
        out << report.summary();
    }
    std::cout << report.summary();
    return 0;
}

int cmd_replay(AppConfig& config, const std::string& trace_path) {
    config.validate();
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "error: trace not found: " << trace_path << "\n";
        return 1;
    }
    nlohmann::json recorded;
    in >> recorded;
    std::string question = recorded.at("query");

    Runtime rt = load_runtime(config);
    auto provider = make_provider(config);
    TableStore* db = rt.db.get();
    Reasoner reasoner(
        rt.store, rt.index, rt.embedder, rt.reranker, provider,
        [db](const SqlExecRequest& req) { return db->execute_readonly(req); },
        reasoner_config(config), config.ablation);
    Trace trace = reasoner.run(question);

    auto recorded_answer = recorded.at("final_answer");
    bool match = trace.final_answer
                     ? (!recorded_answer.is_null() &&
                        recorded_answer.get<std::string>() == *trace.final_answer)
                     : recorded_answer.is_null();
    std::cout << (match ? "replay matched" : "replay DIVERGED") << "\n";
    return match ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid text+table question answering over heterogeneous documents"};
    app.require_subcommand(1);

    AppConfig config;
    std::string config_file;
    app.add_option("--config", config_file, "JSON config file");
    app.add_option("--out-dir", config.out_dir, "store directory");
    app.add_option("--workers", config.workers, "eval worker count");
    app.add_option("--provider-endpoint", config.main_provider.endpoint,
                   "chat-completions endpoint");
    app.add_option("--model", config.main_provider.model, "model name");
    std::string scripted;
    app.add_option("--scripted", scripted, "scripted transcript JSONL (deterministic provider)");
    app.add_flag("--no-sql", config.ablation.no_sql, "disable the SQL path");
    app.add_flag("--no-text-retrieval", config.ablation.no_text_retrieval,
                 "disable chunk retrieval");
    app.add_flag("--no-context-decomposition", config.ablation.no_context_decomposition,
                 "decompose without seeded table context");

    auto* build = app.add_subcommand("build", "build the offline stores from a corpus directory");
    build->fallthrough();
    build->add_option("corpus_dir", config.corpus_dir, "directory of .md/.txt/.csv files")
        ->required();

    std::string question, trace_out;
    auto* ask = app.add_subcommand("ask", "answer a single question");
    ask->fallthrough();
    ask->add_option("question", question)->required();
    ask->add_option("--trace-out", trace_out, "trace JSON output path");

    std::string dataset_path, corpus_root;
    auto* eval = app.add_subcommand("eval", "run an evaluation over a JSONL dataset");
    eval->fallthrough();
    eval->add_option("dataset", dataset_path)->required();
    eval->add_option("--corpus-root", corpus_root,
                     "directory for validating dataset file references");

    std::string trace_path;
    auto* replay = app.add_subcommand("replay", "re-run a recorded trace's question");
    replay->fallthrough();
    replay->add_option("trace", trace_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        // Precedence: flags > env > config file > defaults.
        AppConfig merged;
        if (!config_file.empty()) merged.merge_file(config_file);
        merged.merge_env();
        merged.corpus_dir = config.corpus_dir;
        merged.ablation = config.ablation;
        if (app.count("--out-dir")) merged.out_dir = config.out_dir;
        if (app.count("--workers")) merged.workers = config.workers;
        if (app.count("--provider-endpoint")) {
            merged.main_provider.endpoint = config.main_provider.endpoint;
        }
        if (app.count("--model")) merged.main_provider.model = config.main_provider.model;
        if (!scripted.empty()) merged.scripted_transcript = scripted;
        config = merged;

        if (*build) return cmd_build(config);
        if (*ask) return cmd_ask(config, question, trace_out);
        if (*eval) return cmd_eval(config, dataset_path, corpus_root);
        if (*replay) return cmd_replay(config, trace_path);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        if (e.kind() == ErrorKind::TransportError) return 2;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
