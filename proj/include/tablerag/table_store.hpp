#pragma once

#include <chrono>
#include <mutex>
#include <memory>
#include <string>
#include <vector>

#include "tablerag/corpus.hpp"

struct sqlite3;

namespace tablerag {

struct SqlExecRequest {
    std::string sql;
    std::chrono::milliseconds timeout{5000};
    std::size_t max_rows = 100;
};

struct SqlExecResult {
    enum class Status { ok, error } status = Status::ok;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    bool truncated = false;
    std::string error_message;
    std::chrono::milliseconds elapsed{0};

    bool ok() const { return status == Status::ok; }

    /// Markdown rendering used when feeding results back into prompts.
    /// Appends a literal "-- truncated to <max> rows" line when capped.
    std::string to_markdown() const;
};

/// Lexical read-only gate: exactly one statement whose first keyword is
/// SELECT or WITH, comments stripped. LLM-generated SQL is untrusted, so
/// this runs before the statement ever reaches the engine.
bool is_readonly_select(const std::string& sql);

/// Relational store over an embedded SQLite database. Ingestion is
/// single-writer; execute_readonly is safe for concurrent callers.
class TableStore {
public:
    /// Opens (or creates) the database at `path`; ":memory:" works.
    explicit TableStore(const std::string& path);
    ~TableStore();

    TableStore(const TableStore&) = delete;
    TableStore& operator=(const TableStore&) = delete;

    /// Creates the relational table and inserts all rows. Re-ingesting the
    /// same table replaces the prior version. Cells that fail the column's
    /// numeric type parse are stored as NULL.
    std::string ingest_table(const Table& table);

    void ingest_all(const CorpusStore& store);

    SqlExecResult execute_readonly(const SqlExecRequest& req) const;

    /// Engine change counter; stays 0 across any number of execute_readonly
    /// calls.
    long long total_changes() const;

private:
    sqlite3* db_ = nullptr;
    mutable std::mutex exec_mutex_;  // serializes access to the connection
};

}  // namespace tablerag
