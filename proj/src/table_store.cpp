#include "tablerag/table_store.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include <sqlite3.h>

namespace tablerag {

namespace {

// Scanner over SQL text that skips comments and string literals. Returns
// the statement text with comments replaced by spaces, and counts
// statement separators.
struct SqlScan {
    std::string stripped;   // comments replaced by whitespace
    bool balanced = true;   // no unterminated literal/comment
    int statements = 1;     // semicolon-separated statements with content
};

SqlScan scan_sql(const std::string& sql) {
    SqlScan out;
    out.stripped.reserve(sql.size());
    std::size_t i = 0;
    const std::size_t n = sql.size();
    bool saw_content_since_semicolon = false;
    int extra_statements = 0;
    while (i < n) {
        char c = sql[i];
        if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n') ++i;
            out.stripped.push_back(' ');
            continue;
        }
        if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            i += 2;
            bool closed = false;
            while (i + 1 < n) {
                if (sql[i] == '*' && sql[i + 1] == '/') {
                    i += 2;
                    closed = true;
                    break;
                }
                ++i;
            }
            if (!closed) {
                out.balanced = false;
                i = n;
            }
            out.stripped.push_back(' ');
            continue;
        }
        if (c == '\'' || c == '"') {
            char quote = c;
            out.stripped.push_back(c);
            ++i;
            bool closed = false;
            while (i < n) {
                out.stripped.push_back(sql[i]);
                if (sql[i] == quote) {
                    if (i + 1 < n && sql[i + 1] == quote) {
                        out.stripped.push_back(sql[i + 1]);
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                ++i;
            }
            if (!closed) out.balanced = false;
            saw_content_since_semicolon = true;
            continue;
        }
        if (c == ';') {
            if (saw_content_since_semicolon) {
                // Content after this point starts a new statement.
                saw_content_since_semicolon = false;
                ++extra_statements;
            }
            out.stripped.push_back(c);
            ++i;
            continue;
        }
        if (!std::isspace(static_cast<unsigned char>(c))) saw_content_since_semicolon = true;
        out.stripped.push_back(c);
        ++i;
    }
    // extra_statements counts semicolons that had content before them; the
    // statement count is that plus one if content follows the last one.
    out.statements = extra_statements + (saw_content_since_semicolon ? 1 : 0);
    return out;
}

std::string first_keyword(const std::string& stripped) {
    std::size_t i = 0;
    while (i < stripped.size() && std::isspace(static_cast<unsigned char>(stripped[i]))) ++i;
    std::string word;
    while (i < stripped.size() && (std::isalpha(static_cast<unsigned char>(stripped[i])))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(stripped[i]))));
        ++i;
    }
    return word;
}

bool parses_as_integer(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    return std::all_of(s.begin() + i, s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool parses_as_real(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && errno == 0;
}

std::string trim_copy(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct ProgressDeadline {
    std::chrono::steady_clock::time_point deadline;
};

int progress_callback(void* ctx) {
    auto* d = static_cast<ProgressDeadline*>(ctx);
    return std::chrono::steady_clock::now() > d->deadline ? 1 : 0;
}

}  // namespace

bool is_readonly_select(const std::string& sql) {
    auto scan = scan_sql(sql);
    if (!scan.balanced) return false;
    if (scan.statements != 1) return false;
    auto kw = first_keyword(scan.stripped);
    return kw == "select" || kw == "with";
}

TableStore::TableStore(const std::string& path) {
    if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "unknown error";
        if (db_) sqlite3_close(db_);
        db_ = nullptr;
        throw Error(ErrorKind::IngestFailure, "cannot open database " + path + ": " + msg);
    }
}

TableStore::~TableStore() {
    if (db_) sqlite3_close(db_);
}

std::string TableStore::ingest_table(const Table& table) {
    auto schema = derive_schema(table);

    auto exec = [&](const std::string& stmt) {
        char* err = nullptr;
        if (sqlite3_exec(db_, stmt.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown error";
            sqlite3_free(err);
            throw Error(ErrorKind::IngestFailure, "ingest failed for " + table.name + ": " + msg);
        }
    };

    exec("DROP TABLE IF EXISTS \"" + table.name + "\"");

    std::string create = "CREATE TABLE \"" + table.name + "\" (";
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        if (c) create += ", ";
        const auto& col = schema.columns[c];
        create += "\"" + col.name + "\" ";
        if (col.inferred_type == "integer") {
            create += "INTEGER";
        } else if (col.inferred_type == "real") {
            create += "REAL";
        } else {
            create += "TEXT";
        }
    }
    create += ")";
    exec(create);

    std::string insert = "INSERT INTO \"" + table.name + "\" VALUES (";
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        if (c) insert += ", ";
        insert += "?";
    }
    insert += ")";

    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(db_, insert.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
        throw Error(ErrorKind::IngestFailure,
                    "ingest failed for " + table.name + ": " + sqlite3_errmsg(db_));
    }
    exec("BEGIN");
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
            const auto& type = schema.columns[c].inferred_type;
            std::string cell = trim_copy(row[c]);
            int idx = static_cast<int>(c) + 1;
            if (type == "integer") {
                if (parses_as_integer(cell)) {
                    sqlite3_bind_int64(stmt, idx, std::stoll(cell));
                } else {
                    sqlite3_bind_null(stmt, idx);
                }
            } else if (type == "real") {
                if (parses_as_real(cell)) {
                    sqlite3_bind_double(stmt, idx, std::stod(cell));
                } else {
                    sqlite3_bind_null(stmt, idx);
                }
            } else {
                sqlite3_bind_text(stmt, idx, row[c].c_str(), -1, SQLITE_TRANSIENT);
            }
        }
        if (sqlite3_step(stmt) != SQLITE_DONE) {
            std::string msg = sqlite3_errmsg(db_);
            sqlite3_finalize(stmt);
            exec("ROLLBACK");
            throw Error(ErrorKind::IngestFailure, "ingest failed for " + table.name + ": " + msg);
        }
        sqlite3_reset(stmt);
    }
    sqlite3_finalize(stmt);
    exec("COMMIT");
    return table.name;
}

void TableStore::ingest_all(const CorpusStore& store) {
    for (const auto& t : store.tables) ingest_table(t);
}

SqlExecResult TableStore::execute_readonly(const SqlExecRequest& req) const {
    std::lock_guard<std::mutex> lock(exec_mutex_);
    SqlExecResult result;
    auto started = std::chrono::steady_clock::now();
    auto finish = [&](SqlExecResult r) {
        r.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        return r;
    };
    auto fail = [&](const std::string& msg) {
        SqlExecResult r;
        r.status = SqlExecResult::Status::error;
        r.error_message = msg;
        return finish(r);
    };

    if (!is_readonly_select(req.sql)) {
        return fail("read-only violation");
    }

    sqlite3_stmt* stmt = nullptr;
    const char* tail = nullptr;
    if (sqlite3_prepare_v2(db_, req.sql.c_str(), -1, &stmt, &tail) != SQLITE_OK) {
        std::string msg = sqlite3_errmsg(db_);
        if (stmt) sqlite3_finalize(stmt);
        return fail("SQL error: " + msg);
    }
    if (stmt == nullptr) {
        return fail("SQL error: empty statement");
    }
    // Second gate: the prepared statement itself must be read-only and the
    // tail must hold no further statement.
    if (!sqlite3_stmt_readonly(stmt) || (tail && !trim_copy(tail).empty() &&
                                         trim_copy(tail) != ";")) {
        sqlite3_finalize(stmt);
        return fail("read-only violation");
    }

    ProgressDeadline deadline{started + req.timeout};
    sqlite3_progress_handler(db_, 1000, progress_callback, &deadline);

    for (int c = 0; c < sqlite3_column_count(stmt); ++c) {
        const char* name = sqlite3_column_name(stmt, c);
        result.columns.push_back(name ? name : "");
    }

    int rc;
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
        if (result.rows.size() >= req.max_rows) {
            result.truncated = true;
            break;
        }
        std::vector<std::string> row;
        for (int c = 0; c < sqlite3_column_count(stmt); ++c) {
            const unsigned char* text = sqlite3_column_text(stmt, c);
            row.push_back(text ? reinterpret_cast<const char*>(text) : "NULL");
        }
        result.rows.push_back(std::move(row));
    }
    sqlite3_progress_handler(db_, 0, nullptr, nullptr);

    if (rc != SQLITE_DONE && rc != SQLITE_ROW) {
        std::string msg = rc == SQLITE_INTERRUPT ? "timeout" : sqlite3_errmsg(db_);
        sqlite3_finalize(stmt);
        return fail("SQL error: " + msg);
    }
    sqlite3_finalize(stmt);
    return finish(result);
}

long long TableStore::total_changes() const {
    return sqlite3_total_changes64(db_);
}

std::string SqlExecResult::to_markdown() const {
    if (status == Status::error) {
        return "SQL execution results: error: " + error_message;
    }
    std::string out = "|";
    for (const auto& c : columns) out += " " + c + " |";
    out += "\n|";
    for (std::size_t i = 0; i < columns.size(); ++i) out += " --- |";
    for (const auto& row : rows) {
        out += "\n|";
        for (const auto& cell : row) out += " " + cell + " |";
    }
    if (truncated) {
        out += "\n-- truncated to " + std::to_string(rows.size()) + " rows";
    }
    return out;
}

}  // namespace tablerag
