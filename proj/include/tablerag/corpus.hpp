#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tablerag/error.hpp"

namespace tablerag {

struct RawDocument {
    std::string doc_id;
    std::string source_path;
    std::string body;
};

struct Column {
    std::string name;
    std::string inferred_type;  // "integer" | "real" | "text"
    std::vector<std::string> examples;  // up to 3 distinct values, row order
};

struct Table {
    std::string table_id;
    std::string name;  // sanitized identifier
    std::vector<std::string> column_names;
    std::vector<std::vector<std::string>> rows;  // each row has column_names.size() cells
};

struct TableSchema {
    std::string table_name;
    std::vector<Column> columns;

    /// Serializes to the canonical template object:
    /// {"table_name": ..., "columns": [[name, type, [examples...]], ...]}
    std::string to_json() const;
};

struct ChunkOrigin {
    enum class Kind { text_document, table } kind;
    std::string id;  // doc_id or table_id

    bool is_table() const { return kind == Kind::table; }
};

struct Chunk {
    std::string chunk_id;
    std::string text;
    ChunkOrigin origin;
    std::size_t span_start = 0;  // token indices in origin stream
    std::size_t span_end = 0;
};

/// chunk_id -> table_id, total over table-origin chunks only.
using ChunkSchemaMap = std::map<std::string, std::string>;

struct ParseWarning {
    std::string doc_id;
    std::string message;
};

struct CorpusStore {
    std::vector<RawDocument> documents;
    std::vector<Table> tables;
    std::vector<Chunk> chunks;
    ChunkSchemaMap schema_map;
    std::map<std::string, TableSchema> schemas;  // table_id -> schema
    std::vector<ParseWarning> warnings;

    const Chunk* find_chunk(const std::string& chunk_id) const;
    const TableSchema* schema_for_chunk(const std::string& chunk_id) const;
};

/// Splits text into tokens. The default splits on ASCII whitespace, which
/// keeps chunk geometry reproducible without a model-specific tokenizer.
using TokenizerFn = std::function<std::vector<std::string>(const std::string&)>;

std::vector<std::string> whitespace_tokenize(const std::string& text);

struct ChunkParams {
    std::size_t chunk_size = 1000;
    std::size_t overlap = 200;
};

struct ParseResult {
    std::vector<std::string> text_segments;
    std::vector<Table> tables;
    std::vector<ParseWarning> warnings;
};

/// Extracts GitHub-style pipe tables from Markdown; remaining prose comes
/// back as segments in document order. Ragged rows are padded/truncated to
/// header width. A separator row with zero header columns is reported as a
/// warning and the table skipped.
ParseResult parse_document(const RawDocument& raw);

/// Canonical pipe-table rendering: header, dash separator, one line per row.
std::string render_markdown(const Table& table);

TableSchema derive_schema(const Table& table);

/// Token spans with stride = chunk_size - overlap. The final chunk is
/// shifted left to end flush with the stream when it would come up short.
std::vector<std::pair<std::size_t, std::size_t>> chunk_spans(
    std::size_t total_tokens, const ChunkParams& params);

std::vector<Chunk> chunk_text(const std::string& text, const ChunkOrigin& origin,
                              const std::string& id_prefix, const ChunkParams& params,
                              const TokenizerFn& tokenizer = whitespace_tokenize);

struct BuildParams {
    ChunkParams chunking;
    TokenizerFn tokenizer = whitespace_tokenize;
};

/// Builds the two parallel corpora: every document is parsed, extracted
/// tables get schemas and Markdown renderings, and both prose and rendered
/// tables are chunked with the same parameters. `standalone_tables` holds
/// tables that arrived pre-structured (e.g. CSV files).
CorpusStore build_corpus(const std::vector<RawDocument>& docs,
                         const std::vector<Table>& standalone_tables = {},
                         const BuildParams& params = {});

/// Replaces characters outside [A-Za-z0-9_] with '_' and prefixes "t_" when
/// the result starts with a digit.
std::string sanitize_identifier(const std::string& raw);

// Persistence: schemas/<table_id>.json, chunks.jsonl, map.jsonl, tables.jsonl.
void save_corpus(const CorpusStore& store, const std::string& dir);
CorpusStore load_corpus(const std::string& dir);

/// Reads .md/.txt files as documents and .csv files as standalone tables
/// (RFC-4180 quoting, header row required).
std::vector<RawDocument> read_corpus_dir(const std::string& dir,
                                         std::vector<Table>* csv_tables);

Table parse_csv_table(const std::string& name_hint, const std::string& csv_body);

}  // namespace tablerag
