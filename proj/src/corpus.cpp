#include "tablerag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace tablerag {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Placeholder cells common in wiki tables; they behave like empty cells for
// type inference and become NULL in numeric columns at ingest time.
bool is_missing_value(const std::string& cell) {
    std::string t = trim(cell);
    if (t.empty()) return true;
    std::string lower;
    for (unsigned char c : t) lower.push_back(static_cast<char>(std::tolower(c)));
    return lower == "n/a" || lower == "na" || lower == "-" || lower == "--" ||
           lower == "null" || lower == "none";
}

std::vector<std::string> split_lines(const std::string& body) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : body) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

// Splits a pipe-table row into cells, dropping the optional leading and
// trailing pipe.
std::vector<std::string> split_row(const std::string& line) {
    std::string s = trim(line);
    if (!s.empty() && s.front() == '|') s.erase(0, 1);
    if (!s.empty() && s.back() == '|') s.pop_back();
    std::vector<std::string> cells;
    std::string cur;
    for (char c : s) {
        if (c == '|') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

bool is_separator_row(const std::string& line) {
    std::string s = trim(line);
    if (s.find('-') == std::string::npos) return false;
    for (char c : s) {
        if (c != '|' && c != '-' && c != ':' && c != ' ' && c != '\t') return false;
    }
    return s.find('|') != std::string::npos || s.find("---") != std::string::npos;
}

bool looks_like_table_row(const std::string& line) {
    return trim(line).find('|') != std::string::npos;
}

bool is_heading(const std::string& line) {
    std::string s = trim(line);
    return !s.empty() && s[0] == '#';
}

std::string heading_text(const std::string& line) {
    std::string s = trim(line);
    while (!s.empty() && s[0] == '#') s.erase(0, 1);
    return trim(s);
}

bool parses_as_integer(const std::string& s) {
    std::string t = trim(s);
    if (t.empty()) return false;
    std::size_t i = (t[0] == '+' || t[0] == '-') ? 1 : 0;
    if (i == t.size()) return false;
    return std::all_of(t.begin() + i, t.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool parses_as_real(const std::string& s) {
    std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    errno = 0;
    std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && errno == 0;
}

}  // namespace

std::string sanitize_identifier(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (std::isalnum(c) || c == '_') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('_');
        }
    }
    if (out.empty()) out = "_";
    if (std::isdigit(static_cast<unsigned char>(out[0]))) out = "t_" + out;
    return out;
}

std::vector<std::string> whitespace_tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

ParseResult parse_document(const RawDocument& raw) {
    ParseResult result;
    auto lines = split_lines(raw.body);

    std::vector<std::string> prose_buffer;
    std::string last_heading;
    int table_index = 0;

    auto flush_prose = [&] {
        std::string joined;
        for (const auto& l : prose_buffer) {
            if (!joined.empty()) joined += "\n";
            joined += l;
        }
        if (!trim(joined).empty()) result.text_segments.push_back(joined);
        prose_buffer.clear();
    };

    std::size_t i = 0;
    while (i < lines.size()) {
        // A table starts at a pipe row immediately followed by a separator
        // and at least one data row.
        if (looks_like_table_row(lines[i]) && i + 1 < lines.size() &&
            is_separator_row(lines[i + 1]) && i + 2 < lines.size() &&
            looks_like_table_row(lines[i + 2]) && !is_separator_row(lines[i + 2])) {
            auto header = split_row(lines[i]);
            // Drop trailing all-empty header cells produced by stray pipes.
            while (header.size() > 1 && header.back().empty()) header.pop_back();
            bool header_empty = std::all_of(header.begin(), header.end(),
                                            [](const std::string& c) { return c.empty(); });
            if (header_empty) {
                result.warnings.push_back(
                    {raw.doc_id, "malformed table at line " + std::to_string(i + 1) +
                                     ": separator present but header width 0"});
                i += 2;
                while (i < lines.size() && looks_like_table_row(lines[i])) ++i;
                continue;
            }
            flush_prose();

            Table table;
            table.name = last_heading.empty()
                             ? sanitize_identifier(raw.doc_id) + "_" + std::to_string(table_index)
                             : sanitize_identifier(last_heading);
            table.table_id = raw.doc_id + "::table" + std::to_string(table_index);
            ++table_index;
            for (auto& h : header) table.column_names.push_back(h);

            i += 2;  // past header + separator
            while (i < lines.size() && looks_like_table_row(lines[i]) &&
                   !is_separator_row(lines[i])) {
                auto cells = split_row(lines[i]);
                cells.resize(table.column_names.size());  // pad/truncate to header width
                table.rows.push_back(std::move(cells));
                ++i;
            }
            result.tables.push_back(std::move(table));
            continue;
        }
        if (is_heading(lines[i])) last_heading = heading_text(lines[i]);
        prose_buffer.push_back(lines[i]);
        ++i;
    }
    flush_prose();
    return result;
}

std::string render_markdown(const Table& table) {
    std::string out = "|";
    for (const auto& c : table.column_names) out += " " + c + " |";
    out += "\n|";
    for (std::size_t i = 0; i < table.column_names.size(); ++i) out += " --- |";
    for (const auto& row : table.rows) {
        out += "\n|";
        for (const auto& cell : row) out += " " + cell + " |";
    }
    return out;
}

TableSchema derive_schema(const Table& table) {
    TableSchema schema;
    schema.table_name = table.name;
    for (std::size_t c = 0; c < table.column_names.size(); ++c) {
        Column col;
        col.name = sanitize_identifier(table.column_names[c]);
        bool all_int = true, all_real = true, any_value = false;
        std::set<std::string> seen;
        for (const auto& row : table.rows) {
            const std::string& cell = row[c];
            if (is_missing_value(cell)) continue;
            any_value = true;
            if (!parses_as_integer(cell)) all_int = false;
            if (!parses_as_real(cell)) all_real = false;
            if (col.examples.size() < 3 && seen.insert(cell).second) {
                col.examples.push_back(cell);
            }
        }
        if (!any_value) {
            col.inferred_type = "text";
        } else if (all_int) {
            col.inferred_type = "integer";
        } else if (all_real) {
            col.inferred_type = "real";
        } else {
            col.inferred_type = "text";
        }
        schema.columns.push_back(std::move(col));
    }
    return schema;
}

std::string TableSchema::to_json() const {
    ordered_json j;
    j["table_name"] = table_name;
    j["columns"] = ordered_json::array();
    for (const auto& col : columns) {
        j["columns"].push_back(ordered_json::array({col.name, col.inferred_type, col.examples}));
    }
    return j.dump(4);
}

std::vector<std::pair<std::size_t, std::size_t>> chunk_spans(std::size_t total,
                                                             const ChunkParams& params) {
    if (params.overlap >= params.chunk_size) {
        throw Error(ErrorKind::InvalidChunkParams, "overlap must be smaller than chunk_size");
    }
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (total == 0) return spans;
    if (total <= params.chunk_size) {
        spans.emplace_back(0, total);
        return spans;
    }
    const std::size_t stride = params.chunk_size - params.overlap;
    for (std::size_t start = 0; start + params.chunk_size < total; start += stride) {
        spans.emplace_back(start, start + params.chunk_size);
    }
    // Final chunk ends flush with the stream.
    spans.emplace_back(total - params.chunk_size, total);
    return spans;
}

std::vector<Chunk> chunk_text(const std::string& text, const ChunkOrigin& origin,
                              const std::string& id_prefix, const ChunkParams& params,
                              const TokenizerFn& tokenizer) {
    auto tokens = tokenizer(text);
    auto spans = chunk_spans(tokens.size(), params);
    std::vector<Chunk> chunks;
    chunks.reserve(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        Chunk c;
        c.chunk_id = id_prefix + "#" + std::to_string(i);
        c.origin = origin;
        c.span_start = spans[i].first;
        c.span_end = spans[i].second;
        std::string joined;
        for (std::size_t t = c.span_start; t < c.span_end; ++t) {
            if (!joined.empty()) joined += " ";
            joined += tokens[t];
        }
        c.text = std::move(joined);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

const Chunk* CorpusStore::find_chunk(const std::string& chunk_id) const {
    for (const auto& c : chunks) {
        if (c.chunk_id == chunk_id) return &c;
    }
    return nullptr;
}

const TableSchema* CorpusStore::schema_for_chunk(const std::string& chunk_id) const {
    auto it = schema_map.find(chunk_id);
    if (it == schema_map.end()) return nullptr;
    auto sit = schemas.find(it->second);
    return sit == schemas.end() ? nullptr : &sit->second;
}

CorpusStore build_corpus(const std::vector<RawDocument>& docs,
                         const std::vector<Table>& standalone_tables,
                         const BuildParams& params) {
    CorpusStore store;
    std::set<std::string> doc_ids;
    for (const auto& d : docs) {
        if (!doc_ids.insert(d.doc_id).second) {
            throw Error(ErrorKind::DuplicateDocId, "duplicate doc_id: " + d.doc_id);
        }
    }
    store.documents = docs;
    store.tables = standalone_tables;

    struct ProseSegment {
        std::string doc_id;
        std::string text;
        int index;
    };
    std::vector<ProseSegment> prose;

    for (const auto& d : docs) {
        auto parsed = parse_document(d);
        for (auto& w : parsed.warnings) store.warnings.push_back(std::move(w));
        int seg_index = 0;
        for (auto& seg : parsed.text_segments) {
            prose.push_back({d.doc_id, std::move(seg), seg_index++});
        }
        for (auto& t : parsed.tables) store.tables.push_back(std::move(t));
    }

    // Resolve sanitized-name collisions with _2, _3... suffixes in table order.
    std::map<std::string, int> name_counts;
    for (auto& t : store.tables) {
        int n = ++name_counts[t.name];
        if (n > 1) t.name += "_" + std::to_string(n);
    }

    for (const auto& t : store.tables) {
        store.schemas[t.table_id] = derive_schema(t);
    }

    for (const auto& p : prose) {
        ChunkOrigin origin{ChunkOrigin::Kind::text_document, p.doc_id};
        auto chunks = chunk_text(p.text, origin, p.doc_id + "::s" + std::to_string(p.index),
                                 params.chunking, params.tokenizer);
        for (auto& c : chunks) store.chunks.push_back(std::move(c));
    }
    for (const auto& t : store.tables) {
        ChunkOrigin origin{ChunkOrigin::Kind::table, t.table_id};
        auto chunks = chunk_text(render_markdown(t), origin, t.table_id, params.chunking,
                                 params.tokenizer);
        for (auto& c : chunks) {
            store.schema_map[c.chunk_id] = t.table_id;
            store.chunks.push_back(std::move(c));
        }
    }
    return store;
}

// --- CSV ---

Table parse_csv_table(const std::string& name_hint, const std::string& csv_body) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    std::size_t i = 0;
    const std::size_t n = csv_body.size();
    auto end_field = [&] {
        record.push_back(field);
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        bool all_empty = std::all_of(record.begin(), record.end(),
                                     [](const std::string& f) { return f.empty(); });
        if (!(record.size() == 1 && all_empty)) records.push_back(record);
        record.clear();
    };
    while (i < n) {
        char c = csv_body[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && csv_body[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallowed; record ends on \n
        } else if (c == '\n') {
            end_record();
        } else {
            field.push_back(c);
        }
        ++i;
    }
    if (!field.empty() || !record.empty()) end_record();

    if (records.empty()) {
        throw Error(ErrorKind::MalformedTable, "CSV table has no header row: " + name_hint);
    }
    Table t;
    t.name = sanitize_identifier(name_hint);
    t.table_id = "csv::" + t.name;
    t.column_names = records[0];
    for (std::size_t r = 1; r < records.size(); ++r) {
        auto row = records[r];
        row.resize(t.column_names.size());
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<RawDocument> read_corpus_dir(const std::string& dir,
                                         std::vector<Table>* csv_tables) {
    std::vector<RawDocument> docs;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        auto ext = p.extension().string();
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        if (ext == ".md" || ext == ".txt") {
            docs.push_back({p.stem().string(), p.string(), ss.str()});
        } else if (ext == ".csv" && csv_tables) {
            csv_tables->push_back(parse_csv_table(p.stem().string(), ss.str()));
        }
    }
    return docs;
}

// --- Persistence ---

namespace {

ordered_json origin_to_json(const ChunkOrigin& o) {
    return ordered_json{{"kind", o.is_table() ? "table" : "text"}, {"id", o.id}};
}

ChunkOrigin origin_from_json(const nlohmann::json& j) {
    ChunkOrigin o;
    o.kind = j.at("kind").get<std::string>() == "table" ? ChunkOrigin::Kind::table
                                                       : ChunkOrigin::Kind::text_document;
    o.id = j.at("id").get<std::string>();
    return o;
}

}  // namespace

void save_corpus(const CorpusStore& store, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "schemas");
    for (const auto& [table_id, schema] : store.schemas) {
        std::ofstream out(fs::path(dir) / "schemas" / (sanitize_identifier(table_id) + ".json"));
        out << schema.to_json() << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "chunks.jsonl");
        for (const auto& c : store.chunks) {
            ordered_json j{{"chunk_id", c.chunk_id},
                           {"text", c.text},
                           {"origin", origin_to_json(c.origin)},
                           {"span", {c.span_start, c.span_end}}};
            out << j.dump() << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "map.jsonl");
        for (const auto& [chunk_id, table_id] : store.schema_map) {
            out << ordered_json{{"chunk_id", chunk_id}, {"table_id", table_id}}.dump() << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "tables.jsonl");
        for (const auto& t : store.tables) {
            ordered_json j{{"table_id", t.table_id},
                           {"name", t.name},
                           {"columns", t.column_names},
                           {"rows", t.rows}};
            out << j.dump() << "\n";
        }
    }
}

CorpusStore load_corpus(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "chunks.jsonl")) {
        throw Error(ErrorKind::StoreNotFound, "store not found: " + dir);
    }
    CorpusStore store;
    {
        std::ifstream in(fs::path(dir) / "tables.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto j = nlohmann::json::parse(line);
            Table t;
            t.table_id = j.at("table_id");
            t.name = j.at("name");
            t.column_names = j.at("columns").get<std::vector<std::string>>();
            t.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
            store.tables.push_back(std::move(t));
        }
    }
    for (const auto& t : store.tables) store.schemas[t.table_id] = derive_schema(t);
    {
        std::ifstream in(fs::path(dir) / "chunks.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto j = nlohmann::json::parse(line);
            Chunk c;
            c.chunk_id = j.at("chunk_id");
            c.text = j.at("text");
            c.origin = origin_from_json(j.at("origin"));
            c.span_start = j.at("span")[0];
            c.span_end = j.at("span")[1];
            store.chunks.push_back(std::move(c));
        }
    }
    {
        std::ifstream in(fs::path(dir) / "map.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto j = nlohmann::json::parse(line);
            store.schema_map[j.at("chunk_id")] = j.at("table_id");
        }
    }
    return store;
}

}  // namespace tablerag
