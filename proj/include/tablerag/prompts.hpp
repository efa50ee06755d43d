#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tablerag/corpus.hpp"
#include "tablerag/llm.hpp"

namespace tablerag {
namespace prompts {

// Sentinel lines the classifier keys on; each builder embeds exactly one.
inline constexpr const char* kDecomposeSentinel = "Generate exactly ONE subquery at a time";
inline constexpr const char* kNl2SqlSentinel = "ANSI SQL, SELECT-only, no vendor functions";
inline constexpr const char* kComposeSentinel = "cross-validate the given two materials";
inline constexpr const char* kJudgeSentinel = "Rating: [[score]]";

inline constexpr const char* kAnswerMarker = "<Answer>:";

/// Decomposition system prompt; `table_content` is the seed table chunk
/// (possibly empty under the no-context-decomposition ablation).
std::string decompose(const std::string& table_content, const std::string& query);

/// Reminder appended after a protocol violation (content without the
/// answer marker and no tool call).
std::string decompose_format_reminder();

std::string nl2sql(const std::vector<TableSchema>& schemas, const std::string& subquery);

/// Intermediate-answer prompt. Content 1 is the retrieved chunk texts;
/// Content 2 carries schema set, generated SQL and serialized execution
/// result (all empty when the SQL path was skipped).
std::string compose(const std::vector<std::string>& chunk_texts,
                    const std::vector<TableSchema>& schemas,
                    const std::optional<std::string>& sql,
                    const std::optional<std::string>& sql_result_markdown,
                    const std::string& subquery);

std::string judge(const std::string& question, const std::string& gold,
                  const std::string& predicted);

/// Parses "<Answer>: payload" out of assistant content; trims whitespace
/// and surrounding brackets. Returns nullopt when the marker is absent.
std::optional<std::string> parse_answer_marker(const std::string& content);

/// Strips optional markdown code fences around a generated SQL statement.
std::string extract_sql(const std::string& model_response);

}  // namespace prompts
}  // namespace tablerag
