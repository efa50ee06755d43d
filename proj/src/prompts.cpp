#include "tablerag/prompts.hpp"

#include <sstream>

namespace tablerag {
namespace prompts {

std::string decompose(const std::string& table_content, const std::string& query) {
    std::ostringstream out;
    out << "Next, You will complete a table-related question answering task. Based on the "
           "provided materials such as the table content (in Markdown format), you need to "
           "analyze the Question. And try to decide whether the Question should be broken "
           "down into subquerys. After you have collected sufficient information, you need "
           "to generate comprehensive answers.\n"
           "You have a \"solve_subquery\" tool that can execute SQL-like operations on the "
           "table data. It accepts natural language questions as input.\n"
           "\n"
           "Instructions:\n"
           "1. Carefully analyze the user query through step-by-step reasoning.\n"
           "2. If the query requires multiple pieces of information, more than the given "
           "table content:\n"
           "   - Decompose the query into subqueries\n"
           "   - Process one subquery at a time\n"
           "   - Use \"solve_subquery\" tool to retrieve answers for each subquery\n"
           "3. If a query can be answered by table content, do not decompose it. And "
           "directly put the origin query into the \"solve_subquery\" tool.\n"
           "   The \"solve_subquery\" tool can solve complex subquery on table via one "
           "tool call.\n"
           "4. "
        << kDecomposeSentinel
        << ".\n"
           "5. Write out all terms completely - avoid using abbreviations.\n"
           "6. When you have sufficient information, provide the final answer in this "
           "format:\n"
           "   "
        << kAnswerMarker
        << " [your complete response]\n"
           "\n"
           "Table Content: "
        << table_content << "\n"
        << "Question: " << query << "\n"
        << "Please start!";
    return out.str();
}

std::string decompose_format_reminder() {
    std::ostringstream out;
    out << "Format reminder: either call the \"solve_subquery\" tool with exactly one "
           "subquery, or provide the final answer as:\n"
        << kAnswerMarker << " [your complete response]";
    return out.str();
}

std::string nl2sql(const std::vector<TableSchema>& schemas, const std::string& subquery) {
    std::ostringstream out;
    out << "You translate a natural language question into one executable SQL query.\n"
        << "Dialect: " << kNl2SqlSentinel << ".\n"
        << "Use only the tables and columns listed in the schemas below. Output the SQL "
           "statement and nothing else.\n"
           "\n"
           "Table schemas:\n";
    for (const auto& s : schemas) {
        out << s.to_json() << "\n";
    }
    out << "\nQuestion: " << subquery;
    return out.str();
}

std::string compose(const std::vector<std::string>& chunk_texts,
                    const std::vector<TableSchema>& schemas,
                    const std::optional<std::string>& sql,
                    const std::optional<std::string>& sql_result_markdown,
                    const std::string& subquery) {
    std::ostringstream out;
    out << "You are about to complete a table-based question answering task using the "
           "following two types of reference materials:\n"
           "\n"
           "# Content 1: Original content (table content is provided in Markdown format)\n";
    for (const auto& text : chunk_texts) {
        out << text << "\n\n";
    }
    if (chunk_texts.empty()) {
        out << "(no evidence retrieved)\n\n";
    }
    out << "# Content 2: NL2SQL related information and SQL execution results in the "
           "database\n"
           "# the user given table schema\n";
    for (const auto& s : schemas) {
        out << s.to_json() << "\n";
    }
    out << "\n# SQL generated based on the schema and the user question:\n"
        << (sql ? *sql : "") << "\n"
        << "\n# SQL execution results\n"
        << (sql_result_markdown ? *sql_result_markdown : "") << "\n"
        << "\nPlease answer the user's question based on the materials above.\n"
        << "User question: " << subquery << "\n"
        << "\n"
           "Note:\n"
           "1. The markdown table content in Content 1 may be not complete.\n"
           "2. You should "
        << kComposeSentinel
        << ":\n"
           "   - if the answers are same, you may directly output the answer.\n"
           "   - If the SQL shows error, such as \"SQL execution results\", try to answer "
           "solely based on Content 1.\n"
           "   - If the two material shows conflict, carefully evaluate both sources, "
           "explain the discrepancy, and provide your best assessment.";
    return out.str();
}

std::string judge(const std::string& question, const std::string& gold,
                  const std::string& predicted) {
    std::ostringstream out;
    out << "We would like to request your feedback on the performance of the AI assistant "
           "in response to the user question displayed above according to the gold answer. "
           "Please use the following listed aspects and their descriptions as evaluation "
           "criteria:\n"
           "    - Accuracy and Hallucinations: The assistant's answer is semantically "
           "consistent with the gold answer; The numerical value and order need to be "
           "accurate, and there should be no hallucinations.\n"
           "    - Completeness: Referring to the reference answers, the assistant's answer "
           "should contain all the key points needed to answer the user's question; "
           "further elaboration on these key points can be omitted.\n"
           "Please rate whether this answer is suitable for the question. Please note that "
           "the gold answer can be considered as a correct answer to the question.\n"
           "\n"
           "The assistant receives an overall score on a scale of 0 OR 1, where 0 means "
           "wrong and 1 means correct.\n"
           "Dirctly output a line indicating the score of the Assistant.\n"
           "\n"
           "PLEASE OUTPUT WITH THE FOLLOWING FORMAT, WHERE THE SCORE IS 0 OR 1 BY "
           "STRICTLY FOLLOWING THIS FORMAT: \"[[score]]\", FOR EXAMPLE \"Rating: [[1]]\":\n"
           "<start output>\n"
        << kJudgeSentinel
        << "\n"
           "<end output>\n"
           "\n"
           "[Question]\n"
        << question
        << "\n"
           "\n"
           "[Gold Answer]\n"
        << gold
        << "\n"
           "\n"
           "[The Start of Assistant's Predicted Answer]\n"
        << predicted << "\n";
    return out.str();
}

std::optional<std::string> parse_answer_marker(const std::string& content) {
    auto pos = content.find(kAnswerMarker);
    if (pos == std::string::npos) return std::nullopt;
    std::string payload = content.substr(pos + std::string(kAnswerMarker).size());
    auto b = payload.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string{};
    auto e = payload.find_last_not_of(" \t\r\n");
    payload = payload.substr(b, e - b + 1);
    if (payload.size() >= 2 && payload.front() == '[' && payload.back() == ']') {
        payload = payload.substr(1, payload.size() - 2);
        b = payload.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return std::string{};
        e = payload.find_last_not_of(" \t\r\n");
        payload = payload.substr(b, e - b + 1);
    }
    return payload;
}

std::string extract_sql(const std::string& model_response) {
    std::string s = model_response;
    auto fence = s.find("```");
    if (fence != std::string::npos) {
        auto line_end = s.find('\n', fence);
        auto close = s.find("```", line_end == std::string::npos ? fence + 3 : line_end);
        if (line_end != std::string::npos && close != std::string::npos) {
            s = s.substr(line_end + 1, close - line_end - 1);
        }
    }
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace prompts
}  // namespace tablerag
